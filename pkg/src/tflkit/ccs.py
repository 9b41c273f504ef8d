"""A small CCS fragment: guarded recursion, parallel composition only at the top."""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass

from .errors import FragmentViolation, ParseError, StateExplosion
from .models import DEFAULT_CAP, PetriNet


@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class Prefix:
    label: str
    body: object


@dataclass(frozen=True)
class Sum:
    left: object
    right: object


@dataclass(frozen=True)
class Par:
    left: object
    right: object


@dataclass(frozen=True)
class Name:
    name: str


NIL = Nil()


@dataclass(frozen=True)
class CcsProgram:
    defs: dict
    root: object

    def components(self):
        return flatten(self.root, Par)


def flatten(term, op):
    if isinstance(term, op):
        return flatten(term.left, op) + flatten(term.right, op)
    return [term]


# ------------------------------------------------------------ parsing

_TOK = re.compile(r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_']*)|(?P<zero>0)|(?P<sym>[.+|()=]))")


class _TermParser:
    def __init__(self, text, line, offset, path):
        self.toks = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOK.match(text, pos)
            if not m or m.end() == pos:
                raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r}", line,
                                 offset + pos + 1, path)
            kind = m.lastgroup
            self.toks.append((kind, m.group(kind), offset + m.start(kind) + 1))
            pos = m.end()
        self.toks.append(("eof", "", offset + len(text) + 1))
        self.i = 0
        self.line = line
        self.path = path

    def peek(self):
        return self.toks[self.i]

    def fail(self, msg):
        raise ParseError(msg, self.line, self.peek()[2], self.path)

    def par(self):
        t = self.sum()
        while self.peek()[1] == "|":
            self.i += 1
            t = Par(t, self.sum())
        return t

    def sum(self):
        t = self.pre()
        while self.peek()[1] == "+":
            self.i += 1
            t = Sum(t, self.pre())
        return t

    def pre(self):
        kind, val, _ = self.peek()
        if kind == "zero":
            self.i += 1
            return NIL
        if val == "(":
            self.i += 1
            t = self.par()
            if self.peek()[1] != ")":
                self.fail("expected ')'")
            self.i += 1
            return t
        if kind == "ident":
            self.i += 1
            if self.peek()[1] == ".":
                self.i += 1
                return Prefix(val, self.pre())
            return Name(val)
        self.fail(f"unexpected {val or 'end of line'!r}")

    def parse(self):
        t = self.par()
        if self.peek()[0] != "eof":
            self.fail(f"unexpected {self.peek()[1]!r}")
        return t


def parse_ccs(text: str, path=None, check=True) -> CcsProgram:
    defs = {}
    root = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            raise ParseError("expected: Name = term", no, 1, path)
        lhs, rhs = line.split("=", 1)
        name = lhs.strip()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", name):
            raise ParseError(f"bad definition name {name!r}", no, 1, path)
        term = _TermParser(rhs, no, len(lhs) + 1, path).parse()
        if name == "root":
            root = term
        else:
            if name in defs:
                raise ParseError(f"{name} is defined twice", no, 1, path)
            defs[name] = term
    if root is None:
        raise ParseError("a `root = ...` line is required", path=path)
    prog = CcsProgram(defs, root)
    if check:
        check_fragment(prog)
    return prog


def to_text(t) -> str:
    if isinstance(t, Nil):
        return "0"
    if isinstance(t, Name):
        return t.name
    if isinstance(t, Prefix):
        body = to_text(t.body)
        if isinstance(t.body, (Sum, Par)):
            body = f"({body})"
        return f"{t.label}.{body}"
    if isinstance(t, Sum):
        r = to_text(t.right)
        return f"{to_text(t.left)} + {'(' + r + ')' if isinstance(t.right, (Sum, Par)) else r}"
    if isinstance(t, Par):
        r = to_text(t.right)
        left = to_text(t.left)
        if isinstance(t.left, Sum):
            left = f"({left})"
        return f"{left} | {'(' + r + ')' if isinstance(t.right, (Sum, Par)) else r}"
    raise TypeError(t)


def format_ccs(prog: CcsProgram) -> str:
    lines = [f"{n} = {to_text(t)}" for n, t in prog.defs.items()]
    lines.append(f"root = {to_text(prog.root)}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------ fragment checks

def _names_in(t):
    if isinstance(t, Name):
        return {t.name}
    if isinstance(t, Prefix):
        return _names_in(t.body)
    if isinstance(t, (Sum, Par)):
        return _names_in(t.left) | _names_in(t.right)
    return set()


def _has_par(t):
    if isinstance(t, Par):
        return True
    if isinstance(t, Prefix):
        return _has_par(t.body)
    if isinstance(t, Sum):
        return _has_par(t.left) or _has_par(t.right)
    return False


def _unguarded(t):
    if isinstance(t, Name):
        return {t.name}
    if isinstance(t, (Sum, Par)):
        return _unguarded(t.left) | _unguarded(t.right)
    return set()


def check_fragment(prog: CcsProgram):
    for n, t in list(prog.defs.items()) + [("root", prog.root)]:
        for x in _names_in(t):
            if x not in prog.defs:
                raise FragmentViolation("undefined-name", f"{x} is used in {n} but never defined")
    for n, t in prog.defs.items():
        if _has_par(t):
            raise FragmentViolation("parallel-under-recursion", f"{n} uses '|'")
    for comp in prog.components():
        if _has_par(comp):
            raise FragmentViolation("parallel-under-recursion", "'|' below a prefix or a choice")
    # an unguarded cycle of names has no well-defined transitions
    graph = {n: _unguarded(t) for n, t in prog.defs.items()}
    state = {}

    def visit(n, stack):
        state[n] = 1
        for m in sorted(graph[n]):
            if state.get(m) == 1:
                raise FragmentViolation("unguarded", " -> ".join(stack + [n, m]))
            if m not in state:
                visit(m, stack + [n])
        state[n] = 2

    for n in sorted(graph):
        if n not in state:
            visit(n, [])


# ------------------------------------------------------------ semantics

def canonical(t) -> str:
    """Text of `t` with + and | operands flattened and sorted."""
    if isinstance(t, Nil):
        return "0"
    if isinstance(t, Name):
        return t.name
    if isinstance(t, Prefix):
        return f"{t.label}.{canonical(t.body)}"
    if isinstance(t, Sum):
        return "(" + " + ".join(sorted(canonical(x) for x in flatten(t, Sum))) + ")"
    if isinstance(t, Par):
        return "(" + " | ".join(sorted(canonical(x) for x in flatten(t, Par))) + ")"
    raise TypeError(t)


def steps(t, defs):
    """Outgoing (label, residual) pairs of a sequential term, in a fixed order."""
    if isinstance(t, Prefix):
        return [(t.label, t.body)]
    if isinstance(t, Sum):
        return steps(t.left, defs) + steps(t.right, defs)
    if isinstance(t, Name):
        return steps(defs[t.name], defs)
    return []


def component_lts(term, defs, cap=DEFAULT_CAP):
    """Reachable residuals of a sequential term: (states, transitions) keyed by canonical text."""
    start = canonical(term)
    terms = {start: term}
    trans = []
    queue = deque([start])
    while queue:
        key = queue.popleft()
        for label, nxt in steps(terms[key], defs):
            k2 = canonical(nxt)
            trans.append((key, label, k2))
            if k2 not in terms:
                if len(terms) >= cap:
                    raise StateExplosion("sequential residuals", cap)
                terms[k2] = nxt
                queue.append(k2)
    return list(terms), trans


def ccs_to_net(prog: CcsProgram, cap=DEFAULT_CAP) -> PetriNet:
    """One sequential component per parallel operand of the root; choices share an input place."""
    places, actions, arcs, marked = [], {}, [], []
    for k, comp in enumerate(prog.components()):
        states, trans = component_lts(comp, prog.defs, cap)
        pid = {s: f"p{k}_{i}" for i, s in enumerate(states)}
        places += [pid[s] for s in states]
        marked.append(pid[states[0]])
        for i, (src, label, dst) in enumerate(trans):
            a = f"t{k}_{i}"
            actions[a] = label
            arcs.append((pid[src], a))
            arcs.append((a, pid[dst]))
    return PetriNet.build(places, actions, arcs, marked)


# ------------------------------------------------------------ relabelling

def _map_labels(t, fn):
    if isinstance(t, Prefix):
        return Prefix(fn(t.label), _map_labels(t.body, fn))
    if isinstance(t, Sum):
        return Sum(_map_labels(t.left, fn), _map_labels(t.right, fn))
    if isinstance(t, Par):
        return Par(_map_labels(t.left, fn), _map_labels(t.right, fn))
    return t


def _map_names(t, fn):
    if isinstance(t, Name):
        return Name(fn(t.name))
    if isinstance(t, Prefix):
        return Prefix(t.label, _map_names(t.body, fn))
    if isinstance(t, Sum):
        return Sum(_map_names(t.left, fn), _map_names(t.right, fn))
    if isinstance(t, Par):
        return Par(_map_names(t.left, fn), _map_names(t.right, fn))
    return t


def _reachable_names(t, defs):
    seen = set()
    todo = list(_names_in(t))
    while todo:
        n = todo.pop()
        if n not in seen:
            seen.add(n)
            todo.extend(_names_in(defs[n]))
    return seen


def _split_shared(prog):
    """Give every parallel component its own copy of the definitions it shares with another."""
    comps = prog.components()
    reach = [_reachable_names(c, prog.defs) for c in comps]
    shared = {n for i, r in enumerate(reach) for n in r if any(n in r2 for j, r2 in enumerate(reach) if j != i)}
    if not shared:
        return prog
    taken = set(prog.defs)

    def fresh(base):
        k = 1
        while f"{base}_{k}" in taken:
            k += 1
        taken.add(f"{base}_{k}")
        return f"{base}_{k}"

    defs = {n: t for n, t in prog.defs.items() if n not in shared}
    new_comps = []
    for c, r in zip(comps, reach):
        ren = {n: fresh(n) for n in sorted(r & shared)}
        fn = lambda n, ren=ren: ren.get(n, n)
        for n in r:
            target = ren.get(n, n)
            defs[target] = _map_names(prog.defs[n], fn)
        new_comps.append(_map_names(c, fn))
    root = new_comps[0]
    for c in new_comps[1:]:
        root = Par(root, c)
    return CcsProgram(defs, root)


def relabel_theta(prog: CcsProgram):
    """Rename clashing actions apart so that the folded system is deterministic and free of
    auto-concurrency. Returns (program, inverse) with inverse mapping new labels to old ones."""
    prog = _split_shared(prog)
    occ = []  # original label per prefix occurrence

    def tag(label):
        occ.append(label)
        return f"{len(occ) - 1}"

    defs = {n: _map_labels(t, tag) for n, t in sorted(prog.defs.items())}
    comps = [_map_labels(c, tag) for c in prog.components()]
    clash = set()

    def initials(t, seen=frozenset()):
        if isinstance(t, Prefix):
            return [t.label]
        if isinstance(t, Sum):
            return initials(t.left, seen) + initials(t.right, seen)
        if isinstance(t, Name) and t.name not in seen:
            return initials(defs[t.name], seen | {t.name})
        return []

    def residuals(t):
        if isinstance(t, Prefix):
            return [t.body] + residuals(t.body)
        if isinstance(t, Sum):
            return residuals(t.left) + residuals(t.right)
        return []

    candidates = list(comps) + list(defs.values())
    for t in list(candidates):
        candidates += residuals(t)
    for t in candidates:
        by_label = {}
        for o in initials(t):
            by_label.setdefault(occ[int(o)], set()).add(o)
        for group in by_label.values():
            if len(group) > 1:
                clash |= group

    def occurrences(t):
        out = set()
        for n in _reachable_names(t, defs) | {None}:
            body = t if n is None else defs[n]
            out |= _prefix_tags(body)
        return out

    per_comp = [occurrences(c) for c in comps]
    for i in range(len(comps)):
        for j in range(i + 1, len(comps)):
            li = {occ[int(o)] for o in per_comp[i]}
            lj = {occ[int(o)] for o in per_comp[j]}
            for lab in li & lj:
                clash |= {o for o in per_comp[i] | per_comp[j] if occ[int(o)] == lab}
    clashing_labels = {occ[int(o)] for o in clash}
    used = set(occ)
    final = {}
    counters = {}
    for k, lab in enumerate(occ):
        if lab not in clashing_labels:
            final[str(k)] = lab
            continue
        n = counters.get(lab, 0)
        while True:
            n += 1
            cand = f"{lab}_{n}"
            if cand not in used:
                break
        counters[lab] = n
        used.add(cand)
        final[str(k)] = cand
    fn = lambda o: final[o]
    new_defs = {n: _map_labels(t, fn) for n, t in defs.items()}
    new_comps = [_map_labels(c, fn) for c in comps]
    root = new_comps[0]
    for c in new_comps[1:]:
        root = Par(root, c)
    inverse = {final[str(k)]: lab for k, lab in enumerate(occ)}
    return CcsProgram(new_defs, root), inverse


def _prefix_tags(t):
    if isinstance(t, Prefix):
        return {t.label} | _prefix_tags(t.body)
    if isinstance(t, (Sum, Par)):
        return _prefix_tags(t.left) | _prefix_tags(t.right)
    return set()
