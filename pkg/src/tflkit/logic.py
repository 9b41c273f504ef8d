"""Formulas of the fixpoint logic: syntax tree, parser, printer and normal forms."""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError, PolarityError, UnboundVariable


class Formula:
    __slots__ = ()

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Tt(Formula):
    pass


@dataclass(frozen=True)
class Ff(Formula):
    pass


@dataclass(frozen=True)
class Var(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Modal(Formula):
    """Labelled modality. `kind` is "c" (causal) or "nc" (non-causal)."""
    box: bool
    label: str
    kind: str
    body: Formula


@dataclass(frozen=True)
class Co(Formula):
    """Trace modality: diamond when `box` is False."""
    box: bool
    body: Formula


@dataclass(frozen=True)
class Fix(Formula):
    greatest: bool
    var: str
    body: Formula


TT, FF = Tt(), Ff()


def dia(label, body, kind=None):
    if kind is None:
        return Or(Modal(False, label, "c", body), Modal(False, label, "nc", body))
    return Modal(False, label, kind, body)


def box(label, body, kind=None):
    if kind is None:
        return And(Modal(True, label, "c", body), Modal(True, label, "nc", body))
    return Modal(True, label, kind, body)


def mu(var, body):
    return Fix(False, var, body)


def nu(var, body):
    return Fix(True, var, body)


def children(f):
    if isinstance(f, (And, Or)):
        return (f.left, f.right)
    if isinstance(f, (Not, Modal, Co, Fix)):
        return (f.body,)
    return ()


def plain_modality(f):
    """(box, label, body) if `f` is the unsubscripted modality pattern, else None."""
    if isinstance(f, Or):
        a, b = f.left, f.right
        if isinstance(a, Modal) and isinstance(b, Modal) and not a.box and not b.box \
                and a.label == b.label and a.kind == "c" and b.kind == "nc" and a.body == b.body:
            return (False, a.label, a.body)
    if isinstance(f, And):
        a, b = f.left, f.right
        if isinstance(a, Modal) and isinstance(b, Modal) and a.box and b.box \
                and a.label == b.label and a.kind == "c" and b.kind == "nc" and a.body == b.body:
            return (True, a.label, a.body)
    return None


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym><|>|\[|\]|\(|\)|&|\||!|\.|,|-)
""", re.VERBOSE)

_KEYWORDS = {"tt", "ff", "mu", "nu", "co"}


def _tokenize(text):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", 1, pos + 1)
        if m.lastgroup != "ws":
            toks.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text, alphabet):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.alphabet = None if alphabet is None else sorted(alphabet)

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, 1, tok[2] + 1)

    def expect(self, value):
        tok = self.peek()
        if tok[1] != value:
            self.error(f"expected {value!r}, found {tok[1] or 'end of input'!r}")
        self.i += 1
        return tok

    def formula(self):
        tok = self.peek()
        if tok[1] in ("mu", "nu"):
            return self.binder()
        return self.disj()

    def binder(self):
        kw = self.peek()[1]
        self.i += 1
        var = self.peek()
        if var[0] != "ident" or var[1] in _KEYWORDS:
            self.error("expected a variable name after the binder")
        self.i += 1
        self.expect(".")
        body = self.formula()
        return Fix(kw == "nu", var[1], body)

    def disj(self):
        f = self.conj()
        while self.peek()[1] == "|":
            self.i += 1
            f = Or(f, self.conj())
        return f

    def conj(self):
        f = self.unary()
        while self.peek()[1] == "&":
            self.i += 1
            f = And(f, self.unary())
        return f

    def _suffix(self, close_tok):
        # a subscript must touch the closing bracket: `<a>c` vs `<a> c`
        nxt = self.peek()
        end = close_tok[2] + 1
        if nxt[0] == "ident" and nxt[2] == end and nxt[1] in ("c", "nc"):
            self.i += 1
            return nxt[1]
        return None

    def labels(self, closer):
        tok = self.peek()
        if tok[1] == "co":
            self.i += 1
            self.expect(closer)
            return "co"
        negate = False
        if tok[1] == "-":
            negate = True
            self.i += 1
        names = []
        while self.peek()[0] == "ident":
            names.append(self.peek()[1])
            self.i += 1
            if self.peek()[1] == ",":
                self.i += 1
            else:
                break
        if not negate and not names:
            self.error("expected an action label")
        if negate:
            if self.alphabet is None:
                self.error("complemented label sets need an alphabet")
            names = [a for a in self.alphabet if a not in names]
        return names

    def unary(self):
        tok = self.peek()
        kind, val = tok[0], tok[1]
        if val == "!":
            self.i += 1
            return Not(self.unary())
        if val == "(":
            self.i += 1
            f = self.formula()
            self.expect(")")
            return f
        if val in ("mu", "nu"):
            return self.binder()
        if val in ("<", "["):
            is_box = val == "["
            closer = "]" if is_box else ">"
            self.i += 1
            labels = self.labels(closer)
            if labels == "co":
                return Co(is_box, self.unary())
            close_tok = self.expect(closer)
            sub = self._suffix(close_tok)
            body = self.unary()
            parts = [(box if is_box else dia)(a, body, sub) for a in labels]
            if not parts:
                return TT if is_box else FF
            f = parts[0]
            for p in parts[1:]:
                f = And(f, p) if is_box else Or(f, p)
            return f
        if kind == "ident":
            self.i += 1
            if val == "tt":
                return TT
            if val == "ff":
                return FF
            if val in _KEYWORDS:
                self.error(f"unexpected keyword {val!r}", tok)
            return Var(val)
        self.error(f"unexpected {val or 'end of input'!r}")


def parse(text: str, alphabet=None, closed=True) -> Formula:
    """Parse the ASCII syntax. Binders are renamed apart; polarity is checked."""
    p = _Parser(text, alphabet)
    f = p.formula()
    if p.peek()[0] != "eof":
        p.error(f"unexpected {p.peek()[1]!r}")
    f = rename_apart(f)
    check_polarity(f)
    if closed:
        free = free_vars(f)
        if free:
            raise UnboundVariable(f"unbound variable(s): {', '.join(sorted(free))}")
    return f


def free_vars(f, bound=frozenset()):
    if isinstance(f, Var):
        return set() if f.name in bound else {f.name}
    if isinstance(f, Fix):
        return free_vars(f.body, bound | {f.var})
    out = set()
    for c in children(f):
        out |= free_vars(c, bound)
    return out


def rename_apart(f):
    """Give every binder a distinct variable name, keeping free names intact."""
    used = set(free_vars(f))

    def fresh(name):
        if name not in used:
            used.add(name)
            return name
        k = 1
        while f"{name}{k}" in used:
            k += 1
        used.add(f"{name}{k}")
        return f"{name}{k}"

    def go(g, env):
        if isinstance(g, Var):
            return Var(env.get(g.name, g.name))
        pm = plain_modality(g)
        if pm is not None:
            # both halves share one body, so rename it once
            is_box, label, body = pm
            return (box if is_box else dia)(label, go(body, env))
        if isinstance(g, Fix):
            new = fresh(g.var)
            return Fix(g.greatest, new, go(g.body, {**env, g.var: new}))
        return _rebuild(g, [go(c, env) for c in children(g)])

    return go(f, {})


def _rebuild(f, kids):
    if isinstance(f, And):
        return And(kids[0], kids[1])
    if isinstance(f, Or):
        return Or(kids[0], kids[1])
    if isinstance(f, Not):
        return Not(kids[0])
    if isinstance(f, Modal):
        return Modal(f.box, f.label, f.kind, kids[0])
    if isinstance(f, Co):
        return Co(f.box, kids[0])
    if isinstance(f, Fix):
        return Fix(f.greatest, f.var, kids[0])
    return f


def check_polarity(f):
    """Bound variables must sit under an even number of negations."""

    def go(g, neg, binders):
        if isinstance(g, Var):
            if g.name in binders and (neg - binders[g.name]) % 2:
                raise PolarityError(f"variable {g.name} occurs under an odd number of negations")
            return
        if isinstance(g, Not):
            go(g.body, neg + 1, binders)
            return
        if isinstance(g, Fix):
            go(g.body, neg, {**binders, g.var: neg})
            return
        for c in children(g):
            go(c, neg, binders)

    go(f, 0, {})


# ---------------------------------------------------------------- printing

def to_text(f) -> str:
    pm = plain_modality(f)
    if pm is not None:
        is_box, label, body = pm
        op = f"[{label}]" if is_box else f"<{label}>"
        return f"{op} {_atom(body)}"
    if isinstance(f, Tt):
        return "tt"
    if isinstance(f, Ff):
        return "ff"
    if isinstance(f, Var):
        return f.name
    if isinstance(f, Not):
        return "!" + _atom(f.body)
    if isinstance(f, And):
        return f"{_atom(f.left)} & {_atom(f.right)}"
    if isinstance(f, Or):
        return f"{_atom(f.left)} | {_atom(f.right)}"
    if isinstance(f, Modal):
        op = f"[{f.label}]{f.kind}" if f.box else f"<{f.label}>{f.kind}"
        return f"{op} {_atom(f.body)}"
    if isinstance(f, Co):
        return ("[co] " if f.box else "<co> ") + _atom(f.body)
    if isinstance(f, Fix):
        return f"{'nu' if f.greatest else 'mu'} {f.var}. {to_text(f.body)}"
    raise TypeError(f)


def _atom(f):
    s = to_text(f)
    if isinstance(f, (Tt, Ff, Var)) or plain_modality(f) is not None:
        return s
    if isinstance(f, (Not, Modal, Co)):
        return s
    return f"({s})"


# ---------------------------------------------------------------- normal forms

def pnf(f, positive=True, flipped=frozenset()):
    """Positive normal form: negation only in front of free variables."""
    if isinstance(f, Var):
        pos = positive != (f.name in flipped)
        return f if pos else Not(f)
    if isinstance(f, Not):
        return pnf(f.body, not positive, flipped)
    if isinstance(f, Tt):
        return TT if positive else FF
    if isinstance(f, Ff):
        return FF if positive else TT
    if isinstance(f, And):
        l, r = pnf(f.left, positive, flipped), pnf(f.right, positive, flipped)
        return And(l, r) if positive else Or(l, r)
    if isinstance(f, Or):
        l, r = pnf(f.left, positive, flipped), pnf(f.right, positive, flipped)
        return Or(l, r) if positive else And(l, r)
    if isinstance(f, Modal):
        return Modal(f.box != (not positive), f.label, f.kind, pnf(f.body, positive, flipped))
    if isinstance(f, Co):
        return Co(f.box != (not positive), pnf(f.body, positive, flipped))
    if isinstance(f, Fix):
        if positive:
            return Fix(f.greatest, f.var, pnf(f.body, True, flipped - {f.var}))
        return Fix(not f.greatest, f.var, pnf(f.body, False, flipped | {f.var}))
    raise TypeError(f)


def fl_closure(f):
    """Subformulas in pre-order without duplicates."""
    out = []
    seen = set()

    def go(g):
        if g in seen:
            return
        seen.add(g)
        out.append(g)
        for c in children(g):
            go(c)

    go(f)
    return out


def node_count(f):
    return 1 + sum(node_count(c) for c in children(f))


def modal_depth(f):
    d = max((modal_depth(c) for c in children(f)), default=0)
    if isinstance(f, (Modal, Co)):
        return d + 1
    if plain_modality(f) is not None:
        return d  # the pattern's two halves already count one level
    return d


FRAGMENTS = ("HML", "LMU", "TLMU", "CLMU", "TFL")


def fragment_of(f) -> str:
    uses = {"fix": False, "co": False, "sub": False}

    def go(g):
        pm = plain_modality(g)
        if pm is not None:
            go(pm[2])
            return
        if isinstance(g, Fix):
            uses["fix"] = True
        elif isinstance(g, Co):
            uses["co"] = True
        elif isinstance(g, Modal):
            uses["sub"] = True
        for c in children(g):
            go(c)

    go(f)
    if uses["co"] and uses["sub"]:
        return "TFL"
    if uses["sub"]:
        return "CLMU"
    if uses["co"]:
        return "TLMU"
    if uses["fix"]:
        return "LMU"
    return "HML"


def fragment_leq(a, b) -> bool:
    """Inclusion between fragments."""
    below = {
        "HML": {"HML", "LMU", "TLMU", "CLMU", "TFL"},
        "LMU": {"LMU", "TLMU", "CLMU", "TFL"},
        "TLMU": {"TLMU", "TFL"},
        "CLMU": {"CLMU", "TFL"},
        "TFL": {"TFL"},
    }
    return b in below[a]


def binder_table(f):
    """Variable name -> the fixpoint node binding it (names are assumed distinct)."""
    table = {}
    for g in fl_closure(f):
        if isinstance(g, Fix):
            table[g.var] = g
    return table


def binder_depths(f):
    """Variable name -> number of fixpoint binders strictly enclosing its binder."""
    depths = {}

    def go(g, d):
        if isinstance(g, Fix):
            depths[g.var] = d
            go(g.body, d + 1)
            return
        for c in children(g):
            go(c, d)

    go(f, 0)
    return depths
