"""Transition systems with independence, safe Petri nets, event structures."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .errors import ModelError, NotARun, StateExplosion, UnsafeNet

DEFAULT_CAP = 200_000


class Transition(NamedTuple):
    id: str
    src: str
    label: str
    dst: str


def _pair(a, b):
    return frozenset((a, b))


@dataclass(frozen=True)
class Tsi:
    states: tuple
    initial: str
    transitions: tuple
    indep: frozenset

    def __post_init__(self):
        states = set(self.states)
        if len(states) != len(self.states):
            raise ModelError("duplicate state ids")
        if self.initial not in states:
            raise ModelError(f"initial state {self.initial!r} is not declared")
        by_id = {}
        triples = {}
        out = {s: [] for s in self.states}
        inc = {s: [] for s in self.states}
        for t in self.transitions:
            if t.id in by_id:
                raise ModelError(f"duplicate transition id {t.id!r}")
            for end in (t.src, t.dst):
                if end not in states:
                    raise ModelError(f"transition {t.id} refers to unknown state {end!r}")
            key = (t.src, t.label, t.dst)
            if key in triples:
                raise ModelError(f"transitions {triples[key]} and {t.id} are the same triple")
            triples[key] = t.id
            by_id[t.id] = t
            out[t.src].append(t)
            inc[t.dst].append(t)
        for p in self.indep:
            if len(p) != 2:
                raise ModelError(f"independence must be irreflexive: {sorted(p)}")
            for t in p:
                if t not in by_id:
                    raise ModelError(f"independence refers to unknown transition {t!r}")
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_out", {s: tuple(v) for s, v in out.items()})
        object.__setattr__(self, "_in", {s: tuple(v) for s, v in inc.items()})

    @classmethod
    def build(cls, states, initial, transitions, indep=()):
        ts = tuple(Transition(*t) for t in transitions)
        return cls(tuple(states), initial, ts, frozenset(_pair(a, b) for a, b in indep))

    def trans(self, tid) -> Transition:
        return self._by_id[tid]

    def out(self, state):
        return self._out[state]

    def incoming(self, state):
        return self._in[state]

    def independent(self, t, u) -> bool:
        return _pair(t, u) in self.indep

    @property
    def alphabet(self):
        return sorted({t.label for t in self.transitions})

    def is_acyclic(self) -> bool:
        indeg = {s: 0 for s in self.states}
        for t in self.transitions:
            indeg[t.dst] += 1
        queue = deque(s for s, d in indeg.items() if d == 0)
        seen = 0
        while queue:
            s = queue.popleft()
            seen += 1
            for t in self.out(s):
                indeg[t.dst] -= 1
                if indeg[t.dst] == 0:
                    queue.append(t.dst)
        return seen == len(self.states)


@dataclass
class ValidationReport:
    kind: str
    checks: dict
    prec: frozenset = frozenset()
    classes: tuple = ()

    @property
    def ok(self) -> bool:
        return all(not w for w in self.checks.values())

    def to_dict(self):
        return {
            "kind": self.kind,
            "ok": self.ok,
            "checks": {
                name: {"status": "FAIL" if w else "PASS", "witnesses": [_jsonable(x) for x in w]}
                for name, w in self.checks.items()
            },
        }


def _jsonable(x):
    if isinstance(x, (frozenset, set)):
        return sorted(_jsonable(y) for y in x)
    if isinstance(x, (tuple, list)):
        return [_jsonable(y) for y in x]
    return x


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra

    def groups(self):
        out = {}
        for x in self.parent:
            out.setdefault(self.find(x), set()).add(x)
        return tuple(sorted((frozenset(g) for g in out.values()), key=lambda g: min(g)))


def precedence_pairs(tsi: Tsi) -> frozenset:
    """Ordered pairs (t, w) where w is the far side of an independence square on t."""
    pairs = set()
    for p in tsi.indep:
        a, b = tuple(p)
        for t, u in ((tsi.trans(a), tsi.trans(b)), (tsi.trans(b), tsi.trans(a))):
            if t.src != u.src:
                continue
            for v in tsi.out(t.dst):
                if v.label != u.label or not tsi.independent(t.id, v.id):
                    continue
                for w in tsi.out(u.dst):
                    if w.label == t.label and w.dst == v.dst and tsi.independent(u.id, w.id):
                        pairs.add((t.id, w.id))
    return frozenset(pairs)


def equivalence_classes(tsi: Tsi, prec=None):
    prec = precedence_pairs(tsi) if prec is None else prec
    uf = _UnionFind([t.id for t in tsi.transitions])
    for a, b in prec:
        uf.union(a, b)
    return uf.groups()


def _closes_square(tsi, t, u):
    for v in tsi.out(t.dst):
        if v.label != u.label or not tsi.independent(t.id, v.id):
            continue
        for w in tsi.out(u.dst):
            if w.label == t.label and w.dst == v.dst and tsi.independent(u.id, w.id):
                return True
    return False


def _opens_square(tsi, t, v):
    for u in tsi.out(t.src):
        if u.label != v.label or not tsi.independent(t.id, u.id):
            continue
        for w in tsi.out(u.dst):
            if w.label == t.label and w.dst == v.dst and tsi.independent(u.id, w.id):
                return True
    return False


def validate_tsi(tsi: Tsi) -> ValidationReport:
    prec = precedence_pairs(tsi)
    classes = equivalence_classes(tsi, prec)
    a1, a2, a3, a4 = [], [], [], []
    for cls in classes:
        by_key = {}
        for tid in sorted(cls):
            t = tsi.trans(tid)
            by_key.setdefault((t.src, t.label), []).append(tid)
        for ids in by_key.values():
            if len(ids) > 1:
                a1.append((ids[0], ids[1]))
        members = sorted(cls)
        ref = _indep_set(tsi, members[0])
        for other in members[1:]:
            if _indep_set(tsi, other) != ref:
                a4.append((members[0], other))
    for p in sorted(tsi.indep, key=sorted):
        a, b = sorted(p)
        for t, u in ((tsi.trans(a), tsi.trans(b)), (tsi.trans(b), tsi.trans(a))):
            if t.src == u.src and t.id < u.id and not _closes_square(tsi, t, u):
                a2.append((t.id, u.id))
            if t.dst == u.src and not _opens_square(tsi, t, u):
                a3.append((t.id, u.id))
    checks = {"A1": a1, "A2": a2, "A3": a3, "A4": a4}
    return ValidationReport("tsi", checks, prec, classes)


def _indep_set(tsi, tid):
    return frozenset(x for p in tsi.indep if tid in p for x in p if x != tid)


@dataclass(frozen=True)
class PetriNet:
    places: tuple
    actions: dict  # id -> label
    pre: dict  # action -> frozenset of places
    post: dict
    initial: frozenset

    @classmethod
    def build(cls, places, actions, arcs, marked):
        """`arcs` holds (source, target) pairs between places and actions."""
        places = tuple(places)
        actions = dict(actions)
        pset = set(places)
        pre = {a: set() for a in actions}
        post = {a: set() for a in actions}
        for x, y in arcs:
            if x in pset and y in actions:
                pre[y].add(x)
            elif x in actions and y in pset:
                post[x].add(y)
            else:
                raise ModelError(f"arc {x} -> {y} must join a place and an action")
        for p in marked:
            if p not in pset:
                raise ModelError(f"marked place {p!r} is not declared")
        return cls(places, actions,
                   {a: frozenset(v) for a, v in pre.items()},
                   {a: frozenset(v) for a, v in post.items()},
                   frozenset(marked))

    def postset_of_place(self, p):
        return frozenset(a for a, pre in self.pre.items() if p in pre)


def marking_id(m) -> str:
    return "{" + ",".join(sorted(m)) + "}"


def _explore_net(net: PetriNet, cap, strict=True):
    order = sorted(net.actions)
    seen = {net.initial: 0}
    queue = deque([net.initial])
    firings = []
    unsafe = []
    while queue:
        m = queue.popleft()
        for a in order:
            pre = net.pre[a]
            if not pre <= m:
                continue
            rest = m - pre
            if rest & net.post[a]:
                if strict:
                    raise UnsafeNet(m, a)
                unsafe.append((marking_id(m), a))
                continue
            m2 = rest | net.post[a]
            firings.append((m, a, m2))
            if m2 not in seen:
                if len(seen) >= cap:
                    raise StateExplosion("reachable markings", cap)
                seen[m2] = len(seen)
                queue.append(m2)
    return seen, firings, unsafe


def concurrent_actions(net: PetriNet, markings) -> frozenset:
    pairs = set()
    acts = sorted(net.actions)
    for i, a in enumerate(acts):
        na = net.pre[a] | net.post[a]
        for b in acts[i + 1:]:
            if na & (net.pre[b] | net.post[b]):
                continue
            both = net.pre[a] | net.pre[b]
            if any(both <= m for m in markings):
                pairs.add(_pair(a, b))
    return frozenset(pairs)


def validate_net(net: PetriNet, cap=DEFAULT_CAP) -> ValidationReport:
    checks = {"initial-marking": [p for p in sorted(net.initial) if p not in set(net.places)],
              "safety": []}
    _, _, unsafe = _explore_net(net, cap, strict=False)
    checks["safety"] = unsafe
    return ValidationReport("net", checks)


def net_to_tsi(net: PetriNet, cap=DEFAULT_CAP) -> Tsi:
    seen, firings, _ = _explore_net(net, cap)
    markings = sorted(seen, key=seen.get)
    states = [marking_id(m) for m in markings]
    acts_of = {}
    order = []
    for m, a, m2 in firings:
        key = (marking_id(m), net.actions[a], marking_id(m2))
        if key not in acts_of:
            acts_of[key] = set()
            order.append(key)
        acts_of[key].add(a)
    ids = {key: f"t{i}" for i, key in enumerate(order)}
    par = concurrent_actions(net, markings)
    partners = {a: {x for p in par if a in p for x in p if x != a} for a in net.actions}
    for key in order:
        acts = sorted(acts_of[key])
        for other in acts[1:]:
            # one transition cannot carry two different independence profiles
            if partners[other] - {acts[0]} != partners[acts[0]] - {other}:
                raise ModelError(f"actions {acts[0]} and {other} both make the step {key[0]} -{key[1]}-> "
                                 f"{key[2]} but are concurrent with different actions; give them distinct labels")
    by_action = {}
    for key, acts in acts_of.items():
        for a in acts:
            by_action.setdefault(a, []).append(ids[key])
    indep = set()
    for p in par:
        a, b = tuple(p)
        for x in by_action.get(a, ()):
            for y in by_action.get(b, ()):
                if x != y:
                    indep.add(_pair(x, y))
    trans = tuple(Transition(ids[k], k[0], k[1], k[2]) for k in order)
    return Tsi(tuple(states), marking_id(net.initial), trans, frozenset(indep))


@dataclass(frozen=True)
class EventStructure:
    labels: dict  # event -> label
    causality: frozenset  # strict pairs (e, e2) meaning e < e2, as declared
    conflict: frozenset  # frozensets of size 2 (size 1 marks a reflexive declaration)

    @classmethod
    def build(cls, events, causal=(), conflict=()):
        labels = dict(events)
        for a, b in causal:
            if a not in labels or b not in labels:
                raise ModelError(f"causality {a} < {b} refers to an unknown event")
        for a, b in conflict:
            if a not in labels or b not in labels:
                raise ModelError(f"conflict {a} # {b} refers to an unknown event")
        return cls(labels, frozenset(causal), frozenset(_pair(a, b) for a, b in conflict))

    @property
    def events(self):
        return sorted(self.labels)

    def strict_below(self):
        """Transitive closure of the declared causality: event -> set of strict causes."""
        below = {e: set() for e in self.labels}
        for a, b in self.causality:
            below[b].add(a)
        changed = True
        while changed:
            changed = False
            for e in below:
                extra = set()
                for c in below[e]:
                    extra |= below[c]
                if not extra <= below[e]:
                    below[e] |= extra
                    changed = True
        return below

    def in_conflict(self, a, b) -> bool:
        return _pair(a, b) in self.conflict

    def concurrent(self, a, b, below=None) -> bool:
        below = self.strict_below() if below is None else below
        return a != b and a not in below[b] and b not in below[a] and not self.in_conflict(a, b)


def validate_es(es: EventStructure) -> ValidationReport:
    below = es.strict_below()
    checks = {"irreflexive-conflict": sorted(next(iter(p)) for p in es.conflict if len(p) == 1),
              "partial-order": sorted(e for e in es.labels if e in below[e]),
              "conflict-inheritance": [],
              "finite-causes": []}
    for p in sorted(es.conflict, key=sorted):
        if len(p) != 2:
            continue
        a, b = sorted(p)
        for e1, e2 in ((a, b), (b, a)):
            for e3 in es.events:
                if e2 in below[e3] and not es.in_conflict(e1, e3):
                    checks["conflict-inheritance"].append((e1, e2, e3))
    return ValidationReport("es", checks)


def configuration_id(c) -> str:
    return "{" + ",".join(sorted(c)) + "}"


def enabled_events(es, conf, below):
    return [e for e in es.events
            if e not in conf and below[e] <= conf and not any(es.in_conflict(e, x) for x in conf)]


def es_to_tsi(es: EventStructure, cap=DEFAULT_CAP) -> Tsi:
    below = es.strict_below()
    start = frozenset()
    seen = {start: 0}
    queue = deque([start])
    steps = []
    while queue:
        c = queue.popleft()
        for e in enabled_events(es, c, below):
            c2 = c | {e}
            steps.append((c, e, c2))
            if c2 not in seen:
                if len(seen) >= cap:
                    raise StateExplosion("configurations", cap)
                seen[c2] = len(seen)
                queue.append(c2)
    trans = tuple(Transition(f"t{i}", configuration_id(c), es.labels[e], configuration_id(c2))
                  for i, (c, e, c2) in enumerate(steps))
    indep = set()
    for i, (_, e1, _) in enumerate(steps):
        for j in range(i + 1, len(steps)):
            if es.concurrent(e1, steps[j][1], below):
                indep.add(_pair(f"t{i}", f"t{j}"))
    states = tuple(configuration_id(c) for c in sorted(seen, key=seen.get))
    return Tsi(states, configuration_id(start), trans, frozenset(indep))


@dataclass(frozen=True)
class LabelledPoset:
    labels: tuple  # element i carries labels[i]
    order: frozenset  # strict pairs (i, j), transitively closed

    @property
    def size(self):
        return len(self.labels)


def check_run(run, tsi: Tsi):
    state = tsi.initial
    for tid in run:
        if tid not in tsi._by_id:
            raise NotARun(f"unknown transition {tid!r}")
        t = tsi.trans(tid)
        if t.src != state:
            raise NotARun(f"transition {tid} does not start at {state}")
        state = t.dst
    return state


def run_poset(run, tsi: Tsi) -> LabelledPoset:
    run = tuple(run)
    check_run(run, tsi)
    below = []
    order = set()
    for j, tj in enumerate(run):
        down = set()
        for i in range(j):
            if not tsi.independent(run[i], tj):
                down.add(i)
                down |= below[i]
        below.append(down)
        order.update((i, j) for i in down)
    return LabelledPoset(tuple(tsi.trans(t).label for t in run), frozenset(order))


def poset_isomorphic(p: LabelledPoset, q: LabelledPoset):
    """A label- and order-preserving bijection from p to q as a dict, or None."""
    if sorted(p.labels) != sorted(q.labels) or len(p.order) != len(q.order):
        return None
    n = p.size

    def sig(po, i):
        ups = sum(1 for a, b in po.order if a == i)
        downs = sum(1 for a, b in po.order if b == i)
        return (po.labels[i], ups, downs)

    psig = [sig(p, i) for i in range(n)]
    qsig = [sig(q, i) for i in range(n)]
    if sorted(psig) != sorted(qsig):
        return None
    order = sorted(range(n), key=lambda i: psig[i])
    mapping = {}
    used = set()

    def extend(k):
        if k == n:
            return True
        i = order[k]
        for j in range(n):
            if j in used or qsig[j] != psig[i]:
                continue
            if all(((i, x) in p.order) == ((j, y) in q.order) and ((x, i) in p.order) == ((y, j) in q.order)
                   for x, y in mapping.items()):
                mapping[i] = j
                used.add(j)
                if extend(k + 1):
                    return True
                del mapping[i]
                used.discard(j)
        return False

    return dict(mapping) if extend(0) else None


def detect_auto_concurrency(tsi: Tsi):
    found = []
    for s in tsi.states:
        out = sorted(tsi.out(s), key=lambda t: t.id)
        for i, t in enumerate(out):
            for u in out[i + 1:]:
                if t.label == u.label and tsi.independent(t.id, u.id):
                    found.append((t.id, u.id))
    return found


def unfold(tsi: Tsi, depth: int, cap=DEFAULT_CAP) -> EventStructure:
    """Event structure of the traces of `tsi` that have at most `depth` steps.

    Events are prime traces. Two events are reported in conflict when no
    explored trace contains both, which is exact when every maximal run is
    shorter than `depth`.
    """
    classes = equivalence_classes(tsi)
    cls_of = {}
    for k, c in enumerate(classes):
        for tid in c:
            cls_of[tid] = k
    label_of = {cls_of[t.id]: t.label for t in tsi.transitions}
    dep = {}
    for k in range(len(classes)):
        for m in range(len(classes)):
            dep[k, m] = True
    for p in tsi.indep:
        a, b = tuple(p)
        dep[cls_of[a], cls_of[b]] = dep[cls_of[b], cls_of[a]] = False

    def canonical(word):
        word = list(word)
        below = [set(i for i in range(j) if dep[word[i], word[j]]) for j in range(len(word))]
        done = set()
        out = []
        while len(done) < len(word):
            ready = [j for j in range(len(word)) if j not in done and below[j] <= done]
            j = min(ready, key=lambda x: (word[x], x))
            done.add(j)
            out.append(word[j])
        return tuple(out)

    def prime_of_last(word):
        n = len(word) - 1
        keep = {n}
        for i in range(n - 1, -1, -1):
            if any(dep[word[i], word[j]] for j in keep):
                keep.add(i)
        return canonical([word[i] for i in sorted(keep)])

    start = ()
    state_of = {start: tsi.initial}
    events_of = {start: frozenset()}
    queue = deque([start])
    while queue:
        w = queue.popleft()
        if len(w) >= depth:
            continue
        for t in tsi.out(state_of[w]):
            ext = w + (cls_of[t.id],)
            w2 = canonical(ext)
            if w2 in state_of:
                continue
            if len(state_of) >= cap:
                raise StateExplosion("traces", cap)
            state_of[w2] = t.dst
            events_of[w2] = events_of[w] | {prime_of_last(ext)}
            queue.append(w2)
    primes = sorted({e for es in events_of.values() for e in es}, key=lambda p: (len(p), p))
    name = {p: f"e{i}" for i, p in enumerate(primes)}
    labels = {name[p]: label_of[p[-1]] for p in primes}
    causal = set()
    for p in primes:
        for q in events_of[p]:
            if q != p:
                causal.add((name[q], name[p]))
    together = set()
    for es in events_of.values():
        for a in es:
            for b in es:
                together.add((a, b))
    conflict = set()
    for i, a in enumerate(primes):
        for b in primes[i + 1:]:
            if (a, b) not in together:
                conflict.add(_pair(name[a], name[b]))
    return EventStructure(labels, frozenset(causal), frozenset(conflict))
