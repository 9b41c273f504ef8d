"""Folding an event-structure generator into a finite transition system with independence."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .ccs import CcsProgram, canonical, relabel_theta, steps
from .errors import OracleInconsistent, StateExplosion
from .models import DEFAULT_CAP, EventStructure, Transition, Tsi, _pair, configuration_id, enabled_events
from .order import build_process_space
from .semantics import Evaluator


class EsGenerator:
    """Interface: configurations of an event structure with a quotient oracle."""

    def initial(self):
        raise NotImplementedError

    def enabled(self, conf):
        """List of (event, label, next configuration)."""
        raise NotImplementedError

    def events(self, conf) -> frozenset:
        raise NotImplementedError

    def quotient_key(self, conf):
        raise NotImplementedError

    def concurrent(self, e1, e2) -> bool:
        raise NotImplementedError


class CcsGenerator(EsGenerator):
    """Configurations are tuples of local paths, one per parallel component.

    An event is (component, local path ending with it). Events of different
    components are concurrent; within a component they are ordered or in
    conflict. The oracle compares residual terms up to reordering of + and |.
    """

    def __init__(self, prog: CcsProgram):
        self.prog = prog
        self.comps = prog.components()
        self._res = {}

    def initial(self):
        return tuple(() for _ in self.comps)

    def _residual(self, k, path):
        key = (k, path)
        if key not in self._res:
            if not path:
                self._res[key] = self.comps[k]
            else:
                prev = self._residual(k, path[:-1])
                self._res[key] = steps(prev, self.prog.defs)[path[-1]][1]
        return self._res[key]

    def enabled(self, conf):
        out = []
        for k, path in enumerate(conf):
            for i, (label, _) in enumerate(steps(self._residual(k, path), self.prog.defs)):
                new = path + (i,)
                out.append(((k, new), label, conf[:k] + (new,) + conf[k + 1:]))
        return out

    def events(self, conf):
        return frozenset((k, path[:j]) for k, path in enumerate(conf) for j in range(1, len(path) + 1))

    def residual_term(self, conf):
        return [self._residual(k, p) for k, p in enumerate(conf)]

    def quotient_key(self, conf):
        return tuple(sorted(canonical(t) for t in self.residual_term(conf)))

    def concurrent(self, e1, e2):
        return e1[0] != e2[0]


class FiniteEsGenerator(EsGenerator):
    """A finite event structure where every configuration is its own class."""

    def __init__(self, es: EventStructure):
        self.es = es
        self.below = es.strict_below()

    def initial(self):
        return frozenset()

    def enabled(self, conf):
        return [(e, self.es.labels[e], conf | {e}) for e in enabled_events(self.es, conf, self.below)]

    def events(self, conf):
        return conf

    def quotient_key(self, conf):
        return configuration_id(conf)

    def concurrent(self, e1, e2):
        return self.es.concurrent(e1, e2, self.below)


def representative_set(gen: EsGenerator, cap=DEFAULT_CAP):
    """Events of one configuration per quotient class, found breadth-first.

    Returns (events, representatives) where representatives maps class keys to
    configurations.
    """
    start = gen.initial()
    reps = {}
    ev = set()
    queue = deque([start])
    visited = 0
    while queue:
        c = queue.popleft()
        visited += 1
        if visited > cap:
            raise StateExplosion("configurations while folding", cap)
        key = gen.quotient_key(c)
        if key in reps:
            continue
        reps[key] = c
        ev |= gen.events(c)
        for _, _, c2 in gen.enabled(c):
            queue.append(c2)
    return frozenset(ev), reps


def _configurations_over(gen, allowed, cap):
    start = gen.initial()
    seen = {start}
    order = [start]
    queue = deque([start])
    while queue:
        c = queue.popleft()
        for e, _, c2 in gen.enabled(c):
            if e in allowed and c2 not in seen:
                if len(seen) >= cap:
                    raise StateExplosion("configurations while folding", cap)
                seen.add(c2)
                order.append(c2)
                queue.append(c2)
    return order


def complete_representative_set(gen: EsGenerator, rep_events, cap=DEFAULT_CAP):
    """Add every event enabled at a configuration built from the representative events."""
    extra = set(rep_events)
    for c in _configurations_over(gen, rep_events, cap):
        for e, _, _ in gen.enabled(c):
            extra.add(e)
    return frozenset(extra)


@dataclass
class FoldResult:
    tsi: Tsi
    class_keys: list  # state index -> quotient key
    rep_events: frozenset
    complete_events: frozenset


def fold(gen: EsGenerator, cap=DEFAULT_CAP) -> FoldResult:
    rep_events, reps = representative_set(gen, cap)
    full = complete_representative_set(gen, rep_events, cap)
    confs = _configurations_over(gen, full, cap)
    # the oracle must agree on what each class can do
    sig = {}
    for c in confs:
        key = gen.quotient_key(c)
        s = sorted((lab, gen.quotient_key(c2)) for _, lab, c2 in gen.enabled(c))
        if sig.setdefault(key, s) != s:
            raise OracleInconsistent(f"class {key} has configurations with different moves")
    keys, sid = [], {}
    for c in confs:
        k = gen.quotient_key(c)
        if k not in sid:
            sid[k] = f"s{len(keys)}"
            keys.append(k)
    triples, witnesses = [], {}
    for c in confs:
        for e, lab, c2 in gen.enabled(c):
            if e not in full:
                continue
            t = (sid[gen.quotient_key(c)], lab, sid[gen.quotient_key(c2)])
            if t not in witnesses:
                witnesses[t] = set()
                triples.append(t)
            witnesses[t].add(e)
    tid = {t: f"t{i}" for i, t in enumerate(triples)}
    indep = set()
    for i, t1 in enumerate(triples):
        for t2 in triples[i + 1:]:
            if any(gen.concurrent(e1, e2) for e1 in witnesses[t1] for e2 in witnesses[t2]):
                indep.add(_pair(tid[t1], tid[t2]))
    states = tuple(f"s{i}" for i in range(len(keys)))
    tsi = Tsi(states, "s0", tuple(Transition(tid[t], *t) for t in triples), frozenset(indep))
    return FoldResult(tsi, keys, rep_events, full)


def fold_ccs(prog: CcsProgram, cap=DEFAULT_CAP, relabel=True):
    """Relabel (optionally) and fold a CCS program. Returns (FoldResult, inverse labelling)."""
    inverse = {}
    if relabel:
        prog, inverse = relabel_theta(prog)
    return fold(CcsGenerator(prog), cap), inverse


def truncated_unfolding(gen: EsGenerator, depth, cap=DEFAULT_CAP):
    """Configurations with at most `depth` events, as a TSI. Also returns the frontier states."""
    start = gen.initial()
    ids = {start: "c0"}
    queue = deque([start])
    steps_ = []
    frontier = set()
    while queue:
        c = queue.popleft()
        size = len(gen.events(c))
        moves = gen.enabled(c)
        if size >= depth:
            if moves:
                frontier.add(ids[c])
            continue
        for e, lab, c2 in moves:
            if c2 not in ids:
                if len(ids) >= cap:
                    raise StateExplosion("configurations in the unfolding", cap)
                ids[c2] = f"c{len(ids)}"
                queue.append(c2)
            steps_.append((ids[c], lab, ids[c2], e))
    trans = tuple(Transition(f"t{i}", s, lab, d) for i, (s, lab, d, _) in enumerate(steps_))
    indep = set()
    for i, x in enumerate(steps_):
        for j in range(i + 1, len(steps_)):
            if gen.concurrent(x[3], steps_[j][3]):
                indep.add(_pair(f"t{i}", f"t{j}"))
    states = tuple(sorted(ids.values(), key=lambda s: int(s[1:])))
    return Tsi(states, "c0", trans, frozenset(indep)), frozenset(frontier)


@dataclass
class FoldCheck:
    formula: str
    folded: bool
    lower: bool
    upper: bool

    @property
    def decided(self):
        return self.lower == self.upper

    @property
    def agrees(self):
        return self.lower <= self.folded <= self.upper


def verify_fold(gen: EsGenerator, formulas, depth, folded: Tsi = None, cap=DEFAULT_CAP):
    """Compare each formula on the folded system with bounds from the truncated unfolding.

    The bounds come from pinning frontier processes to false (lower) and true
    (upper). A disagreement is a folded verdict outside those bounds.
    """
    from .logic import to_text

    folded = fold(gen, cap).tsi if folded is None else folded
    fspace = build_process_space(folded)
    tsi, frontier = truncated_unfolding(gen, depth, cap)
    space = build_process_space(tsi)
    pinned = frozenset(i for s in frontier for i in space.by_state.get(s, ()))
    out = []
    for f in formulas:
        verdict = fspace.initial in Evaluator(fspace).eval(f)
        lo = space.initial in Evaluator(space, forced=(pinned, False)).eval(f)
        hi = space.initial in Evaluator(space, forced=(pinned, True)).eval(f)
        out.append(FoldCheck(to_text(f), verdict, lo, hi))
    return out
