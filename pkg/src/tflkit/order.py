"""Local order relations, support sets and the process space of a transition system."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .errors import StateExplosion
from .models import DEFAULT_CAP, Tsi, equivalence_classes

# the virtual transition that precedes every initial transition
EPS = None


@dataclass(frozen=True)
class DualityRelations:
    co_immediate: frozenset  # same source, independent
    conflict: frozenset  # same source, dependent (diagonal included)
    co_linear: frozenset  # consecutive, independent
    causal: frozenset  # consecutive, dependent


def duality_relations(tsi: Tsi) -> DualityRelations:
    co_imm, conf, co_lin, caus = set(), set(), set(), set()
    for s in tsi.states:
        out = tsi.out(s)
        for t in out:
            for u in out:
                (co_imm if tsi.independent(t.id, u.id) else conf).add((t.id, u.id))
    for t in tsi.transitions:
        for u in tsi.out(t.dst):
            (co_lin if tsi.independent(t.id, u.id) else caus).add((t.id, u.id))
    return DualityRelations(frozenset(co_imm), frozenset(conf), frozenset(co_lin), frozenset(caus))


def causally_before(tsi: Tsi, t, r) -> bool:
    """t is immediately and causally followed by r; `EPS` precedes every initial transition."""
    if t is EPS:
        return tsi.trans(r).src == tsi.initial
    return tsi.trans(t).dst == tsi.trans(r).src and not tsi.independent(t, r)


def concurrently_before(tsi: Tsi, t, r) -> bool:
    if t is EPS:
        return False
    return tsi.trans(t).dst == tsi.trans(r).src and tsi.independent(t, r)


class SupportSet(NamedTuple):
    owner: str
    members: frozenset
    kind: str  # "maximal" or "trace"


def maximal_set(tsi: Tsi, state) -> SupportSet:
    return SupportSet(state, frozenset(t.id for t in tsi.out(state)), "maximal")


def is_conflict_free(tsi: Tsi, members) -> bool:
    ms = sorted(members)
    return all(tsi.independent(a, b) for i, a in enumerate(ms) for b in ms[i + 1:])


def _maximal_cliques(nodes, adjacent):
    # Bron-Kerbosch with pivoting
    found = []

    def expand(r, p, x):
        if not p and not x:
            found.append(frozenset(r))
            return
        pivot = max(p | x, key=lambda v: len(adjacent[v] & p))
        for v in sorted(p - adjacent[pivot]):
            expand(r | {v}, p & adjacent[v], x & adjacent[v])
            p = p - {v}
            x = x | {v}

    expand(set(), set(nodes), set())
    return found


def complete_traces(tsi: Tsi, support: SupportSet):
    """Maximal traces below `support`, sorted by member ids."""
    members = support.members
    if not members:
        return []
    if is_conflict_free(tsi, members):
        return [SupportSet(support.owner, members, "trace")]
    adjacent = {a: {b for b in members if b != a and tsi.independent(a, b)} for a in members}
    cliques = _maximal_cliques(members, adjacent)
    return [SupportSet(support.owner, c, "trace") for c in sorted(cliques, key=sorted)]


class Process(NamedTuple):
    state: str
    support: frozenset
    last: object  # transition id or EPS

    def describe(self):
        last = "eps" if self.last is EPS else self.last
        return f"({{{','.join(sorted(self.support))}}}, {last})"


class ProcessSpace:
    """Coherent processes of a TSI with precomputed successor tables."""

    def __init__(self, tsi: Tsi, cap=DEFAULT_CAP):
        self.tsi = tsi
        supports = {}
        for s in tsi.states:
            top = maximal_set(tsi, s)
            found = [top.members]
            for tr in complete_traces(tsi, top):
                if tr.members not in found:
                    found.append(tr.members)
            supports[s] = found
        self.supports = supports
        procs = []
        for s in tsi.states:
            lasts = sorted(t.id for t in tsi.incoming(s))
            if s == tsi.initial:
                lasts = [EPS] + lasts
            for sup in supports[s]:
                for last in lasts:
                    procs.append(Process(s, sup, last))
                    if len(procs) > cap:
                        raise StateExplosion("process space", cap)
        self.processes = tuple(procs)
        self.index = {p: i for i, p in enumerate(procs)}
        self.initial = self.index[Process(tsi.initial, supports[tsi.initial][0], EPS)]
        self.full = frozenset(range(len(procs)))
        self._tables()

    def _tables(self):
        tsi = self.tsi
        n = len(self.processes)
        self.causal = [dict() for _ in range(n)]
        self.noncausal = [dict() for _ in range(n)]
        self.traces = [[] for _ in range(n)]
        for i, p in enumerate(self.processes):
            for rid in sorted(p.support):
                r = tsi.trans(rid)
                target = self.index[Process(r.dst, self.supports[r.dst][0], rid)]
                if causally_before(tsi, p.last, rid):
                    self.causal[i].setdefault(r.label, []).append(target)
                else:
                    self.noncausal[i].setdefault(r.label, []).append(target)
            if p.support:
                sup = SupportSet(p.state, p.support, "maximal")
                for tr in complete_traces(tsi, sup):
                    self.traces[i].append(self.index[Process(p.state, tr.members, p.last)])
        self.by_state = {}
        for i, p in enumerate(self.processes):
            self.by_state.setdefault(p.state, []).append(i)

    def __len__(self):
        return len(self.processes)

    def successors(self, i, label=None):
        out = []
        for table in (self.causal[i], self.noncausal[i]):
            for lab, targets in table.items():
                if label is None or lab == label:
                    out.extend(targets)
        return out

    def is_maximal_support(self, i):
        p = self.processes[i]
        return p.support == self.supports[p.state][0]


def build_process_space(tsi: Tsi, cap=DEFAULT_CAP) -> ProcessSpace:
    return ProcessSpace(tsi, cap)


class ConfusionTuple(NamedTuple):
    t1: str
    t2: str
    t3: str
    variant: str  # "symmetric" or "asymmetric"
    deterministic: bool


def classify_confusion(tsi: Tsi, classes=None):
    classes = equivalence_classes(tsi) if classes is None else classes
    cls_of = {t: c for c in classes for t in c}
    found = []
    for s in tsi.states:
        out = sorted(tsi.out(s), key=lambda t: t.id)
        for t1 in out:
            for t2 in out:
                if t1.id == t2.id or not tsi.independent(t1.id, t2.id):
                    continue
                if t1.id < t2.id:
                    for t3 in out:
                        if t3.id in (t1.id, t2.id):
                            continue
                        if not tsi.independent(t1.id, t3.id) and not tsi.independent(t2.id, t3.id):
                            found.append(_confusion(tsi, t1, t2, t3, "symmetric"))
                for t3 in tsi.out(t1.dst):
                    if tsi.independent(t1.id, t3.id):
                        continue
                    rivals = [r for r in tsi.out(t3.src)
                              if r.id != t3.id and r.id in cls_of[t2.id] and not tsi.independent(r.id, t3.id)]
                    if rivals:
                        found.append(_confusion(tsi, t1, t2, t3, "asymmetric"))
    return found


def _confusion(tsi, t1, t2, t3, variant):
    labels = {t1.label, t2.label, t3.label}
    det = len(labels) == 3 or (t1.label == t3.label and causally_before(tsi, t1.id, t3.id))
    return ConfusionTuple(t1.id, t2.id, t3.id, variant, det)


def is_free_choice(tsi: Tsi, classes=None):
    """Returns (ok, witness) where the witness is a triple (t1, t2, t3) breaking the condition."""
    classes = equivalence_classes(tsi) if classes is None else classes
    cls_of = {t: c for c in classes for t in c}
    for s in tsi.states:
        out = sorted(tsi.out(s), key=lambda t: t.id)
        for t1 in out:
            for t2 in out:
                if t1.id >= t2.id or tsi.independent(t1.id, t2.id):
                    continue
                for t3 in tsi.transitions:
                    if not (tsi.independent(t1.id, t3.id) or tsi.independent(t2.id, t3.id)):
                        continue
                    if not _fc_rescued(tsi, cls_of[t1.id], cls_of[t2.id], t3.id):
                        return False, (t1.id, t2.id, t3.id)
    return True, None


def _fc_rescued(tsi, c1, c2, t3):
    for t4 in c1:
        if not tsi.independent(t3, t4):
            continue
        src = tsi.trans(t4).src
        for t5 in c2:
            if t5 != t4 and tsi.trans(t5).src == src and not tsi.independent(t4, t5) \
                    and tsi.independent(t3, t5):
                return True
    return False


def is_free_choice_net(net):
    bad = []
    for p in net.places:
        post = net.postset_of_place(p)
        if len(post) > 1 and any(len(net.pre[a]) != 1 for a in post):
            bad.append(p)
    return not bad, bad


@dataclass
class Classification:
    auto_concurrency: list
    confusion: list
    free_choice: bool
    free_choice_witness: object
    xi: bool

    def to_dict(self):
        return {
            "auto_concurrency": [list(p) for p in self.auto_concurrency],
            "confusion": [
                {"t1": c.t1, "t2": c.t2, "t3": c.t3, "variant": c.variant, "deterministic": c.deterministic}
                for c in self.confusion
            ],
            "free_choice": self.free_choice,
            "xi": self.xi,
        }


def classify(tsi: Tsi) -> Classification:
    from .models import detect_auto_concurrency

    classes = equivalence_classes(tsi)
    auto = detect_auto_concurrency(tsi)
    conf = classify_confusion(tsi, classes)
    fc, witness = is_free_choice(tsi, classes)
    xi = not auto and (fc or all(c.deterministic for c in conf))
    return Classification(auto, conf, fc, witness, xi)


def is_xi_system(tsi: Tsi):
    c = classify(tsi)
    if c.xi:
        return True, None
    if c.auto_concurrency:
        return False, ("auto-concurrency", c.auto_concurrency[0])
    bad = next(x for x in c.confusion if not x.deterministic)
    return False, ("non-deterministic confusion", bad)
