"""Independent reference implementations and random generators used by the tests.

Everything here is deliberately naive: exhaustive subsets, plain fixpoint loops
over states, pair deletion. None of it calls into the code under test except
for building the model objects themselves.
"""
from __future__ import annotations

import itertools
import random

from hypothesis import strategies as st

from tflkit.errors import ModelError, StateExplosion
from tflkit.logic import And, Co, Ff, Fix, Modal, Or, Tt, Var
from tflkit.models import EventStructure, PetriNet, Transition, Tsi, net_to_tsi

LABELS = ("a", "b", "c")


# ------------------------------------------------------------------ generators

def random_lts(rng: random.Random, max_states=8, labels=LABELS, density=0.25):
    """Labelled transition system with empty independence."""
    n = rng.randint(1, max_states)
    states = [f"s{i}" for i in range(n)]
    trans = []
    for s in states:
        for lab in labels:
            for d in states:
                if rng.random() < density / len(labels) * 2:
                    trans.append(Transition(f"t{len(trans)}", s, lab, d))
    return Tsi(tuple(states), "s0", tuple(trans), frozenset())


def random_net(rng: random.Random, places=5, actions=4, labels=LABELS, acyclic=False):
    """A random net; may be unsafe. Acyclic nets only move tokens to higher-numbered places."""
    ps = [f"p{i}" for i in range(places)]
    acts = {f"x{i}": rng.choice(labels) for i in range(actions)}
    arcs = []
    for a in acts:
        if acyclic:
            hi = rng.randrange(places - 1)
            pre = {hi} | {i for i in range(hi) if rng.random() < 0.25}
            post = {i for i in range(hi + 1, places) if rng.random() < 0.4}
        else:
            pre = {i for i in range(places) if rng.random() < 0.35} or {rng.randrange(places)}
            post = {i for i in range(places) if rng.random() < 0.35}
        arcs += [(ps[i], a) for i in pre] + [(a, ps[i]) for i in post]
    marked = [p for p in ps if rng.random() < 0.4] or [ps[0]]
    return PetriNet.build(ps, acts, arcs, marked)


def random_net_tsi(rng: random.Random, max_states=8, acyclic=False, labels=LABELS, tries=200, **kw):
    """TSI of a random safe net with at most `max_states` reachable markings."""
    for _ in range(tries):
        net = random_net(rng, labels=labels, acyclic=acyclic, **kw)
        try:
            tsi = net_to_tsi(net, cap=max_states)
        except (ModelError, StateExplosion):
            continue
        if tsi.transitions:
            return net, tsi
    raise RuntimeError("no suitable net found")


def random_es(rng: random.Random, events=5, labels=LABELS):
    evs = [f"e{i}" for i in range(events)]
    causal = {(evs[i], evs[j]) for i in range(events) for j in range(i + 1, events) if rng.random() < 0.2}
    below = {e: set() for e in evs}
    for a, b in sorted(causal):
        below[b] |= {a} | below[a]
    for e in evs:  # close transitively in index order
        for c in list(below[e]):
            below[e] |= below[c]
    related = lambda a, b: a in below[b] or b in below[a]

    def inherit(conf):
        conf = set(conf)
        changed = True
        while changed:
            changed = False
            for p in list(conf):
                a, b = sorted(p)
                for x, y in ((a, b), (b, a)):
                    for e in evs:
                        if y in below[e] and x != e and frozenset((x, e)) not in conf:
                            conf.add(frozenset((x, e)))
                            changed = True
        return conf

    conflict = set()
    for a, b in itertools.combinations(evs, 2):
        if related(a, b) or rng.random() >= 0.2:
            continue
        grown = inherit(conflict | {frozenset((a, b))})
        # keep the seed only if no event ends up in conflict with one of its causes
        if not any(related(*sorted(p)) for p in grown):
            conflict = grown
    return EventStructure.build({e: rng.choice(labels) for e in evs}, sorted(causal),
                                [tuple(sorted(p)) for p in conflict])


def renamed_copy(tsi: Tsi, rng: random.Random):
    """Isomorphic copy with fresh state and transition names in shuffled order."""
    states = list(tsi.states)
    rng.shuffle(states)
    sname = {s: f"q{i}" for i, s in enumerate(states)}
    trans = list(tsi.transitions)
    rng.shuffle(trans)
    tname = {t.id: f"u{i}" for i, t in enumerate(trans)}
    return Tsi(tuple(sname[s] for s in tsi.states), sname[tsi.initial],
               tuple(Transition(tname[t.id], sname[t.src], t.label, sname[t.dst]) for t in trans),
               frozenset(frozenset(tname[x] for x in p) for p in tsi.indep))


# ------------------------------------------------------------------ formulas

def _modal(is_box, label, body, kind):
    if kind is None:
        if is_box:
            return And(Modal(True, label, "c", body), Modal(True, label, "nc", body))
        return Or(Modal(False, label, "c", body), Modal(False, label, "nc", body))
    return Modal(is_box, label, kind, body)


@st.composite
def formulas(draw, labels=LABELS, depth=5, plain_only=False, bound=()):
    """Closed formulas in positive normal form."""
    leaves = [st.just(Tt()), st.just(Ff())] + ([st.sampled_from(bound).map(Var)] if bound else [])
    if depth <= 0:
        return draw(st.one_of(leaves))
    sub = lambda vs=bound: formulas(labels, depth - 1, plain_only, vs)
    choice = draw(st.integers(0, 9))
    if choice <= 1:
        return draw(st.one_of(leaves))
    if choice == 2:
        return And(draw(sub()), draw(sub()))
    if choice == 3:
        return Or(draw(sub()), draw(sub()))
    if choice in (4, 5, 6):
        kind = None if plain_only else draw(st.sampled_from([None, "c", "nc"]))
        return _modal(draw(st.booleans()), draw(st.sampled_from(labels)), draw(sub()), kind)
    if choice == 7 and not plain_only:
        return Co(draw(st.booleans()), draw(sub()))
    name = f"X{len(bound)}"
    return Fix(draw(st.booleans()), name, draw(sub(bound + (name,))))


def random_formula(rng: random.Random, labels=LABELS, depth=5, plain_only=False, bound=()):
    """Seeded twin of `formulas` for loops with a fixed sample count."""
    leaves = [Tt(), Ff()] + [Var(v) for v in bound]
    if depth <= 0:
        return rng.choice(leaves)
    sub = lambda vs=bound: random_formula(rng, labels, depth - 1, plain_only, vs)
    choice = rng.randint(0, 9)
    if choice <= 1:
        return rng.choice(leaves)
    if choice == 2:
        return And(sub(), sub())
    if choice == 3:
        return Or(sub(), sub())
    if choice in (4, 5, 6):
        kind = None if plain_only else rng.choice([None, "c", "nc"])
        return _modal(rng.random() < 0.5, rng.choice(labels), sub(), kind)
    if choice == 7 and not plain_only:
        return Co(rng.random() < 0.5, sub())
    name = f"X{len(bound)}"
    return Fix(rng.random() < 0.5, name, sub(bound + (name,)))


# ------------------------------------------------------------------ oracles

def brute_maximal_traces(tsi: Tsi, state):
    """Inclusion-maximal pairwise-independent subsets of the outgoing transitions."""
    out = [t.id for t in tsi.out(state)]
    free = [frozenset(c) for k in range(1, len(out) + 1) for c in itertools.combinations(out, k)
            if all(tsi.independent(a, b) for a, b in itertools.combinations(c, 2))]
    return {c for c in free if not any(c < d for d in free)}


def brute_configurations(es: EventStructure):
    """Downward-closed conflict-free event sets, by exhaustive subset enumeration."""
    below = es.strict_below()
    evs = es.events
    out = set()
    for k in range(len(evs) + 1):
        for c in itertools.combinations(evs, k):
            s = set(c)
            if all(below[e] <= s for e in s) and not any(es.in_conflict(a, b) for a, b in itertools.combinations(c, 2)):
                out.add(frozenset(s))
    return out


def _plain(f):
    if isinstance(f, (Or, And)) and isinstance(f.left, Modal) and isinstance(f.right, Modal):
        a, b = f.left, f.right
        if a.label == b.label and a.body == b.body and a.box == b.box == isinstance(f, And) \
                and {a.kind, b.kind} == {"c", "nc"}:
            return a.box, a.label, a.body
    return None


def lmu_states(lts: Tsi, f, env=None):
    """Set of states satisfying a plain-modality mu-calculus formula, by fixpoint iteration."""
    env = env or {}
    states = frozenset(lts.states)
    pm = _plain(f)
    if pm is not None:
        is_box, label, body = pm
        inner = lmu_states(lts, body, env)
        succ = {s: [t.dst for t in lts.transitions if t.src == s and t.label == label] for s in states}
        if is_box:
            return frozenset(s for s in states if all(d in inner for d in succ[s]))
        return frozenset(s for s in states if any(d in inner for d in succ[s]))
    if isinstance(f, Tt):
        return states
    if isinstance(f, Ff):
        return frozenset()
    if isinstance(f, Var):
        return env[f.name]
    if isinstance(f, And):
        return lmu_states(lts, f.left, env) & lmu_states(lts, f.right, env)
    if isinstance(f, Or):
        return lmu_states(lts, f.left, env) | lmu_states(lts, f.right, env)
    if isinstance(f, Fix):
        cur = states if f.greatest else frozenset()
        while True:
            nxt = lmu_states(lts, f.body, {**env, f.var: cur})
            if nxt == cur:
                return cur
            cur = nxt
    raise ValueError(f"not a plain-modality formula: {f}")


def lmu_chain(lts: Tsi, f: Fix):
    """Iterates of the outermost fixpoint of `f` over states."""
    cur = frozenset(lts.states) if f.greatest else frozenset()
    chain = [cur]
    while True:
        nxt = lmu_states(lts, f.body, {f.var: cur})
        if nxt == cur:
            return chain
        chain.append(nxt)
        cur = nxt


def naive_strong_bisim(left: Tsi, right: Tsi) -> bool:
    """Greatest bisimulation by repeated deletion of unmatched pairs."""
    rel = {(p, q) for p in left.states for q in right.states}
    lo = {s: [(t.label, t.dst) for t in left.transitions if t.src == s] for s in left.states}
    ro = {s: [(t.label, t.dst) for t in right.transitions if t.src == s] for s in right.states}
    changed = True
    while changed:
        changed = False
        for p, q in list(rel):
            ok = all(any(b == a and (p2, q2) in rel for b, q2 in ro[q]) for a, p2 in lo[p]) and \
                all(any(a == b and (p2, q2) in rel for a, p2 in lo[p]) for b, q2 in ro[q])
            if not ok:
                rel.discard((p, q))
                changed = True
    return (left.initial, right.initial) in rel
