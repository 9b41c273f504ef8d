import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from tflkit.bisim import (EQUIVALENT, NOT_EQUIVALENT, UNKNOWN, decide, distinguishing_formula,
                          hp_isomorphic_sets, local_hpb, logically_equivalent, strong_bisim)
from tflkit.corpus import fixture_tsi
from tflkit.errors import CyclicInput, NotXi
from tflkit.logic import fragment_of, modal_depth, parse
from tflkit.models import Tsi, es_to_tsi, unfold
from tflkit.order import EPS, causally_before, complete_traces, is_xi_system, maximal_set
from tflkit.semantics import satisfies

CE1_TOP = ("ce1_top_left.tsi", "ce1_top_right.tsi")
CE1_BOTTOM = ("ce1_bottom_left.tsi", "ce1_bottom_right.tsi")
CE2 = ("ce2_a.net", "ce2_b.net")


def pair(names):
    return fixture_tsi(names[0]), fixture_tsi(names[1])


def chain(*labels):
    states = [f"s{i}" for i in range(len(labels) + 1)]
    return Tsi.build(states, "s0", [(f"t{i}", states[i], lab, states[i + 1]) for i, lab in enumerate(labels)])


# ------------------------------------------------------------ strong bisimilarity

def test_diamond_and_interleaving_are_strongly_bisimilar():
    assert strong_bisim(fixture_tsi("diamond.tsi"), fixture_tsi("interleaving.tsi")).equivalent


def test_different_second_step():
    res = strong_bisim(chain("a", "b"), chain("a", "c"))
    assert res.verdict == NOT_EQUIVALENT
    f = parse(res.witness)
    assert satisfies(chain("a", "b"), f) != satisfies(chain("a", "c"), f)


@settings(max_examples=100)
@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_strong_bisim_matches_naive_deletion(s1, s2):
    left = oracles.random_lts(random.Random(s1), max_states=10, labels="ab")
    right = oracles.random_lts(random.Random(s2), max_states=10, labels="ab") if s2 % 3 else \
        oracles.renamed_copy(left, random.Random(s2))
    res = strong_bisim(left, right)
    assert res.equivalent == oracles.naive_strong_bisim(left, right)
    if not res.equivalent:
        f = parse(res.witness)
        assert satisfies(left, f) and not satisfies(right, f)


# ------------------------------------------------------------ history preserving games

def test_ce1_top():
    l, r = pair(CE1_TOP)
    assert decide(l, r, "hpb").verdict == EQUIVALENT
    assert decide(l, r, "thpb").verdict == NOT_EQUIVALENT


def test_ce1_bottom():
    l, r = pair(CE1_BOTTOM)
    assert decide(l, r, "sb").verdict == EQUIVALENT
    res = decide(l, r, "hpb")
    assert res.verdict == NOT_EQUIVALENT and res.witness


def test_ce2():
    l, r = pair(CE2)
    assert decide(l, r, "thpb").verdict == EQUIVALENT
    assert decide(l, r, "hhpb").verdict == NOT_EQUIVALENT


def test_diamond_against_interleaving():
    l, r = fixture_tsi("diamond.tsi"), fixture_tsi("interleaving.tsi")
    assert [decide(l, r, rel).verdict for rel in ("sb", "hpb", "thpb", "hhpb")] == \
        [EQUIVALENT, NOT_EQUIVALENT, NOT_EQUIVALENT, NOT_EQUIVALENT]


@pytest.mark.parametrize("name", ["diamond.tsi", "ce2_a.net", "ce1_top_left.tsi", "choice_then_c.net"])
def test_identical_systems(name):
    t = fixture_tsi(name)
    for rel in ("sb", "hpb", "thpb", "hhpb"):
        assert decide(t, t, rel).verdict == EQUIVALENT


def test_exact_mode_needs_acyclic_input():
    loop = Tsi.build(["s"], "s", [("x", "s", "a", "s")])
    with pytest.raises(CyclicInput):
        decide(loop, loop, "hpb")


def test_bounded_mode_on_cycles():
    a_loop = Tsi.build(["s"], "s", [("x", "s", "a", "s")])
    b_loop = Tsi.build(["s"], "s", [("x", "s", "b", "s")])
    two_a = Tsi.build(["s", "q"], "s", [("x", "s", "a", "q"), ("y", "q", "a", "s")])
    assert decide(a_loop, b_loop, "hpb", "bounded", 3).verdict == NOT_EQUIVALENT
    res = decide(a_loop, two_a, "hpb", "bounded", 4)
    assert res.verdict == UNKNOWN and res.mode == "bounded=4"


def test_bounded_mode_is_exact_beyond_the_longest_run():
    l, r = pair(CE1_TOP)
    assert decide(l, r, "thpb", "bounded", 10).verdict == NOT_EQUIVALENT
    assert decide(l, r, "hpb", "bounded", 10).verdict == EQUIVALENT
    # cut too short, nothing is refuted or confirmed
    assert decide(l, r, "hpb", "bounded", 1).verdict == UNKNOWN


def test_local_mode_requires_well_behaved_systems():
    l, r = pair(CE1_BOTTOM)
    with pytest.raises(NotXi):
        local_hpb(l, r)
    with pytest.raises(ValueError):
        decide(l, l, "hhpb", "local")


def test_result_serialises():
    d = decide(*pair(CE2), "hhpb").to_dict()
    assert d["verdict"] == "not-equivalent" and d["relation"] == "hhpb" and d["mode"] == "exact"


# ------------------------------------------------------------ hp-isomorphic trace matching

def test_matching_traces():
    d = fixture_tsi("diamond.tsi")
    assert hp_isomorphic_sets(d, {"t1", "t2"}, d, {"t2", "t1"}, (EPS, EPS)) == {"t1": "t1", "t2": "t2"}


def test_causal_pattern_mismatch():
    # in the diamond after a, b is concurrent; in a.b it is causal
    d, c = fixture_tsi("diamond.tsi"), chain("a", "b")
    assert hp_isomorphic_sets(d, {"t3"}, c, {"t1"}, ("t1", "t0")) is None


def brute_hp_iso(left, m, right, n, anchor):
    m, n = sorted(m), sorted(n)
    if len(m) != len(n):
        return False
    for perm in itertools.permutations(n):
        if all(left.trans(a).label == right.trans(b).label and
               causally_before(left, anchor[0], a) == causally_before(right, anchor[1], b)
               for a, b in zip(m, perm)):
            return True
    return False


@settings(max_examples=80)
@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_trace_matching_matches_bijection_search(s1, s2):
    _, left = oracles.random_net_tsi(random.Random(s1), max_states=10, labels="ab")
    _, right = oracles.random_net_tsi(random.Random(s2), max_states=10, labels="ab")
    for s in left.states:
        for q in right.states:
            lasts_l = [EPS] if s == left.initial else [t.id for t in left.incoming(s)][:2]
            lasts_r = [EPS] if q == right.initial else [t.id for t in right.incoming(q)][:2]
            for m in complete_traces(left, maximal_set(left, s)):
                for n in complete_traces(right, maximal_set(right, q)):
                    if len(m.members) > 4:
                        continue
                    for a in lasts_l:
                        for b in lasts_r:
                            got = hp_isomorphic_sets(left, m.members, right, n.members, (a, b))
                            assert (got is not None) == brute_hp_iso(left, m.members, right, n.members, (a, b))


# ------------------------------------------------------------ distinguishing formulas

def test_ce1_top_trace_formula():
    l, r = pair(CE1_TOP)
    f = distinguishing_formula(l, r, "TLMU", 3)
    assert f is not None and modal_depth(f) <= 3
    assert fragment_of(f) in ("HML", "LMU", "TLMU")
    assert satisfies(l, f) and not satisfies(r, f)


def test_ce1_bottom_has_no_trace_formula():
    l, r = pair(CE1_BOTTOM)
    assert distinguishing_formula(l, r, "TLMU", 4) is None
    f = distinguishing_formula(l, r, "CLMU", 4)
    assert f is not None and satisfies(l, f) and not satisfies(r, f)


def test_identical_systems_have_no_formula():
    t = fixture_tsi("ce2_a.net")
    for fr in ("HML", "TLMU", "CLMU", "TFL"):
        assert distinguishing_formula(t, t, fr, 4) is None


def test_ce2_is_logically_equivalent():
    assert logically_equivalent(*pair(CE2), "TFL")


# ------------------------------------------------------------ random acyclic pairs

def acyclic_pair(seed):
    """A pair of acyclic systems that are often but not always equivalent."""
    rng = random.Random(seed)
    _, a = oracles.random_net_tsi(rng, acyclic=True, max_states=10, places=6, actions=5, labels="ab")
    kind = seed % 4
    if kind == 0:
        b = oracles.renamed_copy(a, rng)
    elif kind == 1:
        b = es_to_tsi(unfold(a, 20))
    elif kind == 2:
        b = Tsi(a.states, a.initial, a.transitions, frozenset())
    else:
        _, b = oracles.random_net_tsi(rng, acyclic=True, max_states=10, places=6, actions=5, labels="ab")
    return a, b


RANK = {EQUIVALENT: 1, NOT_EQUIVALENT: 0}


@settings(max_examples=60)
@given(st.integers(0, 10**6))
def test_hierarchy_on_random_pairs(seed):
    a, b = acyclic_pair(seed)
    v = {rel: RANK[decide(a, b, rel).verdict] for rel in ("sb", "hpb", "thpb", "hhpb")}
    assert v["hhpb"] <= v["thpb"] <= v["hpb"] <= v["sb"]


@settings(max_examples=60)
@given(st.integers(0, 10**6))
def test_local_check_agrees_on_well_behaved_pairs(seed):
    a, b = acyclic_pair(seed)
    if not (is_xi_system(a)[0] and is_xi_system(b)[0]):
        return
    assert local_hpb(a, b).verdict == decide(a, b, "hpb").verdict


@settings(max_examples=40)
@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_without_independence_trace_game_is_strong_bisimulation(s1, s2):
    def acyclic_lts(seed):
        _, t = oracles.random_net_tsi(random.Random(seed), acyclic=True, max_states=8, labels="ab")
        return Tsi(t.states, t.initial, t.transitions, frozenset())
    a, b = acyclic_lts(s1), acyclic_lts(s2)
    assert decide(a, b, "thpb").verdict == decide(a, b, "sb").verdict
