"""Equivalence games between two transition systems with independence.

Relations: strong bisimulation (sb), history-preserving (hpb), its
trace-restricted strengthening (thpb) and the hereditary variant with
backtracking (hhpb). Modes: exact on acyclic inputs, depth-bounded with a
three-valued answer, and the local check that suffices on well-behaved
systems.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field

from .errors import CyclicInput, ModelError, NotXi
from .logic import FF, TT, And, Co, Modal, Or, box, dia
from .models import Tsi
from .order import EPS, ProcessSpace, build_process_space, causally_before, complete_traces, \
    is_xi_system, maximal_set

EQUIVALENT, NOT_EQUIVALENT, UNKNOWN = "equivalent", "not-equivalent", "unknown"
RELATIONS = ("sb", "hpb", "thpb", "hhpb")


@dataclass
class BisimResult:
    verdict: str
    relation: str
    mode: str
    witness: object = None
    stats: dict = field(default_factory=dict)

    @property
    def equivalent(self):
        return self.verdict == EQUIVALENT

    def to_dict(self):
        return {"relation": self.relation, "mode": self.mode, "verdict": self.verdict,
                "witness": self.witness, "stats": self.stats}


# ------------------------------------------------------------ generic refinement

def refine(left_moves, right_moves, left_nodes, right_nodes, max_level=None):
    """Level-wise greatest bisimulation between two move graphs.

    `*_moves(p)` returns a list of (key, successor). Returns (relation, level)
    where `level[(p, q)]` is the round in which the pair was separated.
    """
    rel = {(p, q) for p in left_nodes for q in right_nodes}
    level = {}
    k = 0
    lm = {p: _group(left_moves(p)) for p in left_nodes}
    rm = {q: _group(right_moves(q)) for q in right_nodes}
    while max_level is None or k < max_level:
        k += 1
        drop = set()
        for p, q in rel:
            if not _matches(lm[p], rm[q], rel, False) or not _matches(rm[q], lm[p], rel, True):
                drop.add((p, q))
        if not drop:
            break
        for pq in drop:
            level[pq] = k
        rel -= drop
    return rel, level


def _group(moves):
    out = {}
    for key, nxt in moves:
        out.setdefault(key, []).append(nxt)
    return out


def _matches(mine, theirs, rel, flipped):
    for key, targets in mine.items():
        others = theirs.get(key, ())
        for x in targets:
            if flipped:
                if not any((y, x) in rel for y in others):
                    return False
            elif not any((x, y) in rel for y in others):
                return False
    return True


def distinguishing(p, q, left_moves, right_moves, level, modality):
    """Formula true at left position p and false at right position q.

    `modality(key, body, is_box)` builds the formula for a move key.
    """
    memo = {}

    def chi(p, q):
        if (p, q) in memo:
            return memo[(p, q)]
        k = level[(p, q)]
        lm, rm = _group(left_moves(p)), _group(right_moves(q))
        for key in sorted(lm, key=repr):
            others = rm.get(key, [])
            for x in lm[key]:
                if all(level.get((x, y), 10 ** 9) < k for y in others):
                    body = _conj([chi(x, y) for y in others])
                    memo[(p, q)] = modality(key, body, False)
                    return memo[(p, q)]
        for key in sorted(rm, key=repr):
            mine = lm.get(key, [])
            for y in rm[key]:
                if all(level.get((x, y), 10 ** 9) < k for x in mine):
                    body = _disj([chi(x, y) for x in mine])
                    memo[(p, q)] = modality(key, body, True)
                    return memo[(p, q)]
        raise AssertionError("separated pair without a separating move")

    return chi(p, q)


def _conj(fs):
    if not fs:
        return TT
    f = fs[0]
    for g in fs[1:]:
        f = And(f, g)
    return f


def _disj(fs):
    if not fs:
        return FF
    f = fs[0]
    for g in fs[1:]:
        f = Or(f, g)
    return f


# ------------------------------------------------------------ strong bisimulation

def _state_moves(tsi):
    return lambda s: [(t.label, t.dst) for t in tsi.out(s)]


def strong_bisim(left: Tsi, right: Tsi) -> BisimResult:
    lm, rm = _state_moves(left), _state_moves(right)
    rel, level = refine(lm, rm, left.states, right.states)
    start = (left.initial, right.initial)
    if start in rel:
        return BisimResult(EQUIVALENT, "sb", "exact", stats={"pairs": len(rel)})
    f = distinguishing(*start, lm, rm, level, lambda key, body, b: (box if b else dia)(key, body))
    return BisimResult(NOT_EQUIVALENT, "sb", "exact", witness=str(f))


# ------------------------------------------------------------ run-pair games

class _Side:
    """One system in a run-pair game, with cached poset data per run."""

    def __init__(self, tsi: Tsi):
        self.tsi = tsi
        self.below = {(): ()}
        self.conflict_free = {}

    def state(self, run):
        return self.tsi.trans(run[-1]).dst if run else self.tsi.initial

    def last(self, run):
        return run[-1] if run else EPS

    def extend(self, run, u):
        """(new run, set of positions strictly below the new element)."""
        below = self.below[run]
        down = set()
        for j, t in enumerate(run):
            if not self.tsi.independent(t, u):
                down.add(j)
                down |= below[j]
        new = run + (u,)
        if new not in self.below:
            self.below[new] = below + (frozenset(down),)
        return new, frozenset(down)

    def maximal_positions(self, run):
        below = self.below[run]
        inner = set()
        for b in below:
            inner |= b
        return [i for i in range(len(run)) if i not in inner]

    def delete(self, run, i):
        """Remove the element at position i, which must be maximal, re-linearising the rest."""
        seq = list(run)
        tsi = self.tsi
        for k in range(i, len(seq) - 1):
            t, u = tsi.trans(seq[k]), tsi.trans(seq[k + 1])
            swapped = _swap(tsi, t, u)
            if swapped is None:
                raise ModelError(f"no square lets {t.id} commute with {u.id}")
            seq[k], seq[k + 1] = swapped
        seq.pop()
        out = ()
        for tid in seq:
            out, _ = self.extend(out, tid)
        return out

    def traces(self, run):
        st = self.state(run)
        return complete_traces(self.tsi, maximal_set(self.tsi, st))


def _swap(tsi, t, u):
    for u2 in tsi.out(t.src):
        if u2.label != u.label or not tsi.independent(t.id, u2.id):
            continue
        for w in tsi.out(u2.dst):
            if w.label == t.label and w.dst == u.dst and tsi.independent(u2.id, w.id):
                return u2.id, w.id
    return None


def hp_isomorphic_sets(left: Tsi, m, right: Tsi, n, anchor):
    """Label-preserving bijection from m to n that keeps the causal/concurrent pattern
    relative to the anchor pair of last transitions, or None."""
    tm, tn = anchor

    def sig(tsi, last, t):
        return (tsi.trans(t).label, causally_before(tsi, last, t))

    a = sorted(m, key=lambda t: (sig(left, tm, t), t))
    b = sorted(n, key=lambda t: (sig(right, tn, t), t))
    if len(a) != len(b):
        return None
    if [sig(left, tm, t) for t in a] != [sig(right, tn, t) for t in b]:
        return None
    return dict(zip(a, b))


class _Bound(Exception):
    pass


class RunPairGame:
    """History-preserving games played on pairs of runs.

    With `depth` set, positions whose runs reach that length are frontier
    positions; `frontier_wins` says whether Eve is assumed to win them.
    """

    def __init__(self, left: Tsi, right: Tsi, depth=None, frontier_wins=True):
        self.sides = (_Side(left), _Side(right))
        self.depth = depth
        self.frontier_wins = frontier_wins
        self.hit_frontier = False
        self.memo = {}

    def _frontier(self, pos):
        if self.depth is None or len(pos[0]) < self.depth:
            return False
        has_move = any(self.sides[i].tsi.out(self.sides[i].state(pos[i])) for i in (0, 1))
        if has_move:
            self.hit_frontier = True
        return has_move

    def adam_moves(self, pos):
        """Forward moves: (side, transition)."""
        out = []
        for i in (0, 1):
            side = self.sides[i]
            for t in side.tsi.out(side.state(pos[i])):
                out.append((i, t.id))
        return out

    def answers(self, pos, i, u, allowed=None):
        """Eve's synchronous answers to Adam extending side i with u."""
        j = 1 - i
        si, sj = self.sides[i], self.sides[j]
        ri, down = si.extend(pos[i], u)
        label = si.tsi.trans(u).label
        out = []
        for v in sj.tsi.out(sj.state(pos[j])):
            if v.label != label or (allowed is not None and v.id not in allowed):
                continue
            rj, down2 = sj.extend(pos[j], v.id)
            if down2 == down:
                out.append((ri, rj) if i == 0 else (rj, ri))
        return out

    # hpb and thpb: finite game on acyclic systems, solved by memoised recursion

    def eve_wins(self, pos, restrict=False):
        key = (pos, restrict)
        if key in self.memo:
            return self.memo[key]
        if self._frontier(pos):
            self.memo[key] = self.frontier_wins
            return self.frontier_wins
        result = True
        for i, u in self.adam_moves(pos):
            if not any(self.eve_wins(nxt, restrict) for nxt in self.answers(pos, i, u)):
                result = False
                break
        if result and restrict:
            result = self._restrictions_ok(pos)
        self.memo[key] = result
        return result

    def _restrictions_ok(self, pos):
        anchors = (self.sides[0].last(pos[0]), self.sides[1].last(pos[1]))
        for i in (0, 1):
            j = 1 - i
            mine = self.sides[i].traces(pos[i])
            theirs = self.sides[j].traces(pos[j])
            for m in mine:
                ok = False
                for nset in theirs:
                    a = (anchors[i], anchors[j])
                    if hp_isomorphic_sets(self.sides[i].tsi, m.members, self.sides[j].tsi,
                                          nset.members, a) is None:
                        continue
                    if self._restricted_round(pos, i, m.members, nset.members):
                        ok = True
                        break
                if not ok:
                    return False
        return True

    def _restricted_round(self, pos, i, m, n):
        allowed = {i: m, 1 - i: n}
        for side in (0, 1):
            for u in sorted(allowed[side]):
                nxt = self.answers(pos, side, u, allowed[1 - side])
                if not any(self.eve_wins(p, True) for p in nxt):
                    return False
        return True

    def refutation(self, pos, restrict=False, depth=3):
        """A short description of how Adam wins from a losing position."""
        for i, u in self.adam_moves(pos):
            nxts = self.answers(pos, i, u)
            if not any(self.eve_wins(n, restrict) for n in nxts):
                side = "left" if i == 0 else "right"
                lab = self.sides[i].tsi.trans(u).label
                step = {"adam": f"{side}:{u} ({lab})"}
                if not nxts:
                    step["eve"] = "no synchronous answer"
                elif depth > 0:
                    j = 1 - i
                    step["replies"] = {n[j][-1]: self.refutation(n, restrict, depth - 1) for n in nxts}
                return step
        if restrict:
            return {"adam": "restricts to a maximal trace that Eve cannot match"}
        return {"adam": "wins at the depth bound"}

    # hhpb: safety game over the positions reachable by forward and backward moves

    def hereditary(self):
        start = ((), ())
        positions = {start}
        stack = [start]
        edges = {}
        while stack:
            pos = stack.pop()
            moves = []
            if not self._frontier(pos):
                for i, u in self.adam_moves(pos):
                    moves.append(("fwd", i, u, self.answers(pos, i, u)))
            for k in self.sides[0].maximal_positions(pos[0]):
                nxt = (self.sides[0].delete(pos[0], k), self.sides[1].delete(pos[1], k))
                moves.append(("back", 0, k, [nxt]))
            edges[pos] = moves
            for *_, nxts in moves:
                for n in nxts:
                    if n not in positions:
                        positions.add(n)
                        stack.append(n)
        win = set(positions)
        if not self.frontier_wins:
            win = {p for p in win if not self._frontier(p)}
        changed = True
        while changed:
            changed = False
            for pos in list(win):
                if any(not any(n in win for n in nxts) for *_, nxts in edges[pos]):
                    win.discard(pos)
                    changed = True
        return start in win, len(positions)


def _acyclic_or_raise(left, right):
    for name, t in (("left", left), ("right", right)):
        if not t.is_acyclic():
            raise CyclicInput(f"the {name} system has a cycle; use a bounded mode")


def _run_game(left, right, relation, depth, frontier_wins):
    g = RunPairGame(left, right, depth, frontier_wins)
    if relation == "hhpb":
        ok, n = g.hereditary()
        return ok, g, n
    ok = g.eve_wins(((), ()), relation == "thpb")
    return ok, g, len(g.memo)


def decide(left: Tsi, right: Tsi, relation="hpb", mode="exact", depth=None) -> BisimResult:
    """Decide `relation` between two systems. `mode` is exact, bounded or local."""
    if relation not in RELATIONS:
        raise ValueError(f"unknown relation {relation!r}")
    if relation == "sb":
        return strong_bisim(left, right)
    if mode == "local":
        if relation != "hpb":
            raise ValueError("the local mode decides hpb only")
        return local_hpb(left, right)
    if mode == "exact":
        _acyclic_or_raise(left, right)
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 10_000))
        try:
            ok, g, n = _run_game(left, right, relation, None, True)
        finally:
            sys.setrecursionlimit(limit)
        witness = None
        if not ok and relation != "hhpb":
            witness = g.refutation(((), ()), relation == "thpb")
        return BisimResult(EQUIVALENT if ok else NOT_EQUIVALENT, relation, "exact", witness,
                           {"positions": n})
    if mode == "bounded":
        if depth is None or depth < 0:
            raise ValueError("bounded mode needs a non-negative depth")
        hi, g_hi, n = _run_game(left, right, relation, depth, True)
        if not hi:
            witness = None if relation == "hhpb" else g_hi.refutation(((), ()), relation == "thpb")
            return BisimResult(NOT_EQUIVALENT, relation, f"bounded={depth}", witness, {"positions": n})
        lo, g_lo, _ = _run_game(left, right, relation, depth, False)
        if lo:
            return BisimResult(EQUIVALENT, relation, f"bounded={depth}", None, {"positions": n})
        return BisimResult(UNKNOWN, relation, f"bounded={depth}", f"no refutation within {depth} steps",
                           {"positions": n})
    raise ValueError(f"unknown mode {mode!r}")


# ------------------------------------------------------------ local check

def _local_moves(tsi):
    def moves(pos):
        s, last = pos
        out = []
        for t in tsi.out(s):
            kind = "c" if causally_before(tsi, last, t.id) else "nc"
            out.append(((t.label, kind), (t.dst, t.id)))
        return out
    return moves


def _local_nodes(tsi):
    nodes = [(tsi.initial, EPS)]
    nodes += [(t.dst, t.id) for t in tsi.transitions]
    return nodes


def local_hpb(left: Tsi, right: Tsi, check_xi=True) -> BisimResult:
    """Bisimulation on (state, last transition) pairs that matches causal and concurrent steps.

    It coincides with hpb when both systems are well-behaved (no auto-concurrency,
    and free-choice or only deterministic confusion).
    """
    if check_xi:
        for name, t in (("left", left), ("right", right)):
            ok, why = is_xi_system(t)
            if not ok:
                raise NotXi(f"the {name} system is outside the class: {why[0]} at {why[1]}")
    lm, rm = _local_moves(left), _local_moves(right)
    rel, level = refine(lm, rm, _local_nodes(left), _local_nodes(right))
    start = ((left.initial, EPS), (right.initial, EPS))
    if start in rel:
        return BisimResult(EQUIVALENT, "hpb", "local", stats={"pairs": len(rel)})
    f = distinguishing(*start, lm, rm, level,
                       lambda key, body, b: Modal(b, key[0], key[1], body))
    return BisimResult(NOT_EQUIVALENT, "hpb", "local", witness=str(f))


# ------------------------------------------------------------ distinguishing formulas

def _process_moves(space: ProcessSpace, fragment):
    def moves(i):
        out = []
        if fragment in ("CLMU", "TFL"):
            for lab, ts in space.causal[i].items():
                out += [((lab, "c"), j) for j in ts]
            for lab, ts in space.noncausal[i].items():
                out += [((lab, "nc"), j) for j in ts]
        else:
            for table in (space.causal[i], space.noncausal[i]):
                for lab, ts in table.items():
                    out += [((lab, None), j) for j in ts]
        if fragment in ("TLMU", "TFL"):
            out += [(("co", None), j) for j in space.traces[i]]
        return out
    return moves


def _fragment_modality(key, body, is_box):
    lab, kind = key
    if lab == "co" and kind is None:
        return Co(is_box, body)
    if kind is None:
        return (box if is_box else dia)(lab, body)
    return Modal(is_box, lab, kind, body)


def distinguishing_formula(left: Tsi, right: Tsi, fragment="TFL", depth=4):
    """Fixpoint-free formula of `fragment` with modal depth at most `depth` that holds at the
    left initial process and fails at the right one, or None."""
    if fragment not in ("HML", "LMU", "TLMU", "CLMU", "TFL"):
        raise ValueError(fragment)
    ls, rs = build_process_space(left), build_process_space(right)
    lm, rm = _process_moves(ls, fragment), _process_moves(rs, fragment)
    rel, level = refine(lm, rm, range(len(ls)), range(len(rs)), max_level=depth)
    start = (ls.initial, rs.initial)
    if start in rel:
        return None
    return distinguishing(*start, lm, rm, level, _fragment_modality)


def logically_equivalent(left: Tsi, right: Tsi, fragment="TFL", depth=None) -> bool:
    """Equivalence under all fixpoint-free formulas of the fragment (any depth when None)."""
    ls, rs = build_process_space(left), build_process_space(right)
    lm, rm = _process_moves(ls, fragment), _process_moves(rs, fragment)
    rel, _ = refine(lm, rm, range(len(ls)), range(len(rs)), max_level=depth)
    return (ls.initial, rs.initial) in rel
