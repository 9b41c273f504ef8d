"""Model-checking games: Eve defends a formula at a process, Adam attacks it."""
from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import NotLmuFragment, UnboundVariable
from .logic import And, Co, Ff, Fix, Modal, Not, Or, Tt, Var, binder_depths, binder_table, \
    children, pnf, plain_modality, rename_apart, to_text
from .models import Tsi
from .order import ProcessSpace, build_process_space
from .parity import ADAM, EVE, ParityGame, check_strategy, random_playout, solve

PLAYER = {EVE: "eve", ADAM: "adam"}


def _priorities(f):
    depths = binder_depths(f)
    binders = binder_table(f)
    top = max(depths.values(), default=0)
    return {z: 2 * (top - d) + (2 if binders[z].greatest else 1) for z, d in depths.items()}


@dataclass
class McGame:
    nodes: list  # (position, formula)
    owner: list
    succ: list
    priority: list
    rule: list
    initial: int
    describe_position: object = None

    def parity(self) -> ParityGame:
        return ParityGame(self.owner, self.succ, self.priority)

    def describe(self, v):
        pos, f = self.nodes[v]
        where = self.describe_position(pos) if self.describe_position else str(pos)
        return f"{where} |- {to_text(f)}"

    def __len__(self):
        return len(self.nodes)


def _build(start, formula, moves, valuation, describe):
    """Generic builder. `moves(pos, f)` returns (owner, rule, successor positions-with-formulas)."""
    prio = _priorities(formula)
    binders = binder_table(formula)
    nodes, index = [], {}
    owner, succ, priority, rule = [], [], [], []

    def add(node):
        if node not in index:
            index[node] = len(nodes)
            nodes.append(node)
            owner.append(None)
            succ.append(None)
            priority.append(0)
            rule.append(None)
            todo.append(index[node])
        return index[node]

    todo = []
    init = add((start, formula))
    while todo:
        v = todo.pop()
        pos, f = nodes[v]
        if isinstance(f, Tt):
            o, r, nxt = ADAM, "TT", []
        elif isinstance(f, Ff):
            o, r, nxt = EVE, "FF", []
        elif isinstance(f, Var) and f.name in binders:
            o, r, nxt = EVE, "VAR", [(pos, binders[f.name].body)]
            priority[v] = prio[f.name]
        elif isinstance(f, (Var, Not)):
            name = f.name if isinstance(f, Var) else f.body.name
            if name not in valuation:
                raise UnboundVariable(f"variable {name} has no value")
            holds = valuation[name](pos)
            if isinstance(f, Not):
                holds = not holds
            o, r, nxt = (ADAM if holds else EVE), "VALUATION", []
        elif isinstance(f, Fix):
            o, r, nxt = EVE, "FP", [(pos, Var(f.var))]
        elif isinstance(f, Or):
            o, r, nxt = EVE, "OR", [(pos, f.left), (pos, f.right)]
        elif isinstance(f, And):
            o, r, nxt = ADAM, "AND", [(pos, f.left), (pos, f.right)]
        else:
            o, r, nxt = moves(pos, f)
        owner[v], rule[v] = o, r
        succ[v] = [add(n) for n in nxt]
    return McGame(nodes, owner, succ, priority, rule, init, describe)


def build_mc_game(model, formula, valuation=None) -> McGame:
    """Game graph for `formula` (converted to positive normal form) at the initial process."""
    space = model if isinstance(model, ProcessSpace) else build_process_space(model)
    f = rename_apart(pnf(formula))
    val = {k: (lambda p, s=frozenset(v): space.processes[p] in s) for k, v in (valuation or {}).items()}

    def moves(p, g):
        if isinstance(g, Modal):
            table = space.causal if g.kind == "c" else space.noncausal
            nxt = [(q, g.body) for q in table[p].get(g.label, ())]
            rule = ("BOX_" if g.box else "DIA_") + g.kind.upper()
            return (ADAM if g.box else EVE), rule, nxt
        if isinstance(g, Co):
            nxt = [(q, g.body) for q in space.traces[p]]
            return (ADAM if g.box else EVE), ("BOX_CO" if g.box else "DIA_CO"), nxt
        raise TypeError(g)

    game = _build(space.initial, f, moves, val, lambda p: space.processes[p].describe())
    game.space = space
    return game


@dataclass
class McSolution:
    winner: str
    winners: list  # per node: "eve" / "adam"
    strategy: dict  # node -> successor, for nodes owned by their winner

    @property
    def satisfied(self):
        return self.winner == "eve"


def solve_mc(game: McGame) -> McSolution:
    sol = solve(game.parity())
    winners = [PLAYER[w] for w in sol.winner]
    return McSolution(winners[game.initial], winners, sol.strategy)


def check_mc(model, formula):
    game = build_mc_game(model, formula)
    sol = solve_mc(game)
    return game, sol


def strategy_report(game: McGame, sol: McSolution):
    """Winner's moves on the nodes reachable from the start under the winning strategy."""
    player = EVE if sol.winner == "eve" else ADAM
    seen, stack, moves = {game.initial}, [game.initial], []
    while stack:
        v = stack.pop()
        if game.owner[v] == player and game.succ[v]:
            w = sol.strategy[v]
            if len(game.succ[v]) > 1:
                moves.append({"node": game.describe(v), "move": game.describe(w)})
            nxt = [w]
        else:
            nxt = game.succ[v]
        for w in nxt:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return sorted(moves, key=lambda m: m["node"])


def game_report(game: McGame, sol: McSolution):
    return {
        "winner": sol.winner,
        "node_count": len(game),
        "priorities_used": sorted(set(game.priority)),
        "strategy": strategy_report(game, sol),
    }


def verify_strategy(game: McGame, sol: McSolution, playouts=1000, seed=0):
    """Exact check plus random positional opponents. Returns the number of defeats."""
    player = EVE if sol.winner == "eve" else ADAM
    pg = game.parity()
    if not check_strategy(pg, game.initial, player, sol.strategy):
        return playouts + 1
    rng = random.Random(seed)
    return sum(1 for _ in range(playouts)
               if random_playout(pg, game.initial, player, sol.strategy, rng) != player)


def dead_end_winner(game: McGame, v):
    if game.succ[v]:
        return None
    return "adam" if game.owner[v] == EVE else "eve"


def replay(game: McGame, sol: McSolution, choose, max_steps=500):
    """Play out the game: the winner follows its strategy, `choose(v, options)` moves for the loser.

    Returns a list of steps; the last step names the winner and the reason.
    """
    player = EVE if sol.winner == "eve" else ADAM
    v = game.initial
    steps = []
    visited = {}
    while True:
        if not game.succ[v]:
            steps.append({"node": game.describe(v), "rule": game.rule[v],
                          "end": f"no move left; {dead_end_winner(game, v)} wins"})
            return steps
        if v in visited:
            cycle = [x for x, k in visited.items() if k >= visited[v]]
            top = max(cycle, key=lambda x: game.priority[x])
            win = "eve" if game.priority[top] % 2 == 0 else "adam"
            steps.append({"node": game.describe(v), "rule": game.rule[v],
                          "end": f"position repeats; outermost variable {to_text(game.nodes[top][1])} "
                                 f"recurs; {win} wins"})
            return steps
        if len(steps) >= max_steps:
            steps.append({"node": game.describe(v), "rule": game.rule[v], "end": "step limit"})
            return steps
        visited[v] = len(steps)
        mover = game.owner[v]
        if len(game.succ[v]) == 1:
            w = game.succ[v][0]
        elif mover == player:
            w = sol.strategy[v]
        else:
            w = choose(v, list(game.succ[v]))
        steps.append({"node": game.describe(v), "rule": game.rule[v], "mover": PLAYER[mover],
                      "move": game.describe(w)})
        v = w


def lmu_view(f):
    """Reject formulas that are not in the plain-modality mu-calculus."""

    def go(g):
        if plain_modality(g) is not None:
            go(plain_modality(g)[2])
            return
        if isinstance(g, (Modal, Co)):
            raise NotLmuFragment(f"{to_text(g)} is outside the plain-modality fragment")
        for c in children(g):
            go(c)

    go(f)
    return f


def build_stirling_game(lts: Tsi, formula, valuation=None) -> McGame:
    """The classic local game on states; independence is ignored."""
    f = lmu_view(rename_apart(pnf(formula)))
    val = {k: (lambda s, v=frozenset(v): s in v) for k, v in (valuation or {}).items()}

    def plain_moves(s, g):
        is_box, label, body = plain_modality(g)
        nxt = [(t.dst, body) for t in lts.out(s) if t.label == label]
        return (ADAM if is_box else EVE), ("BOX" if is_box else "DIA"), nxt

    # plain patterns are single positions in this game, so intercept them before Or/And
    return _build_plain(lts.initial, f, plain_moves, val)


def _build_plain(start, formula, plain_moves, valuation):
    prio = _priorities(formula)
    binders = binder_table(formula)
    nodes, index, todo = [], {}, []
    owner, succ, priority, rule = [], [], [], []

    def add(node):
        if node not in index:
            index[node] = len(nodes)
            nodes.append(node)
            owner.append(None)
            succ.append(None)
            priority.append(0)
            rule.append(None)
            todo.append(index[node])
        return index[node]

    init = add((start, formula))
    while todo:
        v = todo.pop()
        s, f = nodes[v]
        if plain_modality(f) is not None:
            o, r, nxt = plain_moves(s, f)
        elif isinstance(f, Tt):
            o, r, nxt = ADAM, "TT", []
        elif isinstance(f, Ff):
            o, r, nxt = EVE, "FF", []
        elif isinstance(f, Var) and f.name in binders:
            o, r, nxt = EVE, "VAR", [(s, binders[f.name].body)]
            priority[v] = prio[f.name]
        elif isinstance(f, (Var, Not)):
            name = f.name if isinstance(f, Var) else f.body.name
            if name not in valuation:
                raise UnboundVariable(f"variable {name} has no value")
            holds = valuation[name](s) != isinstance(f, Not)
            o, r, nxt = (ADAM if holds else EVE), "VALUATION", []
        elif isinstance(f, Fix):
            o, r, nxt = EVE, "FP", [(s, Var(f.var))]
        elif isinstance(f, Or):
            o, r, nxt = EVE, "OR", [(s, f.left), (s, f.right)]
        elif isinstance(f, And):
            o, r, nxt = ADAM, "AND", [(s, f.left), (s, f.right)]
        else:
            raise NotLmuFragment(to_text(f))
        owner[v], rule[v] = o, r
        succ[v] = [add(n) for n in nxt]
    return McGame(nodes, owner, succ, priority, rule, init, str)


def solve_stirling(lts: Tsi, formula, valuation=None):
    game = build_stirling_game(lts, formula, valuation)
    return game, solve_mc(game)


def project_to_states(game: McGame):
    """Node and edge sets of a process game seen on states, with plain-modality halves contracted."""
    space = game.space
    state = lambda v: space.processes[game.nodes[v][0]].state
    nodes, edges = set(), set()
    for v, (p, f) in enumerate(game.nodes):
        if isinstance(f, Modal):
            continue
        nodes.add((state(v), f))
        for w in game.succ[v]:
            if isinstance(game.nodes[w][1], Modal):
                for x in game.succ[w]:
                    edges.add(((state(v), f), (state(x), game.nodes[x][1])))
            else:
                edges.add(((state(v), f), (state(w), game.nodes[w][1])))
    return nodes, edges


def graph_sets(game: McGame):
    nodes = set(game.nodes)
    edges = {(game.nodes[v], game.nodes[w]) for v in range(len(game)) for w in game.succ[v]}
    return nodes, edges
