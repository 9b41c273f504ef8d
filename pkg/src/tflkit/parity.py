"""Max-parity games solved with Zielonka's recursive algorithm.

Player 0 is Eve (wins on even priorities), player 1 is Adam. A player who
must move from a node without successors loses.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

EVE, ADAM = 0, 1


@dataclass
class ParityGame:
    owner: list  # node -> EVE / ADAM
    succ: list  # node -> list of successor nodes
    priority: list

    def __len__(self):
        return len(self.owner)


@dataclass
class ParitySolution:
    winner: list  # node -> EVE / ADAM
    strategy: dict  # node -> chosen successor, for nodes owned by their winner


def _attractor(game, nodes, target, player, pred):
    attr = set(target)
    strat = {}
    count = {v: sum(1 for w in game.succ[v] if w in nodes) for v in nodes}
    queue = list(target)
    while queue:
        w = queue.pop()
        for v in pred[w]:
            if v not in nodes or v in attr:
                continue
            if game.owner[v] == player:
                attr.add(v)
                strat[v] = w
                queue.append(v)
            else:
                count[v] -= 1
                if count[v] == 0:
                    attr.add(v)
                    queue.append(v)
    return attr, strat


def _zielonka(game, nodes, pred):
    if not nodes:
        return [set(), set()], {}
    p = max(game.priority[v] for v in nodes)
    i = p % 2
    top = {v for v in nodes if game.priority[v] == p}
    a, a_strat = _attractor(game, nodes, top, i, pred)
    w, strat = _zielonka(game, nodes - a, pred)
    if not w[1 - i]:
        win = [set(), set()]
        win[i] = set(nodes)
        out = dict(strat)
        out.update(a_strat)
        for v in top:
            if game.owner[v] == i:
                out[v] = next(x for x in game.succ[v] if x in nodes)
        return win, {v: x for v, x in out.items() if game.owner[v] == i}
    b, b_strat = _attractor(game, nodes, w[1 - i], 1 - i, pred)
    w2, strat2 = _zielonka(game, nodes - b, pred)
    win = [set(), set()]
    win[i] = w2[i]
    win[1 - i] = w2[1 - i] | b
    out = {}
    for v, x in strat2.items():
        out[v] = x
    for v in w[1 - i]:
        if v in strat and game.owner[v] == 1 - i:
            out[v] = strat[v]
    for v, x in b_strat.items():
        if v not in w[1 - i]:
            out[v] = x
    return win, out


def solve(game: ParityGame) -> ParitySolution:
    n = len(game)
    # total game: dead ends move to a sink that their owner loses
    owner = list(game.owner) + [EVE, ADAM]
    succ = [list(s) for s in game.succ] + [[n], [n + 1]]
    priority = list(game.priority) + [1, 0]
    # node n: Eve's losing sink (odd self-loop); node n+1: Adam's losing sink (even)
    for v in range(n):
        if not succ[v]:
            succ[v] = [n] if owner[v] == EVE else [n + 1]
    total = ParityGame(owner, succ, priority)
    pred = [[] for _ in range(n + 2)]
    for v, ws in enumerate(succ):
        for w in ws:
            pred[w].append(v)
    win, strat = _zielonka(total, set(range(n + 2)), pred)
    winner = [EVE if v in win[EVE] else ADAM for v in range(n)]
    strategy = {v: x for v, x in strat.items() if v < n and x < n and winner[v] == owner[v]}
    return ParitySolution(winner, strategy)


def check_strategy(game: ParityGame, start, player, strategy) -> bool:
    """Exact check that `strategy` wins for `player` from `start` against every opponent."""
    reach = []
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        reach.append(v)
        if game.owner[v] == player:
            if not game.succ[v]:
                return False
            if v not in strategy or strategy[v] not in game.succ[v]:
                return False
            nxt = [strategy[v]]
        else:
            nxt = game.succ[v]
        for w in nxt:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    # no reachable cycle may have a maximal priority of the opponent's parity
    opp = 1 - player
    for p in sorted({game.priority[v] for v in reach if game.priority[v] % 2 == opp}):
        sub = {v for v in reach if game.priority[v] <= p}
        if _cycle_through(game, sub, p, player, strategy):
            return False
    return True


def _cycle_through(game, sub, p, player, strategy):
    def nexts(v):
        if game.owner[v] == player:
            return [strategy[v]] if strategy[v] in sub else []
        return [w for w in game.succ[v] if w in sub]

    for v in sub:
        if game.priority[v] != p:
            continue
        seen = set()
        stack = list(nexts(v))
        while stack:
            w = stack.pop()
            if w == v:
                return True
            if w in seen:
                continue
            seen.add(w)
            stack.extend(nexts(w))
    return False


def random_playout(game: ParityGame, start, player, strategy, rng: random.Random, max_steps=None):
    """Play `strategy` against a random positional opponent. Returns the winner."""
    opp_choice = {}
    v = start
    order = {}
    path = []
    while v not in order:
        order[v] = len(path)
        path.append(v)
        succ = game.succ[v]
        if not succ:
            return 1 - game.owner[v]
        if game.owner[v] == player:
            v = strategy[v]
        else:
            if v not in opp_choice:
                opp_choice[v] = rng.choice(succ)
            v = opp_choice[v]
    cycle = path[order[v]:]
    return max(game.priority[x] for x in cycle) % 2
