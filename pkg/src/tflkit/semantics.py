"""Set-based meaning of formulas over the process space of a TSI."""
from __future__ import annotations

from .errors import UnboundVariable
from .logic import And, Co, Ff, Fix, Modal, Not, Or, Tt, Var
from .models import Tsi
from .order import ProcessSpace, build_process_space


class Evaluator:
    """Evaluates formulas on a process space.

    `forced` optionally pins a set of process indices to a fixed truth value in
    every subformula; the bounded checks over truncated unfoldings use it.
    """

    def __init__(self, space: ProcessSpace, valuation=None, forced=None):
        self.space = space
        self.valuation = {k: frozenset(v) for k, v in (valuation or {}).items()}
        self.forced = forced
        self.iterations = {}
        self.trace = None

    def _pin(self, result):
        if self.forced is None:
            return result
        idx, value = self.forced
        return (result | idx) if value else (result - idx)

    def eval(self, f, env=None):
        env = {} if env is None else env
        return self._pin(self._eval(f, env))

    def _eval(self, f, env):
        sp = self.space
        if isinstance(f, Tt):
            return sp.full
        if isinstance(f, Ff):
            return frozenset()
        if isinstance(f, Var):
            if f.name in env:
                return env[f.name]
            if f.name in self.valuation:
                return self.valuation[f.name]
            raise UnboundVariable(f"variable {f.name} has no value")
        if isinstance(f, Not):
            return sp.full - self.eval(f.body, env)
        if isinstance(f, And):
            return self.eval(f.left, env) & self.eval(f.right, env)
        if isinstance(f, Or):
            return self.eval(f.left, env) | self.eval(f.right, env)
        if isinstance(f, Modal):
            body = self.eval(f.body, env)
            table = sp.causal if f.kind == "c" else sp.noncausal
            if f.box:
                return frozenset(i for i in sp.full if all(j in body for j in table[i].get(f.label, ())))
            return frozenset(i for i in sp.full if any(j in body for j in table[i].get(f.label, ())))
        if isinstance(f, Co):
            body = self.eval(f.body, env)
            if f.box:
                return frozenset(i for i in sp.full if all(j in body for j in sp.traces[i]))
            return frozenset(i for i in sp.full if any(j in body for j in sp.traces[i]))
        if isinstance(f, Fix):
            chain = self.iterate(f, env)
            return chain[-1]
        raise TypeError(f)

    def iterate(self, f: Fix, env):
        current = self.space.full if f.greatest else frozenset()
        chain = [current]
        while True:
            nxt = self.eval(f.body, {**env, f.var: current})
            if nxt == current:
                break
            chain.append(nxt)
            current = nxt
        self.iterations[f.var] = len(chain)
        return chain


def _space(model, cap=None):
    if isinstance(model, ProcessSpace):
        return model
    if isinstance(model, Tsi):
        return build_process_space(model) if cap is None else build_process_space(model, cap)
    raise TypeError(f"expected a TSI or a process space, got {type(model).__name__}")


def _valuation_indices(space, valuation):
    if not valuation:
        return None
    return {k: frozenset(space.index[p] for p in v) for k, v in valuation.items()}


def denote(f, model, valuation=None):
    """Set of processes satisfying `f`."""
    space = _space(model)
    ev = Evaluator(space, _valuation_indices(space, valuation))
    return frozenset(space.processes[i] for i in ev.eval(f))


def denote_indices(f, space: ProcessSpace, valuation=None, forced=None):
    return Evaluator(space, valuation, forced).eval(f)


def satisfies(model, f, valuation=None) -> bool:
    space = _space(model)
    ev = Evaluator(space, _valuation_indices(space, valuation))
    return space.initial in ev.eval(f)


def check_report(model, f):
    space = _space(model)
    ev = Evaluator(space)
    den = ev.eval(f)
    return {
        "satisfied": space.initial in den,
        "denotation_size": len(den),
        "approximant_lengths": dict(sorted(ev.iterations.items())),
    }


def approximants(f: Fix, model, valuation=None):
    """Knaster-Tarski iterates of the outermost fixpoint, as sets of processes."""
    if not isinstance(f, Fix):
        raise ValueError("approximants need a fixpoint formula")
    space = _space(model)
    ev = Evaluator(space, _valuation_indices(space, valuation))
    chain = ev.iterate(f, {})
    return [frozenset(space.processes[i] for i in x) for x in chain]
