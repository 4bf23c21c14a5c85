"""Brute-force ground truth for small stopping problems.

Nothing here calls the solver.  Policies are enumerated exhaustively and
evaluated with a batched nested recursion; the scenario-tree evaluator
folds risk from the leaves of the explicit tree with ``cvar_oracle``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError
from .model import StoppingModel
from .risk import RiskKind, RiskSpec, cvar_oracle


@dataclass(frozen=True)
class EnumerationBudget:
    max_states: int = 4
    max_horizon: int = 3
    max_policies: int = 2 ** 12

    def admit(self, model: StoppingModel):
        n, T = model.n_states, model.horizon
        if n > self.max_states or T > self.max_horizon or 2 ** (n * T) > self.max_policies:
            raise BudgetExceededError(
                f"{n} states x horizon {T} needs 2^{n * T} policies, budget is "
                f"{self.max_states} states, horizon {self.max_horizon}, "
                f"{self.max_policies} policies")


def _batched_risk(spec: RiskSpec, probs: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Risk of each row of ``values`` (P, n) under each kernel row ``probs`` (n, n).

    Returns (P, n): entry [p, x] is the risk of ``values[p]`` under ``probs[x]``.
    """
    mean = values @ probs.T

    def tail(alpha):
        # min over candidate levels u (all table values) of u + E(Z-u)+/alpha
        excess = np.maximum(values[:, None, :] - values[:, :, None], 0.0)   # (P, u, y)
        obj = values[:, :, None] + np.einsum("puy,xy->pux", excess, probs) / alpha
        return obj.min(axis=1)

    kind = spec.kind
    if kind is RiskKind.EXPECTATION:
        return mean
    if kind is RiskKind.CVAR:
        return tail(spec.alpha)
    if kind is RiskKind.MEAN_CVAR:
        return (1 - spec.kappa) * mean + spec.kappa * tail(spec.gamma)
    upper = np.maximum(values[:, None, :] - mean[:, :, None], 0.0)        # (P, x, y)
    return mean + spec.kappa * np.einsum("pxy,xy->px", upper, probs)


def all_policies(horizon: int, n_states: int) -> np.ndarray:
    """Every stop table as a (P, T, n) boolean array.

    Policy ``k`` reads ``k`` in binary with cell (0, 0) as the most
    significant bit; a set bit means continue.  Index order is therefore the
    lexicographic order of the action tables with stop before continue.
    """
    cells = horizon * n_states
    k = np.arange(2 ** cells, dtype=np.int64)
    bits = (k[:, None] >> np.arange(cells - 1, -1, -1)) & 1
    return (bits == 0).reshape(-1, horizon, n_states)


def enumerate_policies(model: StoppingModel, budget: EnumerationBudget = EnumerationBudget()):
    """Minimize the nested risk over all deterministic Markov policies.

    Returns ``(best_values, best_policies)``: per start state the minimum
    and the lexicographically first stop table attaining it.
    """
    budget.admit(model)
    T, n = model.horizon, model.n_states
    stops = all_policies(T, n)
    s, c = model.costs.stop, model.costs.cont
    w = np.broadcast_to(s[T], (stops.shape[0], n)).copy()
    for t in range(T - 1, -1, -1):
        go = c[t] + _batched_risk(model.risk[t], model.kernel.matrices[t], w)
        w = np.where(stops[:, t, :], s[t], go)
    best = w.argmin(axis=0)
    return w[best, np.arange(n)], stops[best]


def nested_risk_tree(model: StoppingModel, policy_stop, max_nodes: int = 200_000) -> np.ndarray:
    """Nested risk of the policy's cost stream by explicit scenario trees.

    ``policy_stop`` is a (T, n) boolean stop table.
    """
    T, n = model.horizon, model.n_states
    policy_stop = np.asarray(policy_stop, dtype=bool)
    s, c = model.costs.stop, model.costs.cont
    support = [[np.flatnonzero(m[x] > 0) for x in range(n)] for m in model.kernel.matrices]
    budget = [max_nodes]

    def fold(t, x):
        budget[0] -= 1
        if budget[0] < 0:
            raise BudgetExceededError(f"scenario tree exceeds {max_nodes} nodes")
        if t == T:
            return float(s[T, x])
        if policy_stop[t, x]:
            return float(s[t, x])
        kids = support[t][x]
        probs = model.kernel.matrices[t][x, kids]
        leaf = [fold(t + 1, int(y)) for y in kids]
        return float(c[t, x]) + _tree_risk(model.risk[t], probs.tolist(), leaf)

    return np.array([fold(0, x) for x in range(n)])


def _tree_risk(spec: RiskSpec, w, v):
    mean = sum(wi * vi for wi, vi in zip(w, v))
    kind = spec.kind
    if kind is RiskKind.EXPECTATION:
        return mean
    if kind is RiskKind.CVAR:
        return cvar_oracle(w, v, spec.alpha)
    if kind is RiskKind.MEAN_CVAR:
        return (1 - spec.kappa) * mean + spec.kappa * cvar_oracle(w, v, spec.gamma)
    return mean + spec.kappa * sum(wi * max(vi - mean, 0.0) for wi, vi in zip(w, v))
