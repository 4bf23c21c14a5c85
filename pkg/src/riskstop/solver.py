"""Backward induction for the risk-averse stopping problem."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import RiskStopError, UnsupportedOrderError
from .model import StoppingModel, TransitionKernel
from .risk import RiskKind, RiskSpec, _evaluate, cvar_minimal_element, evaluate_risk

STOP, CONTINUE = "S", "C"


@dataclass(frozen=True, eq=False)
class PolicyTables:
    """``stop[t, x]`` is True where the policy stops (t = 0..T-1)."""

    stop: np.ndarray

    def __post_init__(self):
        s = np.array(self.stop, dtype=bool)
        if s.ndim != 2:
            raise RiskStopError("policy table must be (time x state)")
        s.setflags(write=False)
        object.__setattr__(self, "stop", s)

    @classmethod
    def constant(cls, horizon, n_states, stop: bool) -> "PolicyTables":
        return cls(np.full((horizon, n_states), stop, dtype=bool))

    def action(self, t, x) -> str:
        return STOP if self.stop[t, x] else CONTINUE

    def __eq__(self, other):
        if not isinstance(other, PolicyTables):
            return NotImplemented
        return np.array_equal(self.stop, other.stop)

    def __hash__(self):
        return hash(self.stop.tobytes())


@dataclass(frozen=True)
class SolveResult:
    values: np.ndarray       # (T+1, n)
    policy: PolicyTables
    L: np.ndarray            # continuation loss, (T, n)
    M: np.ndarray            # one-step loss, (T, n)

    @property
    def horizon(self) -> int:
        return self.L.shape[0]


def _row_risk(spec, support, table):
    idx, w = support
    return _evaluate(spec, w.tolist(), table[idx].tolist())


def solve_dp(model: StoppingModel) -> SolveResult:
    T, n = model.horizon, model.n_states
    s, c = model.costs.stop, model.costs.cont
    v = np.empty((T + 1, n))
    L = np.empty((T, n))
    M = np.empty((T, n))
    stop = np.empty((T, n), dtype=bool)
    v[T] = s[T]
    for t in range(T - 1, -1, -1):
        spec = model.risk[t]
        rows = model.kernel.supports[t]
        for x in range(n):
            ahead = c[t, x] + _row_risk(spec, rows[x], v[t + 1])
            L[t, x] = ahead - s[t, x]
            M[t, x] = c[t, x] + _row_risk(spec, rows[x], s[t + 1]) - s[t, x]
            # ties stop
            stop[t, x] = L[t, x] >= 0
            v[t, x] = s[t, x] if stop[t, x] else ahead
    return SolveResult(v, PolicyTables(stop), L, M)


def one_step_lookahead_policy(result: SolveResult) -> PolicyTables:
    """Stop exactly where the one-step loss is nonnegative."""
    return PolicyTables(result.M >= 0)


def policy_value_tables(model: StoppingModel, policy: PolicyTables) -> np.ndarray:
    T, n = model.horizon, model.n_states
    if policy.stop.shape != (T, n):
        raise RiskStopError(f"policy shape {policy.stop.shape} does not match {(T, n)}")
    s, c = model.costs.stop, model.costs.cont
    w = np.empty((T + 1, n))
    w[T] = s[T]
    for t in range(T - 1, -1, -1):
        rows = model.kernel.supports[t]
        for x in range(n):
            if policy.stop[t, x]:
                w[t, x] = s[t, x]
            else:
                w[t, x] = c[t, x] + _row_risk(model.risk[t], rows[x], w[t + 1])
    return w


def evaluate_policy(model: StoppingModel, policy: PolicyTables) -> np.ndarray:
    """Nested risk of the cost stream under ``policy``, per start state."""
    return policy_value_tables(model, policy)[0]


def loss_recursion_gap(model: StoppingModel, result: SolveResult) -> np.ndarray:
    """``L_t - M_t - rho_t(min{0, L_{t+1}})`` with the last epoch compared to zero.

    Zero under comonotone conditions; nonpositive whenever the risk mapping is
    subadditive.
    """
    T, n = model.horizon, model.n_states
    gap = np.empty((T, n))
    gap[T - 1] = result.L[T - 1] - result.M[T - 1]
    for t in range(T - 2, -1, -1):
        rows = model.kernel.supports[t]
        neg = np.minimum(0.0, result.L[t + 1])
        for x in range(n):
            gap[t, x] = result.L[t, x] - result.M[t, x] - _row_risk(model.risk[t], rows[x], neg)
    return gap


def risk_neutral_equivalent(model: StoppingModel) -> StoppingModel:
    """Swap each CVaR mapping for an expectation under the minimal envelope element.

    Valid for scalar state grids where values are decreasing in the state.
    """
    if not model.grid.is_scalar:
        raise UnsupportedOrderError("the minimal envelope element is only built for scalar grids")
    coords = model.grid.coords[0]
    mats = []
    for t, spec in enumerate(model.risk):
        if spec.kind is not RiskKind.CVAR:
            raise RiskStopError(f"risk at t={t} is {spec}, need CVaR")
        m = model.kernel.matrices[t]
        mats.append(np.stack([cvar_minimal_element(m[x], coords, spec.alpha).weights
                              for x in range(m.shape[0])]))
    return StoppingModel(model.horizon, model.grid, TransitionKernel(tuple(mats)), model.costs,
                         RiskSpec.expectation(), name=f"{model.name}-risk-neutral",
                         meta=dict(model.meta))


# -- risk-aversion comparison ------------------------------------------------

def _as_specs(spec, horizon):
    if isinstance(spec, RiskSpec):
        return (spec,) * horizon
    spec = tuple(spec)
    if len(spec) == 1:
        return spec * horizon
    if len(spec) != horizon:
        raise RiskStopError(f"need {horizon} risk specs, got {len(spec)}")
    return spec


def probe_dominance(specs_a, specs_b, trials: int = 200, seed: int = 0, tol: float = 1e-12):
    """Randomized check of ``rho_a >= rho_b`` and ``rho_b >= rho_a``.

    Returns ``(a_ge_b, b_ge_a, witness)``; the witness is the first sample
    refuting whichever direction failed first.
    """
    rng = np.random.default_rng(seed)
    a_ge, b_ge, witness = True, True, None
    for _ in range(trials):
        k = int(rng.integers(1, 7))
        w = rng.dirichlet(np.ones(k))
        z = rng.normal(0, 5, k)
        for t, (sa, sb) in enumerate(zip(specs_a, specs_b)):
            ra, rb = evaluate_risk(sa, w, z), evaluate_risk(sb, w, z)
            if ra < rb - tol and a_ge:
                a_ge = False
                witness = witness or {"t": t, "weights": w.tolist(), "values": z.tolist(),
                                      "a": ra, "b": rb}
            if rb < ra - tol and b_ge:
                b_ge = False
                witness = witness or {"t": t, "weights": w.tolist(), "values": z.tolist(),
                                      "a": ra, "b": rb}
    return a_ge, b_ge, witness


@dataclass
class RiskComparison:
    direction: Optional[str]       # "a>=b", "b>=a", "equal" or None
    probe_witness: Optional[dict]
    values_ordered: Optional[bool]
    value_witness: Optional[tuple]
    threshold_reports: list
    result_a: Optional[SolveResult] = None
    result_b: Optional[SolveResult] = None

    @property
    def ok(self) -> bool:
        from .structure import Verdict
        return (self.direction is not None and bool(self.values_ordered)
                and all(r.verdict is not Verdict.VIOLATED for r in self.threshold_reports))


def compare_risk_aversion(model: StoppingModel, spec_a, spec_b, trials: int = 200,
                          seed: int = 0, tol: float = 1e-12) -> RiskComparison:
    """Solve two instances differing only in risk and compare values and limits.

    The dominance direction is probed first; if neither instance dominates
    the other, nothing is solved and ``direction`` is None.
    """
    from .structure import check_threshold_monotonicity, extract_control_limits

    T = model.horizon
    specs_a, specs_b = _as_specs(spec_a, T), _as_specs(spec_b, T)
    a_ge, b_ge, witness = probe_dominance(specs_a, specs_b, trials, seed)
    if not (a_ge or b_ge):
        return RiskComparison(None, witness, None, None, [])
    direction = "equal" if a_ge and b_ge else ("a>=b" if a_ge else "b>=a")
    res_a = solve_dp(model.with_risk(specs_a))
    res_b = solve_dp(model.with_risk(specs_b))
    hi, lo = (res_a, res_b) if a_ge else (res_b, res_a)
    bad = np.argwhere(hi.values < lo.values - tol)
    value_witness = None
    if bad.size:
        t, x = bad[0]
        value_witness = (int(t), int(x), float(hi.values[t, x]), float(lo.values[t, x]))
    reports = []
    for dim in range(model.grid.dims):
        rep_hi, th_hi = extract_control_limits(hi.policy, model.grid, dim)
        rep_lo, th_lo = extract_control_limits(lo.policy, model.grid, dim)
        if th_hi is None or th_lo is None:
            reports.append(rep_hi if th_hi is None else rep_lo)
            continue
        reports.append(check_threshold_monotonicity(th_hi, "acrossInstances", other=th_lo))
    return RiskComparison(direction, witness if not (a_ge and b_ge) else None,
                          value_witness is None, value_witness, reports, res_a, res_b)
