"""Checkers for monotonicity, comonotonicity and control-limit structure.

Every checker returns a ``StructureReport`` (or a list of them).  A
``Violated`` report always carries a witness that can be replayed against
the inputs.  Monotonicity along the componentwise order is checked on
neighbouring grid points only, which is exact because the order on a
product grid is generated by unit steps along each axis.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import RiskStopError
from .model import StateGrid, StoppingModel, TransitionKernel
from .risk import SUPPORT_EPS, Dominance, OrderSpec, fosd_compare

TOL = 1e-10


class Verdict(str, enum.Enum):
    HOLDS = "Holds"
    VIOLATED = "Violated"
    NOT_APPLICABLE = "NotApplicable"
    APPROXIMATE = "ApproximateHolds"


@dataclass(frozen=True)
class StructureReport:
    item: str
    verdict: Verdict
    witness: Optional[dict] = None
    detail: str = ""

    def __post_init__(self):
        if self.verdict is Verdict.VIOLATED and self.witness is None:
            raise RiskStopError(f"violated report {self.item!r} needs a witness")

    def __bool__(self):
        return self.verdict in (Verdict.HOLDS, Verdict.APPROXIMATE)

    @property
    def violated(self) -> bool:
        return self.verdict is Verdict.VIOLATED

    def to_dict(self) -> dict:
        return {"item": self.item, "verdict": self.verdict.value,
                "witness": _jsonable(self.witness), "detail": self.detail}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


def _holds(item, detail="") -> StructureReport:
    return StructureReport(item, Verdict.HOLDS, None, detail)


def _violated(item, witness, detail="") -> StructureReport:
    return StructureReport(item, Verdict.VIOLATED, witness, detail)


def neighbour_pairs(grid: StateGrid, dims=None):
    """Yield ``(axis, lower, upper)`` flat-index arrays of unit steps along ``dims``."""
    dims = range(grid.dims) if dims is None else dims
    flat = np.arange(grid.size).reshape(grid.shape)
    for axis in dims:
        lo = np.take(flat, np.arange(grid.shape[axis] - 1), axis=axis).ravel()
        hi = np.take(flat, np.arange(1, grid.shape[axis]), axis=axis).ravel()
        yield axis, lo, hi


def _dims(grid, dims):
    if dims is None or dims == "all":
        return tuple(range(grid.dims))
    if isinstance(dims, (int, np.integer)):
        return (int(dims),)
    return tuple(int(d) for d in dims)


def check_table_monotonicity(tables, grid: StateGrid, direction: str = "decreasing",
                             dims=None, strict: bool = False, item: str = "monotone_table",
                             tol: float = TOL, label: str = "t") -> StructureReport:
    """Monotonicity of each row of ``tables`` (time x state) along ``dims``.

    Weak checks allow rises of at most ``tol``; strict checks demand a drop
    (or rise) of more than zero at every unit step.
    """
    tables = np.atleast_2d(np.asarray(tables, dtype=float))
    if direction not in ("decreasing", "increasing"):
        raise RiskStopError(f"unknown direction {direction!r}")
    sign = 1.0 if direction == "increasing" else -1.0
    for axis, lo, hi in neighbour_pairs(grid, _dims(grid, dims)):
        step = sign * (tables[:, hi] - tables[:, lo])
        bad = step <= 0 if strict else step < -tol
        if np.any(bad):
            t, k = np.argwhere(bad)[0]
            x, y = int(lo[k]), int(hi[k])
            return _violated(item, {label: int(t), "axis": axis, "state": x, "next_state": y,
                                    "coords": (grid.points[x].tolist(), grid.points[y].tolist()),
                                    "values": (float(tables[t, x]), float(tables[t, y]))},
                             f"not {'strictly ' if strict else ''}{direction} along axis {axis}")
    return _holds(item, f"{'strictly ' if strict else ''}{direction} along axes {_dims(grid, dims)}")


def _restricted_fosd(upper, lower, points, order):
    """FOSD of two laws on the union of their supports (exact for upper sets)."""
    keep = np.flatnonzero((upper > SUPPORT_EPS) | (lower > SUPPORT_EPS))
    return fosd_compare(upper[keep], lower[keep], points[keep], order)


def check_stochastic_monotonicity(kernel: TransitionKernel, grid: StateGrid,
                                  order: Optional[OrderSpec] = None, dims=None,
                                  item: str = "stochastic_monotonicity") -> StructureReport:
    """Every next-state law dominates the law of each lower neighbour."""
    pts = grid.points
    approx = False
    for t, m in enumerate(kernel.matrices):
        for axis, lo, hi in neighbour_pairs(grid, _dims(grid, dims)):
            for x, y in zip(lo.tolist(), hi.tolist()):
                if np.array_equal(m[x], m[y]):
                    continue
                res = _restricted_fosd(m[y], m[x], pts, order)
                if res.relation not in (Dominance.A_DOMINATES_B, Dominance.EQUAL):
                    return _violated(item, {"t": t, "axis": axis, "state": x, "next_state": y,
                                            "relation": res.relation.value},
                                     "law at the larger state does not dominate")
                approx |= res.approximate
    if approx:
        return StructureReport(item, Verdict.APPROXIMATE, None,
                               "some comparisons used the coordinate-marginal check")
    return _holds(item)


def check_monotone_costs(costs, grid: StateGrid, order=None, direction: str = "decreasing",
                         dims=None, item: str = "monotone_costs") -> StructureReport:
    """Stop and continuation costs monotone along ``dims``."""
    for name, table in (("stop", costs.stop), ("continue", costs.cont)):
        rep = check_table_monotonicity(table, grid, direction, dims, item=item)
        if rep.violated:
            return _violated(item, dict(rep.witness, table=name), rep.detail)
    return _holds(item, f"stop and continuation costs {direction}")


def _split_kernel(model: StoppingModel, first):
    grid = model.grid
    rest = tuple(d for d in range(grid.dims) if d not in first)
    perm = tuple(first) + rest
    n1 = int(np.prod([grid.shape[d] for d in first]))
    n2 = int(np.prod([grid.shape[d] for d in rest])) if rest else 1
    mats = []
    for m in model.kernel.matrices:
        m = m.reshape(grid.shape + grid.shape)
        m = m.transpose(perm + tuple(grid.dims + p for p in perm))
        mats.append(m.reshape(n1, n2, n1, n2))
    sub = StateGrid(tuple(grid.coords[d] for d in first))
    return mats, sub, rest, perm


def check_partial_assumptions(model: StoppingModel, split=(0,), tol: float = 1e-12):
    """Two-factor conditions for monotonicity in the first factor.

    ``split`` lists the dimensions of the first factor; the rest form the
    second.  Checks that (i) the law of the second factor does not depend on
    the first, (ii) given each next value of the second factor, the first
    factor's law is stochastically increasing in its current value and
    (iii) costs decrease along the first factor.  Returns three reports.
    """
    first = _dims(model.grid, split)
    mats, sub, rest, perm = _split_kernel(model, first)
    reports = []

    item = "second_factor_marginal_invariance"
    rep = _holds(item)
    for t, m in enumerate(mats):
        marg = m.sum(axis=2)                           # (x1, x2, y2)
        dev = np.abs(marg - marg[:1])
        if np.any(dev > tol):
            x1, x2, y2 = np.argwhere(dev > tol)[0]
            rep = _violated(item, {"t": t, "first": int(x1), "second": int(x2), "next_second": int(y2),
                                   "values": (float(marg[0, x2, y2]), float(marg[x1, x2, y2]))},
                            "second-factor law shifts with the first factor")
            break
    reports.append(rep)

    item = "first_factor_conditional_monotonicity"
    rep = _holds(item)
    pts = sub.points
    approx = False
    for t, m in enumerate(mats):
        if rep.violated:
            break
        for x2 in range(m.shape[1]):
            for y2 in range(m.shape[3]):
                cond = m[:, x2, :, y2]                  # (x1, y1)
                mass = cond.sum(axis=1)
                for axis, lo, hi in neighbour_pairs(sub):
                    for a, b in zip(lo.tolist(), hi.tolist()):
                        if mass[a] <= SUPPORT_EPS or mass[b] <= SUPPORT_EPS:
                            continue
                        res = _restricted_fosd(cond[b] / mass[b], cond[a] / mass[a], pts, None)
                        approx |= res.approximate
                        if res.relation not in (Dominance.A_DOMINATES_B, Dominance.EQUAL):
                            rep = _violated(item, {"t": t, "second": x2, "next_second": y2,
                                                   "axis": axis, "first": a, "next_first": b,
                                                   "relation": res.relation.value})
                            break
                    if rep.violated:
                        break
                if rep.violated:
                    break
            if rep.violated:
                break
    if not rep.violated and approx:
        rep = StructureReport(item, Verdict.APPROXIMATE)
    reports.append(rep)

    reports.append(check_monotone_costs(model.costs, model.grid, dims=first,
                                        item="first_factor_monotone_costs"))
    return reports


def check_value_monotonicity(values, grid: StateGrid, order=None, dims=None,
                             direction: str = "decreasing") -> StructureReport:
    return check_table_monotonicity(values, grid, direction, dims, item="value_monotonicity")


def check_loss_monotonicity(result, grid: StateGrid, which: str = "L", dims=None,
                            direction: str = "decreasing", strict: bool = False) -> StructureReport:
    """Monotonicity of the continuation loss (``L``) or one-step loss (``M``)."""
    if which not in ("L", "M"):
        raise RiskStopError(f"loss table must be 'L' or 'M', got {which!r}")
    table = getattr(result, which) if hasattr(result, which) else result
    item = "continuation_loss_monotonicity" if which == "L" else "one_step_loss_monotonicity"
    return check_table_monotonicity(table, grid, direction, dims, strict=strict, item=item)


def check_comonotone_dynamics(model: StoppingModel) -> StructureReport:
    item = "comonotone_dynamics"
    cert = model.certificate
    if cert is None:
        return StructureReport(item, Verdict.NOT_APPLICABLE, None, "no shared-shock certificate")
    if model.grid.is_scalar:
        return _holds(item, "scalar states are trivially comonotone")
    if cert.holds:
        return _holds(item, f"max projection displacement {cert.max_displacement:.3g}")
    t, x, pair, atoms = cert.witness
    return _violated(item, {"t": t, "state": x, "components": pair, "shock_atoms": atoms})


def check_comonotone_risk(model: StoppingModel) -> StructureReport:
    item = "comonotone_risk"
    bad = [t for t, r in enumerate(model.risk) if not r.is_comonotone]
    if bad:
        return _violated(item, {"t": bad[0], "risk": str(model.risk[bad[0]])},
                         "mean-semideviation is not comonotone additive")
    return _holds(item)


# -- control limits ------------------------------------------------------------

CONTINUE_ABOVE = "continue_above"
STOP_ABOVE = "stop_above"


@dataclass(frozen=True, eq=False)
class ThresholdTables:
    """Control limits along ``dim`` for every time and slice of the other dims.

    ``values`` has shape ``(T, *other_shape)``.  With ``continue_above`` the
    policy stops at and below the limit (the largest stopping coordinate,
    ``-inf`` if it never stops); with ``stop_above`` it stops at and above
    it (the smallest stopping coordinate, ``+inf`` if it never stops).
    """

    dim: int
    orientation: str
    values: np.ndarray

    def slice_values(self, t):
        return self.values[t]

    def __eq__(self, other):
        if not isinstance(other, ThresholdTables):
            return NotImplemented
        return (self.dim == other.dim and self.orientation == other.orientation
                and np.array_equal(self.values, other.values))


def _slice_pattern(actions):
    """Which orientations a stop/continue sequence fits, plus a breaking triple."""
    a = np.asarray(actions, dtype=bool)
    n = a.size
    changes = np.flatnonzero(a[1:] != a[:-1])
    fits = set()
    if changes.size == 0:
        fits = {CONTINUE_ABOVE, STOP_ABOVE}
    elif changes.size == 1:
        fits = {CONTINUE_ABOVE} if a[0] else {STOP_ABOVE}
    triple = None
    if changes.size >= 2:
        triple = (int(changes[0]), int(changes[1]), int(changes[1]) + 1)
    return fits, triple


def extract_control_limits(policy, grid: StateGrid, dim: int, orientation: Optional[str] = None):
    """Control limits along ``dim``.

    Returns ``(report, tables)``; ``tables`` is None when some slice
    switches more than once or the slices disagree on orientation.  Without
    an explicit ``orientation``, continue-above is preferred and stop-above
    is used only if every slice fits it and some slice fits nothing else.
    """
    stop = policy.stop if hasattr(policy, "stop") else np.asarray(policy, dtype=bool)
    T = stop.shape[0]
    item = f"control_limit_dim{dim}"
    cube = np.moveaxis(stop.reshape((T,) + grid.shape), 1 + dim, -1)   # (T, *others, n_dim)
    other_shape = cube.shape[1:-1]
    coords = grid.coords[dim]
    fit_all = {CONTINUE_ABOVE, STOP_ABOVE}
    for idx in np.ndindex((T,) + other_shape):
        fits, triple = _slice_pattern(cube[idx])
        if triple is not None:
            t, rest = idx[0], idx[1:]
            seq = cube[idx]
            return _violated(item, {"t": int(t), "slice": [int(i) for i in rest], "positions": triple,
                                    "actions": ["S" if seq[i] else "C" for i in triple],
                                    "coords": [float(coords[i]) for i in triple]},
                             "actions switch more than once along the slice"), None
        fit_all &= fits
        if orientation is not None and orientation not in fits:
            return _violated(item, {"t": int(idx[0]), "slice": [int(i) for i in idx[1:]],
                                    "orientation": orientation},
                             "slice contradicts the requested orientation"), None
        if not fit_all:
            return _violated(item, {"t": int(idx[0]), "slice": [int(i) for i in idx[1:]]},
                             "slices disagree on which side stops"), None
    if orientation is None:
        orientation = CONTINUE_ABOVE if CONTINUE_ABOVE in fit_all else STOP_ABOVE
    values = np.empty((T,) + other_shape)
    for idx in np.ndindex((T,) + other_shape):
        seq = cube[idx]
        where = np.flatnonzero(seq)
        if orientation == CONTINUE_ABOVE:
            values[idx] = coords[where[-1]] if where.size else -np.inf
        else:
            values[idx] = coords[where[0]] if where.size else np.inf
    return _holds(item, orientation), ThresholdTables(dim, orientation, values)


def check_threshold_monotonicity(thresholds: ThresholdTables, mode: str, other=None,
                                 model: Optional[StoppingModel] = None) -> StructureReport:
    """Monotonicity of control limits.

    ``inTime``: nondecreasing in t under continue-above (nonincreasing under
    stop-above), only for time-homogeneous models.  ``crossDim``: the limit
    is nonincreasing in every other coordinate.  ``acrossInstances``: the
    limit of ``thresholds`` (the more risk-averse instance) is at least that
    of ``other`` under continue-above, at most under stop-above.
    """
    item = f"threshold_{mode}_dim{thresholds.dim}"
    v = thresholds.values
    sign = 1.0 if thresholds.orientation == CONTINUE_ABOVE else -1.0
    if mode == "inTime":
        if model is not None and not model.is_time_homogeneous():
            return StructureReport(item, Verdict.NOT_APPLICABLE, None, "model is not time-homogeneous")
        bad = np.argwhere(sign * v[1:] < sign * v[:-1])
        if bad.size:
            t, *rest = bad[0]
            return _violated(item, {"t": int(t), "slice": [int(i) for i in rest],
                                    "values": (float(v[(t, *rest)]), float(v[(t + 1, *rest)]))})
        return _holds(item)
    if mode == "crossDim":
        for axis in range(1, v.ndim):
            with np.errstate(invalid="ignore"):
                bad = np.diff(v, axis=axis) > 0
            if np.any(bad):
                pos = tuple(int(i) for i in np.argwhere(bad)[0])
                nxt = list(pos)
                nxt[axis] += 1
                return _violated(item, {"t": pos[0], "slice": list(pos[1:]), "other_axis": axis - 1,
                                        "values": (float(v[pos]), float(v[tuple(nxt)]))})
        return _holds(item)
    if mode == "acrossInstances":
        if other is None:
            return StructureReport(item, Verdict.NOT_APPLICABLE, None, "second table missing")
        if other.dim != thresholds.dim or other.values.shape != v.shape:
            return StructureReport(item, Verdict.NOT_APPLICABLE, None, "tables are not comparable")
        if other.orientation != thresholds.orientation and not (
                np.all(np.isinf(v)) or np.all(np.isinf(other.values))):
            return StructureReport(item, Verdict.NOT_APPLICABLE, None, "orientations differ")
        bad = np.argwhere(sign * v < sign * other.values)
        if bad.size:
            pos = tuple(int(i) for i in bad[0])
            return _violated(item, {"t": pos[0], "slice": list(pos[1:]),
                                    "values": (float(v[pos]), float(other.values[pos]))})
        return _holds(item)
    raise RiskStopError(f"unknown threshold mode {mode!r}")


# -- one-step look-ahead conditions ------------------------------------------

def _dynamic_order(model: StoppingModel, direction: str):
    """Whether every reachable next state lies above (or below) its origin."""
    pts = model.grid.points
    for t, rows in enumerate(model.kernel.supports):
        for x, (idx, _) in enumerate(rows):
            diff = pts[idx] - pts[x]
            bad = np.any(diff < 0, axis=1) if direction == "up" else np.any(diff > 0, axis=1)
            if np.any(bad):
                y = int(idx[np.flatnonzero(bad)[0]])
                return {"t": t, "state": x, "next_state": y,
                        "coords": (pts[x].tolist(), pts[y].tolist())}
    return None


def check_one_step_conditions(model: StoppingModel, result, tol: float = 0.0):
    """Sufficient conditions for the one-step look-ahead rule, and its conclusion.

    Returns reports for: the stop region of the one-step loss being closed
    under transitions; a common monotone direction of the one-step loss;
    statewise sign persistence of the one-step loss across consecutive
    epochs; next states ordered a.s. in the direction matching the loss
    (up for increasing, down for decreasing); and sign agreement between the
    one-step and continuation losses (zero counts as nonnegative).
    """
    T = model.horizon
    M, L = result.M, result.L
    reports = []

    item = "one_step_stop_region_closed"
    rep = _holds(item)
    for t in range(T - 1):
        rows = model.kernel.supports[t]
        for x in np.flatnonzero(M[t] >= 0):
            idx, _ = rows[x]
            neg = idx[M[t + 1, idx] < 0]
            if neg.size:
                y = int(neg[0])
                rep = _violated(item, {"t": t, "state": int(x), "next_state": y,
                                       "values": (float(M[t, x]), float(M[t + 1, y]))})
                break
        if rep.violated:
            break
    reports.append(rep)

    item = "one_step_loss_monotone"
    dec = check_table_monotonicity(M, model.grid, "decreasing", item=item, tol=tol)
    inc = check_table_monotonicity(M, model.grid, "increasing", item=item, tol=tol)
    if dec:
        direction = "decreasing"
        reports.append(_holds(item, "decreasing"))
    elif inc:
        direction = "increasing"
        reports.append(_holds(item, "increasing"))
    else:
        direction = None
        reports.append(_violated(item, dec.witness, "neither increasing nor decreasing"))

    item = "one_step_loss_sign_persistence"
    rep = _holds(item)
    if T > 1:
        pos = M >= 0
        bad = np.argwhere(pos[:-1] != pos[1:])
        if bad.size:
            t, x = bad[0]
            rep = _violated(item, {"t": int(t), "state": int(x),
                                   "values": (float(M[t, x]), float(M[t + 1, x]))})
    reports.append(rep)

    item = "non_improving_dynamics"
    if direction is None:
        reports.append(StructureReport(item, Verdict.NOT_APPLICABLE, None,
                                       "one-step loss has no monotone direction"))
    else:
        w = _dynamic_order(model, "up" if direction == "increasing" else "down")
        reports.append(_violated(item, w, f"next state not {'above' if direction == 'increasing' else 'below'} "
                                          "the current state") if w else
                       _holds(item, "next state above" if direction == "increasing" else "next state below"))

    item = "loss_sign_agreement"
    bad = np.argwhere((M >= 0) != (L >= 0))
    if bad.size:
        t, x = bad[0]
        reports.append(_violated(item, {"t": int(t), "state": int(x),
                                        "values": (float(M[t, x]), float(L[t, x]))}))
    else:
        reports.append(_holds(item))
    return reports
