"""State grids, transition kernels, cost tables and model constructors."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from .errors import InvalidKernelError, MonotoneDeclarationError, RiskStopError
from .risk import (PROB_TOL, RENORM_TOL, SUPPORT_EPS, FiniteDistribution, RiskSpec,
                   comonotone_pair_check)


@dataclass(frozen=True, eq=False)
class StateGrid:
    """Product grid; flat indices follow C (row-major) order over ``coords``."""

    coords: tuple

    def __post_init__(self):
        if isinstance(self.coords, np.ndarray) and self.coords.ndim == 1:
            raw = (self.coords,)
        else:
            raw = tuple(self.coords)
        if not raw:
            raise RiskStopError("grid needs at least one dimension")
        out = []
        for k, c in enumerate(raw):
            c = np.array(c, dtype=float)
            if c.ndim != 1 or c.size == 0:
                raise RiskStopError(f"grid dimension {k} is empty")
            if not np.all(np.isfinite(c)):
                raise RiskStopError(f"grid dimension {k} has non-finite coordinates")
            if np.any(np.diff(c) <= 0):
                raise RiskStopError(f"grid dimension {k} is not strictly increasing")
            c.setflags(write=False)
            out.append(c)
        object.__setattr__(self, "coords", tuple(out))

    @classmethod
    def scalar(cls, coords) -> "StateGrid":
        return cls((coords,))

    @property
    def dims(self) -> int:
        return len(self.coords)

    @property
    def shape(self) -> tuple:
        return tuple(c.size for c in self.coords)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def is_scalar(self) -> bool:
        return self.dims == 1

    @cached_property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.coords, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        pts.setflags(write=False)
        return pts

    def index(self, multi) -> int:
        return int(np.ravel_multi_index(tuple(multi), self.shape))

    def unravel(self, flat) -> tuple:
        return tuple(int(i) for i in np.unravel_index(flat, self.shape))

    def project(self, values):
        """Nearest grid coordinate per component, ties to the lower point.

        ``values`` has trailing axis ``dims``; returns per-component indices
        of the same shape and the projected coordinates.
        """
        values = np.asarray(values, dtype=float)
        idx = np.empty(values.shape, dtype=np.intp)
        for k, c in enumerate(self.coords):
            y = values[..., k]
            hi = np.clip(np.searchsorted(c, y, side="left"), 0, c.size - 1)
            lo = np.clip(hi - 1, 0, c.size - 1)
            take_hi = (c[hi] - y) < (y - c[lo])
            idx[..., k] = np.where(take_hi, hi, lo)
        proj = np.stack([self.coords[k][idx[..., k]] for k in range(self.dims)], axis=-1)
        return idx, proj

    def flat_index(self, idx) -> np.ndarray:
        """Flat indices from an array of per-component indices (trailing axis)."""
        return np.ravel_multi_index(tuple(np.moveaxis(idx, -1, 0)), self.shape)

    def __eq__(self, other):
        if not isinstance(other, StateGrid):
            return NotImplemented
        return self.dims == other.dims and all(
            np.array_equal(a, b) for a, b in zip(self.coords, other.coords))

    def __hash__(self):
        return hash(tuple(c.tobytes() for c in self.coords))


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    """Row-stochastic matrices, one per decision epoch ``t = 0..T-1``."""

    matrices: tuple

    def __post_init__(self):
        mats = []
        for t, m in enumerate(self.matrices):
            m = np.array(m, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise InvalidKernelError(f"kernel at t={t} is not square", t=t)
            if mats and m.shape != mats[0].shape:
                raise InvalidKernelError(f"kernel at t={t} has a different size", t=t)
            if not np.all(np.isfinite(m)) or np.any(m < 0):
                bad = np.argwhere(~np.isfinite(m) | (m < 0))[0]
                raise InvalidKernelError(
                    f"kernel entry ({t}, {bad[0]}, {bad[1]}) is negative or non-finite",
                    t=t, state=int(bad[0]))
            sums = m.sum(axis=1)
            off = np.abs(sums - 1.0)
            if np.any(off > RENORM_TOL):
                x = int(np.argmax(off))
                raise InvalidKernelError(
                    f"row {x} of the kernel at t={t} sums to {sums[x]!r}",
                    t=t, state=x, row_sum=float(sums[x]))
            fix = off > PROB_TOL
            if np.any(fix):
                m[fix] = m[fix] / sums[fix, None]
            m.setflags(write=False)
            mats.append(m)
        if not mats:
            raise InvalidKernelError("kernel needs at least one epoch")
        object.__setattr__(self, "matrices", tuple(mats))

    @property
    def horizon(self) -> int:
        return len(self.matrices)

    @property
    def n_states(self) -> int:
        return self.matrices[0].shape[0]

    def row(self, t: int, x: int) -> FiniteDistribution:
        return FiniteDistribution(self.matrices[t][x])

    @cached_property
    def supports(self) -> tuple:
        """Per epoch, per state: (next-state indices, weights) with positive weight."""
        out = []
        for m in self.matrices:
            rows = []
            for x in range(m.shape[0]):
                idx = np.flatnonzero(m[x] > SUPPORT_EPS)
                rows.append((idx, m[x, idx]))
            out.append(tuple(rows))
        return tuple(out)

    def __eq__(self, other):
        if not isinstance(other, TransitionKernel):
            return NotImplemented
        return self.horizon == other.horizon and all(
            np.array_equal(a, b) for a, b in zip(self.matrices, other.matrices))

    def __hash__(self):
        return hash(tuple(m.tobytes() for m in self.matrices))


def build_tabular_kernel(rows_per_t) -> TransitionKernel:
    """Validate explicit transition tables (one ``n x n`` table per epoch)."""
    return TransitionKernel(tuple(np.asarray(r, dtype=float) for r in rows_per_t))


# -- shared-shock dynamics ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class ShockMap:
    """Next-state map ``f_t(x, w)``.

    ``fn(t, points, w)`` maps an ``(N, dims)`` array of states and a scalar
    shock to the ``(N, dims)`` next states.  ``directions`` declares, per
    component, whether the map is increasing (+1), decreasing (-1) or
    constant (0) in the shock.  Builtin maps carry a name and parameters so
    they can be written to model files.
    """

    name: str
    params: dict
    fn: Callable
    directions: tuple

    def __call__(self, t, points, w):
        return self.fn(t, points, w)

    @property
    def serializable(self) -> bool:
        return self.name in SHOCK_MAPS


def identity_map(dims: int = 1) -> ShockMap:
    return ShockMap("identity", {"dims": dims}, lambda t, x, w: np.array(x, dtype=float),
                    (0,) * dims)


def arf_map(offset: int = 0) -> ShockMap:
    """Running average and spot: ``((k x1 + w x2)/(k+1), w x2)`` with ``k = t + offset``."""
    offset = int(offset)

    def fn(t, x, w):
        k = t + offset
        spot = w * x[:, 1]
        return np.stack([(k * x[:, 0] + spot) / (k + 1), spot], axis=1)
    return ShockMap("arf", {"offset": offset} if offset else {}, fn, (1, 1))


def affine_map(lam: float) -> ShockMap:
    """Scalar price dynamics ``lam * x + w``."""
    lam = float(lam)
    return ShockMap("affine", {"lam": lam}, lambda t, x, w: lam * x + w, (1,))


def max_map() -> ShockMap:
    """Best offer so far: ``max(x, w)``."""
    return ShockMap("max", {}, lambda t, x, w: np.maximum(x, w), (1,))


def linear_map(A, b) -> ShockMap:
    """``A x + b w`` with a fixed matrix ``A`` and loading vector ``b``."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    directions = tuple(int(np.sign(v)) for v in b)
    return ShockMap("linear", {"A": A.tolist(), "b": b.tolist()},
                    lambda t, x, w: x @ A.T + w * b, directions)


SHOCK_MAPS = {
    "identity": lambda p: identity_map(int(p.get("dims", 1))),
    "arf": lambda p: arf_map(int(p.get("offset", 0))),
    "affine": lambda p: affine_map(p["lam"]),
    "max": lambda p: max_map(),
    "linear": lambda p: linear_map(p["A"], p["b"]),
}


def shock_map_from_spec(name: str, params: dict) -> ShockMap:
    try:
        return SHOCK_MAPS[name](params)
    except KeyError:
        raise RiskStopError(f"unknown shock map {name!r}") from None


@dataclass(frozen=True, eq=False)
class SharedShockDynamics:
    """Every state component driven by one scalar shock ``W_t`` (i.i.d. over t)."""

    atoms: np.ndarray
    shock: FiniteDistribution
    map: ShockMap

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=float)
        if atoms.ndim != 1 or atoms.size != len(self.shock):
            raise RiskStopError("shock atoms and probabilities are misaligned")
        atoms.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)

    def __eq__(self, other):
        if not isinstance(other, SharedShockDynamics):
            return NotImplemented
        return (np.array_equal(self.atoms, other.atoms) and self.shock == other.shock
                and self.map.name == other.map.name and self.map.params == other.map.params)


@dataclass(frozen=True)
class ComonotonicityCertificate:
    """Pairwise comonotonicity of the projected next-state components.

    ``witness`` locates a failure as ``(t, state, (i, j), (atom, atom'))``.
    ``max_displacement`` is the largest distance moved by grid projection.
    """

    holds: bool
    witness: Optional[tuple]
    max_displacement: float


def build_shared_shock_kernel(grid: StateGrid, dynamics: SharedShockDynamics, horizon: int,
                              projection: str = "nearest", tol: float = 1e-12):
    """Push the shock law through ``f_t`` and project onto ``grid``.

    Returns the kernel and a certificate computed on the projected model.
    """
    if projection not in ("nearest", "NearestNeighbor"):
        raise RiskStopError(f"unsupported projection {projection!r}")
    pts = grid.points
    atoms = dynamics.atoms
    probs = dynamics.shock.weights
    live = np.flatnonzero(probs > SUPPORT_EPS)
    by_value = live[np.argsort(atoms[live], kind="stable")]
    directions = dynamics.map.directions
    if len(directions) != grid.dims:
        raise RiskStopError("shock map directions do not match the grid dimension")

    mats = []
    holds, witness, max_disp = True, None, 0.0
    for t in range(horizon):
        raw = np.stack([np.asarray(dynamics.map(t, pts, atoms[k]), dtype=float) for k in by_value])
        if raw.shape != (len(by_value), grid.size, grid.dims):
            raise RiskStopError(f"shock map returned shape {raw.shape} at t={t}")
        step = np.diff(raw, axis=0)
        for i, d in enumerate(directions):
            s = step[:, :, i]
            bad = s < -tol if d > 0 else (s > tol if d < 0 else np.abs(s) > tol)
            if np.any(bad):
                k, x = np.argwhere(bad)[0]
                pair = (int(by_value[k]), int(by_value[k + 1]))
                raise MonotoneDeclarationError(
                    f"component {i} of the shock map at t={t}, state {int(x)} breaks its "
                    f"declared direction between shock atoms {pair}",
                    witness={"t": t, "state": int(x), "component": i, "atoms": pair})
        idx, proj = grid.project(raw)
        max_disp = max(max_disp, float(np.abs(proj - raw).max()))
        flat = grid.flat_index(idx)  # (K, N)
        m = np.zeros((grid.size, grid.size))
        cols = np.arange(grid.size)
        for r, k in enumerate(by_value):
            np.add.at(m, (cols, flat[r]), probs[k])
        mats.append(m)
        if holds and grid.dims > 1:
            for i in range(grid.dims):
                for j in range(i + 1, grid.dims):
                    di = proj[:, None, :, i] - proj[None, :, :, i]
                    dj = proj[:, None, :, j] - proj[None, :, :, j]
                    bad = np.argwhere(di * dj < 0)
                    if bad.size:
                        a, b, x = bad[0]
                        holds = False
                        witness = (t, int(x), (i, j), (int(by_value[a]), int(by_value[b])))
                        break
                if not holds:
                    break
    kernel = TransitionKernel(tuple(mats))
    return kernel, ComonotonicityCertificate(holds, witness, max_disp)


# -- costs and the model -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class CostModel:
    """``stop[t]`` for t = 0..T and ``cont[t]`` for t = 0..T-1, flat over the grid."""

    stop: np.ndarray
    cont: np.ndarray

    def __post_init__(self):
        stop = np.array(self.stop, dtype=float)
        cont = np.array(self.cont, dtype=float)
        if stop.ndim != 2 or cont.ndim != 2:
            raise RiskStopError("cost tables must be 2-D (time x state)")
        if stop.shape[0] != cont.shape[0] + 1 or stop.shape[1] != cont.shape[1]:
            raise RiskStopError(
                f"stop costs {stop.shape} and continuation costs {cont.shape} disagree")
        if not (np.all(np.isfinite(stop)) and np.all(np.isfinite(cont))):
            raise RiskStopError("cost tables must be finite")
        stop.setflags(write=False)
        cont.setflags(write=False)
        object.__setattr__(self, "stop", stop)
        object.__setattr__(self, "cont", cont)

    def __eq__(self, other):
        if not isinstance(other, CostModel):
            return NotImplemented
        return np.array_equal(self.stop, other.stop) and np.array_equal(self.cont, other.cont)


@dataclass(frozen=True, eq=False)
class StoppingModel:
    horizon: int
    grid: StateGrid
    kernel: TransitionKernel
    costs: CostModel
    risk: tuple
    dynamics: Optional[SharedShockDynamics] = None
    certificate: Optional[ComonotonicityCertificate] = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        T = int(self.horizon)
        if T < 1:
            raise RiskStopError("horizon must be >= 1")
        object.__setattr__(self, "horizon", T)
        if isinstance(self.risk, RiskSpec):
            object.__setattr__(self, "risk", (self.risk,) * T)
        else:
            object.__setattr__(self, "risk", tuple(self.risk))
        if len(self.risk) == 1 and T > 1:
            object.__setattr__(self, "risk", self.risk * T)
        if len(self.risk) != T or not all(isinstance(r, RiskSpec) for r in self.risk):
            raise RiskStopError(f"need {T} risk specs, got {len(self.risk)}")
        if self.kernel.horizon != T:
            raise RiskStopError(f"kernel covers {self.kernel.horizon} epochs, horizon is {T}")
        n = self.grid.size
        if self.kernel.n_states != n:
            raise RiskStopError(f"kernel has {self.kernel.n_states} states, grid has {n}")
        if self.costs.stop.shape != (T + 1, n):
            raise RiskStopError(f"stop costs have shape {self.costs.stop.shape}, need {(T + 1, n)}")

    @property
    def n_states(self) -> int:
        return self.grid.size

    def with_risk(self, risk) -> "StoppingModel":
        return StoppingModel(self.horizon, self.grid, self.kernel, self.costs, risk,
                             self.dynamics, self.certificate, self.name, dict(self.meta))

    def is_time_homogeneous(self) -> bool:
        k = self.kernel.matrices
        s, c = self.costs.stop, self.costs.cont
        return (all(np.array_equal(k[0], m) for m in k)
                and all(np.array_equal(s[0], row) for row in s)
                and all(np.array_equal(c[0], row) for row in c)
                and all(r == self.risk[0] for r in self.risk))

    def __eq__(self, other):
        if not isinstance(other, StoppingModel):
            return NotImplemented
        return (self.horizon == other.horizon and self.grid == other.grid
                and self.kernel == other.kernel and self.costs == other.costs
                and self.risk == other.risk and self.dynamics == other.dynamics)


def _per_time(value, length, name):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (length,)) if np.ndim(value) == 0 \
        else np.asarray(value, dtype=float)
    if arr.shape != (length,):
        raise RiskStopError(f"{name} needs {length} entries, got {arr.shape}")
    return arr


def shared_shock_model(grid: StateGrid, dynamics: SharedShockDynamics, horizon: int,
                       stop, cont, risk, name="", meta=None) -> StoppingModel:
    kernel, cert = build_shared_shock_kernel(grid, dynamics, horizon)
    return StoppingModel(horizon, grid, kernel, CostModel(stop, cont), risk, dynamics, cert,
                         name, meta or {})


def lognormal_quantile_atoms(mu: float, sigma: float, n: int) -> np.ndarray:
    """Lognormal quantiles at levels ``(i - 1/2)/n``, i = 1..n (equiprobable atoms)."""
    if not np.isfinite(mu) or not sigma > 0 or n < 1:
        raise RiskStopError("lognormal needs finite mu, sigma > 0 and at least one atom")
    levels = (np.arange(1, n + 1) - 0.5) / n
    return stats.lognorm(s=sigma, scale=np.exp(mu)).ppf(levels)


def make_arf_model(a, b, c, mu: float, sigma: float, shock_atoms: int, grid_sizes, horizon: int,
                   risk=None, x1_range=(0.5, 1.5), x2_range=(0.5, 1.5),
                   offset: int = 0) -> StoppingModel:
    """Average-rate forward with early termination.

    State ``(running average, spot)``; stopping at ``t`` pays
    ``a_t x1 + b_t x2 + c_t`` so the stop cost is its negative.  ``a``, ``b``
    and ``c`` are scalars or per-time vectors over ``t = 0..T``.
    """
    T = int(horizon)
    a = _per_time(a, T + 1, "a")
    b = _per_time(b, T + 1, "b")
    c = _per_time(c, T + 1, "c")
    if np.any(a <= 0) or np.any(b <= 0):
        raise RiskStopError("ARF coefficients a_t and b_t must be positive")
    if x2_range[0] <= 0:
        raise RiskStopError("spot grid must be positive")
    atoms = lognormal_quantile_atoms(mu, sigma, shock_atoms)
    n1, n2 = grid_sizes
    grid = StateGrid((np.linspace(*x1_range, n1), np.linspace(*x2_range, n2)))
    dyn = SharedShockDynamics(atoms, FiniteDistribution.uniform(shock_atoms), arf_map(offset))
    pts = grid.points
    stop = np.stack([-(a[t] * pts[:, 0] + b[t] * pts[:, 1] + c[t]) for t in range(T + 1)])
    cont = np.zeros((T, grid.size))
    return shared_shock_model(grid, dyn, T, stop, cont, risk or RiskSpec.expectation(), "arf",
                              {"a": a.tolist(), "b": b.tolist(), "c": c.tolist(),
                               "mu": mu, "sigma": sigma, "offset": offset})


def make_deadline_sale_model(lam: float, shock_values, shock_probs, grid, horizon: int,
                             risk=None) -> StoppingModel:
    """Selling before a deadline: price ``x -> lam x + W``, stop cost ``-x``."""
    if not lam > 1:
        raise RiskStopError(f"deadline sale needs lam > 1, got {lam!r}")
    grid = grid if isinstance(grid, StateGrid) else StateGrid.scalar(grid)
    if not grid.is_scalar:
        raise RiskStopError("deadline sale is a scalar model")
    T = int(horizon)
    dyn = SharedShockDynamics(shock_values, _dist(shock_probs), affine_map(lam))
    x = grid.points[:, 0]
    stop = np.tile(-x, (T + 1, 1))
    cont = np.zeros((T, grid.size))
    return shared_shock_model(grid, dyn, T, stop, cont, risk or RiskSpec.expectation(),
                              "deadline-sale", {"lam": float(lam)})


def make_asset_sale_model(r: float, offer_values, offer_probs, grid, horizon: int,
                          risk=None) -> StoppingModel:
    """Asset selling with past offers retained: ``x -> max(x, W)``.

    Stopping at ``t`` invests the best offer until ``T``: cost ``-x (1+r)^(T-t)``.
    """
    if r < 0:
        raise RiskStopError("interest rate must be nonnegative")
    offers = np.asarray(offer_values, dtype=float)
    if np.any(offers < 0) or not np.all(np.isfinite(offers)):
        raise RiskStopError("offers must be finite and nonnegative")
    grid = grid if isinstance(grid, StateGrid) else StateGrid.scalar(grid)
    if not grid.is_scalar:
        raise RiskStopError("asset sale is a scalar model")
    T = int(horizon)
    dyn = SharedShockDynamics(offers, _dist(offer_probs), max_map())
    x = grid.points[:, 0]
    stop = np.stack([-x * (1 + r) ** (T - t) for t in range(T + 1)])
    cont = np.zeros((T, grid.size))
    return shared_shock_model(grid, dyn, T, stop, cont, risk or RiskSpec.expectation(),
                              "asset-sale", {"r": float(r)})


def _dist(p) -> FiniteDistribution:
    return p if isinstance(p, FiniteDistribution) else FiniteDistribution(np.asarray(p, float))


# -- random instances --------------------------------------------------------

def random_decreasing_table(rng: np.random.Generator, shape, scale: float = 1.0) -> np.ndarray:
    """Strictly decreasing table on a product grid: negated cumulative sums of
    positive increments along every axis."""
    inc = rng.exponential(scale, size=shape) + 1e-3 * scale
    for axis in range(len(shape)):
        inc = np.cumsum(inc, axis=axis)
    return -inc


def _monotone_index_table(rng, shape, n_target):
    """Integer table in ``[0, n_target)`` nondecreasing along every axis."""
    tab = rng.integers(0, n_target, size=shape)
    for axis in range(len(shape)):
        tab = np.maximum.accumulate(tab, axis=axis)
    return tab


def _monotone_coupling_kernel(rng, shape, n_atoms):
    """Rows ``sum_u p_u delta_{f(x, u)}`` with ``f(., u)`` componentwise increasing."""
    size = int(np.prod(shape))
    p = rng.dirichlet(np.ones(n_atoms))
    m = np.zeros((size, size))
    for u in range(n_atoms):
        comps = [_monotone_index_table(rng, shape, shape[k]).ravel() for k in range(len(shape))]
        target = np.ravel_multi_index(tuple(comps), shape)
        np.add.at(m, (np.arange(size), target), p[u])
    return m


def _random_risk(risk):
    return risk if risk is not None else RiskSpec.expectation()


def _unit_grid(sizes) -> StateGrid:
    return StateGrid(tuple(np.arange(n, dtype=float) for n in sizes))


def random_monotone_model(seed: int, sizes, horizon: int, kind: str = "joint",
                          risk=None, cost_scale: float = 1.0) -> StoppingModel:
    """Random model satisfying a monotonicity assumption set.

    ``joint``: kernels stochastically increasing under the componentwise
    order (built by monotone coupling) and decreasing stop/continuation
    costs.  ``partial``: a two-factor grid where the second factor's law
    depends only on the second coordinate and, given the next second
    coordinate, the first factor is stochastically increasing in the first
    coordinate; costs decrease in the first coordinate only.
    """
    rng = np.random.default_rng(seed)
    sizes = tuple(int(s) for s in (sizes if np.ndim(sizes) else (sizes,)))
    if any(s < 2 for s in sizes):
        raise RiskStopError("grid sizes must be >= 2")
    T = int(horizon)
    grid = _unit_grid(sizes)
    n = grid.size
    if kind == "joint":
        mats = [_monotone_coupling_kernel(rng, sizes, int(rng.integers(2, n + 2)))
                for _ in range(T)]
        stop = np.stack([random_decreasing_table(rng, sizes, 3 * cost_scale).ravel()
                         + rng.normal(0, 2 * cost_scale) for _ in range(T + 1)])
        cont = np.stack([random_decreasing_table(rng, sizes, 0.5 * cost_scale).ravel()
                         + rng.normal(0, 2 * cost_scale) for _ in range(T)])
    elif kind == "partial":
        if len(sizes) != 2:
            raise RiskStopError("partial monotone models use a two-factor grid")
        n1, n2 = sizes
        mats = []
        for _ in range(T):
            m = np.zeros((n1, n2, n1, n2))
            for x2 in range(n2):
                q2 = rng.dirichlet(np.ones(n2))
                for y2 in range(n2):
                    k1 = _monotone_coupling_kernel(rng, (n1,), int(rng.integers(2, n1 + 2)))
                    m[:, x2, :, y2] = q2[y2] * k1
            mats.append(m.reshape(n, n))
        stop = np.stack([_decreasing_in_first(rng, n1, n2, 3 * cost_scale) for _ in range(T + 1)])
        cont = np.stack([_decreasing_in_first(rng, n1, n2, 0.5 * cost_scale) for _ in range(T)])
    else:
        raise RiskStopError(f"unknown monotone model kind {kind!r}")
    return StoppingModel(T, grid, TransitionKernel(tuple(mats)), CostModel(stop, cont),
                         _random_risk(risk), name=f"random-{kind}", meta={"seed": seed})


def _decreasing_in_first(rng, n1, n2, scale):
    inc = np.cumsum(rng.exponential(scale, size=(n1, n2)) + 1e-3 * scale, axis=0)
    return (-inc + rng.normal(0, 2 * scale, size=(1, n2))).ravel()


def random_tabular_model(seed: int, n_states: int, horizon: int, risk=None) -> StoppingModel:
    """Unstructured random model (dense Dirichlet rows, Gaussian costs)."""
    rng = np.random.default_rng(seed)
    T = int(horizon)
    grid = _unit_grid((n_states,))
    mats = []
    for _ in range(T):
        m = rng.dirichlet(np.ones(n_states), size=n_states)
        m[rng.random((n_states, n_states)) < 0.25] = 0.0
        m[np.arange(n_states), rng.integers(0, n_states, n_states)] += 0.05
        mats.append(m / m.sum(axis=1, keepdims=True))
    stop = rng.normal(0.0, 2.0, (T + 1, n_states))
    cont = rng.normal(0.3, 1.0, (T, n_states))
    return StoppingModel(T, grid, TransitionKernel(tuple(mats)), CostModel(stop, cont),
                         _random_risk(risk), name="random-tabular", meta={"seed": seed})


def random_comonotone_model(seed: int, sizes, horizon: int, risk=None,
                            shock_atoms: Optional[int] = None) -> StoppingModel:
    """Shared-shock model with decreasing stop costs and one-step losses.

    Dynamics are ``proj(A x + b w)`` with nonnegative ``A`` and positive
    ``b``, so each next state is increasing in both the state and the shock;
    projected components stay comonotone and kernels stochastically
    increasing.  Continuation costs are ``s_t + g_t`` with ``g_t`` decreasing,
    which makes ``c_t - s_t`` and therefore the one-step loss decreasing for
    any monotone risk mapping.  A constant offset in ``g_t`` puts the median
    one-step loss under expectation near zero.
    """
    rng = np.random.default_rng(seed)
    sizes = tuple(int(s) for s in (sizes if np.ndim(sizes) else (sizes,)))
    T = int(horizon)
    d = len(sizes)
    grid = _unit_grid(sizes)
    A = rng.uniform(0.0, 0.4, (d, d)) + np.diag(rng.uniform(0.6, 1.0, d))
    b = rng.uniform(0.5, 2.0, d)
    k = shock_atoms or int(rng.integers(2, 6))
    atoms = np.sort(rng.normal(0.0, 1.5, k))
    dyn = SharedShockDynamics(atoms, FiniteDistribution(rng.dirichlet(np.ones(k))), linear_map(A, b))
    kernel, cert = build_shared_shock_kernel(grid, dyn, T)
    stop = np.stack([random_decreasing_table(rng, sizes, 2.0).ravel() for _ in range(T + 1)])
    gaps = []
    for t in range(T):
        g = random_decreasing_table(rng, sizes, 0.6).ravel()
        # centre the one-step loss near zero so both actions occur
        ahead = kernel.matrices[t] @ stop[t + 1]
        gaps.append(g - np.median(g + ahead) + rng.normal(0, 0.5))
    cont = stop[:T] + np.stack(gaps)
    return StoppingModel(T, grid, kernel, CostModel(stop, cont), _random_risk(risk), dyn, cert,
                         "random-comonotone", {"seed": seed})
