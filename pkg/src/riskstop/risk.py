"""Finite distributions, stochastic orders and one-step coherent risk measures.

Costs are minimized throughout, so every tail-based measure looks at the
UPPER tail of the cost distribution.  The one place where a lower tail
appears is :func:`cvar_minimal_element`, which truncates a distribution over
*states*; value functions there are decreasing in the state, so the lower
state tail is the upper cost tail.

The scalar routines work on plain Python numbers, so passing
:class:`fractions.Fraction` weights, values and tail levels gives exact
rational results.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import InvalidDistributionError, InvalidSpecError, UnsupportedOrderError

PROB_TOL = 1e-12
RENORM_TOL = 1e-9
SUPPORT_EPS = 1e-15
FOSD_TOL = 1e-12
# exact upper-set enumeration is exponential in the antichain width
POSET_EXACT_LIMIT = 20


@dataclass(frozen=True, eq=False)
class FiniteDistribution:
    """Probability weights over outcome indices ``0..n-1``."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise InvalidDistributionError("weights must be a non-empty vector")
        if not np.all(np.isfinite(w)):
            raise InvalidDistributionError("weights must be finite")
        if np.any(w < 0):
            i = int(np.argmin(w))
            raise InvalidDistributionError(f"negative weight {w[i]!r} at index {i}")
        total = float(w.sum())
        if total <= 0:
            raise InvalidDistributionError("at least one weight must be positive")
        if abs(total - 1.0) > RENORM_TOL:
            raise InvalidDistributionError(f"weights sum to {total!r}, not 1")
        if abs(total - 1.0) > PROB_TOL:
            w = w / total
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def point_mass(cls, n: int, i: int) -> "FiniteDistribution":
        w = np.zeros(n)
        w[i] = 1.0
        return cls(w)

    @classmethod
    def uniform(cls, n: int) -> "FiniteDistribution":
        return cls(np.full(n, 1.0 / n))

    def __len__(self):
        return self.weights.size

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > SUPPORT_EPS)

    def __eq__(self, other):
        if not isinstance(other, FiniteDistribution):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash(self.weights.tobytes())

    def __repr__(self):
        return f"FiniteDistribution({self.weights.tolist()!r})"


class RiskKind(str, enum.Enum):
    EXPECTATION = "expectation"
    CVAR = "cvar"
    MEAN_CVAR = "mean-cvar"
    MEAN_SEMIDEVIATION = "mean-semideviation"


_KIND_ALIASES = {
    "e": RiskKind.EXPECTATION,
    "mean": RiskKind.EXPECTATION,
    "expectation": RiskKind.EXPECTATION,
    "cvar": RiskKind.CVAR,
    "mean-cvar": RiskKind.MEAN_CVAR,
    "meancvar": RiskKind.MEAN_CVAR,
    "mean-semideviation": RiskKind.MEAN_SEMIDEVIATION,
    "mean-semidev": RiskKind.MEAN_SEMIDEVIATION,
    "semidev": RiskKind.MEAN_SEMIDEVIATION,
    "msd": RiskKind.MEAN_SEMIDEVIATION,
}

_REQUIRED = {
    RiskKind.EXPECTATION: (),
    RiskKind.CVAR: ("alpha",),
    RiskKind.MEAN_CVAR: ("kappa", "gamma"),
    RiskKind.MEAN_SEMIDEVIATION: ("kappa",),
}


@dataclass(frozen=True)
class RiskSpec:
    """A one-step conditional risk mapping.

    * ``Expectation``: ``E Z``
    * ``CVaR``: mean of the worst ``alpha``-tail of ``Z``
    * ``MeanCVaR``: ``(1 - kappa) E Z + kappa CVaR_gamma(Z)``
    * ``MeanSemideviation``: ``E Z + kappa E (Z - E Z)_+`` (first order)
    """

    kind: RiskKind
    alpha: Optional[float] = None
    kappa: Optional[float] = None
    gamma: Optional[float] = None

    def __post_init__(self):
        try:
            kind = RiskKind(self.kind)
        except ValueError:
            raise InvalidSpecError(f"unknown risk kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        required = _REQUIRED[kind]
        for name in ("alpha", "kappa", "gamma"):
            value = getattr(self, name)
            if name in required and value is None:
                raise InvalidSpecError(f"{kind.value} requires {name}")
            if name not in required and value is not None:
                raise InvalidSpecError(f"{kind.value} takes no {name}")
        for name in ("alpha", "gamma"):
            value = getattr(self, name)
            if value is not None and not 0 < value <= 1:
                raise InvalidSpecError(f"{name} must lie in (0, 1], got {value!r}")
        if self.kappa is not None and not 0 <= self.kappa <= 1:
            raise InvalidSpecError(f"kappa must lie in [0, 1], got {self.kappa!r}")

    @classmethod
    def expectation(cls) -> "RiskSpec":
        return cls(RiskKind.EXPECTATION)

    @classmethod
    def cvar(cls, alpha) -> "RiskSpec":
        return cls(RiskKind.CVAR, alpha=alpha)

    @classmethod
    def mean_cvar(cls, kappa, gamma) -> "RiskSpec":
        return cls(RiskKind.MEAN_CVAR, kappa=kappa, gamma=gamma)

    @classmethod
    def mean_semideviation(cls, kappa) -> "RiskSpec":
        return cls(RiskKind.MEAN_SEMIDEVIATION, kappa=kappa)

    @classmethod
    def parse(cls, text: str) -> "RiskSpec":
        """Parse ``kind[:p1[,p2]]``, e.g. ``cvar:0.5`` or ``mean-cvar:0.8,0.2``.

        Mean-CVaR parameters are ``kappa,gamma``.
        """
        name, _, params = text.strip().partition(":")
        kind = _KIND_ALIASES.get(name.strip().lower())
        if kind is None:
            raise InvalidSpecError(f"unknown risk kind {name!r}")
        try:
            values = [float(p) for p in params.split(",")] if params.strip() else []
        except ValueError:
            raise InvalidSpecError(f"bad risk parameters {params!r}") from None
        required = _REQUIRED[kind]
        if len(values) != len(required):
            raise InvalidSpecError(
                f"{kind.value} expects {len(required)} parameter(s) {required}, got {len(values)}")
        return cls(kind, **dict(zip(required, values)))

    def __str__(self):
        params = [getattr(self, name) for name in _REQUIRED[self.kind]]
        if not params:
            return self.kind.value
        return self.kind.value + ":" + ",".join(repr(float(p)) for p in params)

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        for name in _REQUIRED[self.kind]:
            d[name] = float(getattr(self, name))
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RiskSpec":
        return cls(d["kind"], **{k: v for k, v in d.items() if k != "kind"})

    @property
    def is_comonotone(self) -> bool:
        """Additive on comonotone pairs (spectral measures are; semideviation is not)."""
        return self.kind is not RiskKind.MEAN_SEMIDEVIATION


class OrderKind(str, enum.Enum):
    TOTAL = "total"
    COMPONENTWISE = "componentwise"


@dataclass(frozen=True)
class OrderSpec:
    kind: OrderKind
    dims: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", OrderKind(self.kind))
        if self.dims < 1:
            raise InvalidSpecError("order dimension must be >= 1")
        if self.kind is OrderKind.TOTAL and self.dims != 1:
            raise InvalidSpecError("a total scalar order has dimension 1")

    @classmethod
    def total(cls) -> "OrderSpec":
        return cls(OrderKind.TOTAL, 1)

    @classmethod
    def componentwise(cls, dims: int) -> "OrderSpec":
        return cls(OrderKind.COMPONENTWISE, dims)


# -- scalar plumbing ---------------------------------------------------------

def _as_list(x) -> list:
    if isinstance(x, np.ndarray):
        return x.tolist()
    return list(x)


def _weights(dist) -> list:
    if isinstance(dist, FiniteDistribution):
        return dist.weights.tolist()
    w = _as_list(dist)
    if not w:
        raise InvalidDistributionError("weights must be non-empty")
    if any(x < 0 for x in w):
        raise InvalidDistributionError("negative weight")
    total = sum(w)
    if total <= 0 or abs(total - 1) > RENORM_TOL:
        raise InvalidDistributionError(f"weights sum to {total!r}, not 1")
    return w


def _pairs(dist, sample):
    w = _weights(dist)
    v = _as_list(sample)
    if len(v) != len(w):
        raise InvalidDistributionError(
            f"sample has {len(v)} values but the distribution has {len(w)} outcomes")
    return w, v


def _check_level(alpha, name="alpha"):
    if not 0 < alpha <= 1:
        raise InvalidSpecError(f"{name} must lie in (0, 1], got {alpha!r}")


def _upper_order(w, v):
    """Positive-weight indices by decreasing value, ties by ascending index."""
    idx = [i for i in range(len(w)) if w[i] > 0]
    idx.sort(key=lambda i: (-v[i], i))
    return idx


def _mean(w, v):
    # anchoring at a support value makes constants come out exactly
    ref = v[next(i for i in range(len(w)) if w[i] > 0)]
    return ref + sum(wi * (vi - ref) for wi, vi in zip(w, v) if wi > 0)


def _cvar(w, v, alpha):
    order = _upper_order(w, v)
    top = v[order[0]]
    remaining = alpha
    shortfall = 0
    for i in order:
        if remaining <= 0:
            break
        take = min(w[i], remaining)
        shortfall += take * (top - v[i])
        remaining -= take
    return top - shortfall / alpha


def _evaluate(spec: RiskSpec, w, v):
    kind = spec.kind
    if kind is RiskKind.EXPECTATION:
        return _mean(w, v)
    if kind is RiskKind.CVAR:
        return _cvar(w, v, spec.alpha)
    if kind is RiskKind.MEAN_CVAR:
        k = spec.kappa
        return (1 - k) * _mean(w, v) + k * _cvar(w, v, spec.gamma)
    m = _mean(w, v)
    dev = sum(wi * (vi - m) for wi, vi in zip(w, v) if wi > 0 and vi > m)
    return m + spec.kappa * dev


# -- public operations -------------------------------------------------------

def evaluate_risk(spec: RiskSpec, dist, sample):
    """Risk of the cost ``Z`` taking ``sample[i]`` with probability ``dist[i]``.

    The result depends only on the value/probability pairs, so jointly
    permuting ``dist`` and ``sample`` leaves it unchanged.
    """
    if not isinstance(spec, RiskSpec):
        raise InvalidSpecError(f"expected a RiskSpec, got {type(spec).__name__}")
    w, v = _pairs(dist, sample)
    return _evaluate(spec, w, v)


def cvar(dist, sample, alpha):
    """Mean of the highest-cost ``alpha`` tail.

    The boundary atom contributes fractionally so the tail carries exactly
    mass ``alpha``; this equals ``min_U U + E(Z - U)_+ / alpha``.
    """
    _check_level(alpha)
    w, v = _pairs(dist, sample)
    return _cvar(w, v, alpha)


def cvar_oracle(dist, sample, alpha):
    """CVaR by direct minimization of ``U + E(Z - U)_+ / alpha`` over support values.

    The objective is convex and piecewise linear with kinks at the support
    atoms, so its infimum over the reals is attained at one of them.
    """
    _check_level(alpha)
    w, v = _pairs(dist, sample)
    best = None
    for u in {v[i] for i in range(len(w)) if w[i] > 0}:
        obj = u + sum(wi * (vi - u) for wi, vi in zip(w, v) if wi > 0 and vi > u) / alpha
        if best is None or obj < best:
            best = obj
    return best


def envelope_maximize(dist, sample, alpha) -> FiniteDistribution:
    """Worst-case measure of the CVaR envelope ``{P << Q : dP/dQ <= 1/alpha}``.

    Density ``1/alpha`` is assigned greedily to outcomes in decreasing order
    of value (equal values in ascending index order) and the boundary outcome
    gets the fractional remainder.  For a constant sample every feasible
    measure is optimal and ``dist`` itself is returned.
    """
    _check_level(alpha)
    w, v = _pairs(dist, sample)
    base = dist if isinstance(dist, FiniteDistribution) else FiniteDistribution(w)
    order = _upper_order(w, v)
    if alpha == 1 or len({v[i] for i in order}) == 1:
        return base
    p = [0.0] * len(w)
    remaining = alpha
    for i in order:
        if remaining <= 0:
            break
        take = min(w[i], remaining)
        p[i] = take / alpha
        remaining -= take
    return FiniteDistribution(np.array(p, dtype=float))


def cvar_minimal_element(dist, state_values, alpha) -> FiniteDistribution:
    """FOSD-minimal element of the CVaR envelope over totally ordered states.

    ``dist`` is truncated to its lower ``alpha``-quantile tail in state order
    (boundary atom included fractionally) and rescaled by ``1/alpha``.  Its
    expectation of any decreasing function of the state equals the CVaR of
    that function under ``dist``.
    """
    _check_level(alpha)
    s = np.asarray(state_values, dtype=float)
    if s.ndim == 2 and s.shape[1] == 1:
        s = s[:, 0]
    if s.ndim != 1:
        raise UnsupportedOrderError(
            "the minimal CVaR element is only constructed for totally ordered states")
    w = _weights(dist)
    if len(w) != s.size:
        raise InvalidDistributionError("state values and distribution are misaligned")
    base = dist if isinstance(dist, FiniteDistribution) else FiniteDistribution(w)
    if alpha == 1:
        return base
    order = [i for i in range(len(w)) if w[i] > 0]
    order.sort(key=lambda i: (s[i], i))
    p = [0.0] * len(w)
    remaining = alpha
    for i in order:
        if remaining <= 0:
            break
        take = min(w[i], remaining)
        p[i] = take / alpha
        remaining -= take
    return FiniteDistribution(np.array(p, dtype=float))


class Dominance(str, enum.Enum):
    A_DOMINATES_B = "a_dominates_b"
    B_DOMINATES_A = "b_dominates_a"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


class FosdResult(NamedTuple):
    relation: Dominance
    approximate: bool = False


def _relation(a_ge: bool, b_ge: bool) -> Dominance:
    if a_ge and b_ge:
        return Dominance.EQUAL
    if a_ge:
        return Dominance.A_DOMINATES_B
    if b_ge:
        return Dominance.B_DOMINATES_A
    return Dominance.INCOMPARABLE


def _scalar_fosd(wa, wb, coords, tol):
    order = np.argsort(coords, kind="stable")
    c = coords[order]
    Fa = np.cumsum(wa[order])
    Fb = np.cumsum(wb[order])
    # evaluate the CDFs only after the last of each group of tied coordinates
    last = np.append(c[1:] != c[:-1], True)
    Fa, Fb = Fa[last], Fb[last]
    return bool(np.all(Fa <= Fb + tol)), bool(np.all(Fb <= Fa + tol))


def _upper_set_extremes(diff, points):
    """Min and max of ``sum(diff[U])`` over all upper sets ``U`` of the poset."""
    n = len(diff)
    order = sorted(range(n), key=lambda i: (-points[i].sum(), i))
    above = []
    for i in order:
        mask = 0
        for k, j in enumerate(order):
            if j != i and np.all(points[i] <= points[j]):
                mask |= 1 << k
        above.append(mask)
    d = [float(diff[i]) for i in order]
    lo = hi = 0.0

    def walk(k, mask, acc):
        nonlocal lo, hi
        if k == n:
            lo = min(lo, acc)
            hi = max(hi, acc)
            return
        walk(k + 1, mask, acc)
        if mask & above[k] == above[k]:
            walk(k + 1, mask | (1 << k), acc + d[k])

    walk(0, 0, 0.0)
    return lo, hi


def fosd_compare(a, b, support, order: Optional[OrderSpec] = None, tol: float = FOSD_TOL) -> FosdResult:
    """First-order stochastic dominance between two laws on shared support points.

    ``a`` dominates ``b`` when every increasing function has a larger mean
    under ``a``.  Scalar supports compare CDFs pointwise.  Componentwise
    orders are decided exactly by enumerating the upper sets of the support
    poset when it has at most 20 points.  Beyond that only the coordinate
    marginals are compared: a failing marginal is conclusive, a passing one
    is returned with ``approximate=True``.
    """
    wa = np.asarray(a.weights if isinstance(a, FiniteDistribution) else a, dtype=float)
    wb = np.asarray(b.weights if isinstance(b, FiniteDistribution) else b, dtype=float)
    pts = np.asarray(support, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if not (wa.size == wb.size == pts.shape[0]):
        raise InvalidDistributionError("distributions and support are misaligned")
    if order is None:
        order = OrderSpec.total() if pts.shape[1] == 1 else OrderSpec.componentwise(pts.shape[1])
    if order.dims != pts.shape[1]:
        raise InvalidDistributionError(
            f"support has {pts.shape[1]} coordinates, order expects {order.dims}")

    if order.kind is OrderKind.TOTAL or pts.shape[1] == 1:
        return FosdResult(_relation(*_scalar_fosd(wa, wb, pts[:, 0], tol)))

    if len(np.unique(pts, axis=0)) != len(pts):
        raise InvalidDistributionError("support points must be distinct")
    if len(pts) <= POSET_EXACT_LIMIT:
        lo, hi = _upper_set_extremes(wa - wb, pts)
        return FosdResult(_relation(lo >= -tol, hi <= tol))

    a_ge = b_ge = True
    for j in range(pts.shape[1]):
        ga, gb = _scalar_fosd(wa, wb, pts[:, j], tol)
        a_ge &= ga
        b_ge &= gb
    if not (a_ge or b_ge):
        return FosdResult(Dominance.INCOMPARABLE)
    if np.allclose(wa, wb, rtol=0, atol=tol):
        return FosdResult(Dominance.EQUAL)
    return FosdResult(_relation(a_ge, b_ge), approximate=True)


class ComonotoneCheck(NamedTuple):
    comonotone: bool
    witness: Optional[tuple] = None

    def __bool__(self):
        return self.comonotone


def comonotone_pair_check(x, y, tol: float = 0.0) -> ComonotoneCheck:
    """Check ``(x_i - x_j)(y_i - y_j) >= 0`` over all index pairs.

    On failure the first offending pair ``(i, j)`` with ``i < j`` is returned.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise InvalidDistributionError("comonotonicity needs two aligned vectors")
    prod = (xa[:, None] - xa[None, :]) * (ya[:, None] - ya[None, :])
    bad = np.argwhere(np.triu(prod < -tol, k=1))
    if bad.size:
        i, j = bad[0]
        return ComonotoneCheck(False, (int(i), int(j)))
    return ComonotoneCheck(True)


# -- randomized axiom probe --------------------------------------------------

class PropertyResult(NamedTuple):
    holds: bool
    witness: Optional[dict] = None


@dataclass(frozen=True)
class AxiomReport:
    spec: RiskSpec
    trials: int
    results: dict

    @property
    def coherent(self) -> bool:
        return all(self.results[k].holds for k in
                   ("monotonicity", "translation", "homogeneity", "convexity"))

    @property
    def comonotone_additive(self) -> bool:
        return self.results["comonotone_additivity"].holds


def axiom_probe(spec: RiskSpec, trials: int = 100, seed: int = 0, tol: float = 1e-9) -> AxiomReport:
    """Randomized check of the coherence axioms and comonotone additivity.

    Each property keeps the first violating instance it meets as witness.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    found = {}

    def record(name, ok, **witness):
        if not ok and name not in found:
            found[name] = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                           for k, v in witness.items()}

    def rho(w, z):
        return evaluate_risk(spec, w, z)

    for _ in range(trials):
        n = int(rng.integers(2, 9))
        w = rng.dirichlet(np.ones(n))
        z = rng.normal(0.0, 10.0, n)
        y = rng.normal(0.0, 10.0, n)
        scale = 1.0 + np.abs(z).max() + np.abs(y).max()
        eps = tol * scale

        bigger = z + rng.exponential(1.0, n) * (rng.random(n) < 0.7)
        record("monotonicity", rho(w, z) <= rho(w, bigger) + eps,
               weights=w, z=z, w=bigger)

        c = float(rng.normal(0.0, 10.0))
        lhs, rhs = rho(w, z + c), rho(w, z) + c
        record("translation", abs(lhs - rhs) <= eps + tol * abs(c), weights=w, z=z, shift=c)

        lam = float(rng.exponential(2.0))
        lhs, rhs = rho(w, lam * z), lam * rho(w, z)
        record("homogeneity", abs(lhs - rhs) <= eps * (1 + lam), weights=w, z=z, scale=lam)

        lam = float(rng.random())
        lhs = rho(w, lam * z + (1 - lam) * y)
        rhs = lam * rho(w, z) + (1 - lam) * rho(w, y)
        record("convexity", lhs <= rhs + eps, weights=w, z=z, w=y, mix=lam)

        # comonotone pair: both increasing along one random ranking of the atoms
        rank = rng.permutation(n)
        xs = np.sort(rng.normal(0.0, 10.0, n))[rank]
        ys = np.sort(rng.exponential(10.0, n))[rank]
        assert comonotone_pair_check(xs, ys)
        lhs, rhs = rho(w, xs + ys), rho(w, xs) + rho(w, ys)
        record("comonotone_additivity", abs(lhs - rhs) <= eps, weights=w, x=xs, y=ys,
               joint=lhs, separate=rhs)

    names = ("monotonicity", "translation", "homogeneity", "convexity", "comonotone_additivity")
    results = {k: PropertyResult(k not in found, found.get(k)) for k in names}
    return AxiomReport(spec, trials, results)
