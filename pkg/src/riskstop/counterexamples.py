"""Two-period scenarios showing where nested CVaR departs from expectation.

Both scenarios are kept as exact rational pmfs so the headline numbers come
out exactly (52 and 4000/97) rather than to floating-point accuracy.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import CostModel, StateGrid, StoppingModel, build_tabular_kernel
from .risk import RiskSpec, cvar

TAIL = Fraction(1, 20)


@dataclass(frozen=True)
class Scenario:
    name: str
    pmf: dict          # (x1, x2) -> Fraction
    alpha: Fraction
    expected: dict     # headline name -> exact value

    def total_mass(self) -> Fraction:
        return sum(self.pmf.values(), Fraction(0))


def make_counterexamples():
    """Return ``(tower, subadditivity)`` scenario records."""
    tower = Scenario(
        "tower",
        {(-80, 100): Fraction(3, 100), (0, 100): Fraction(2, 100), (0, 0): Fraction(95, 100)},
        TAIL,
        {"joint": Fraction(52), "nested": Fraction(4000, 97)},
    )
    subadd = Scenario(
        "subadditivity",
        {(100, 0): Fraction(5, 100), (0, 100): Fraction(5, 100), (0, 0): Fraction(90, 100)},
        TAIL,
        {"first": Fraction(100), "second": Fraction(100), "sum": Fraction(100)},
    )
    return tower, subadd


def _marginal(pmf, key):
    out = {}
    for outcome, p in pmf.items():
        k = key(outcome)
        out[k] = out.get(k, Fraction(0)) + p
    return out


def _cvar_of(pmf_values, alpha):
    vals = list(pmf_values)
    return cvar([p for _, p in vals], [v for v, _ in vals], alpha)


@dataclass(frozen=True)
class TowerReport:
    joint: Fraction
    nested: Fraction
    conditional: dict   # first-stage outcome -> tail risk of the second-stage cost

    @property
    def tower_fails(self) -> bool:
        return self.joint != self.nested


def tower_report(scenario=None) -> TowerReport:
    """Joint CVaR of the total cost versus CVaR applied stage by stage."""
    scenario = scenario or make_counterexamples()[0]
    alpha = scenario.alpha
    total = _marginal(scenario.pmf, lambda o: o[0] + o[1])
    joint = _cvar_of(total.items(), alpha)
    first = _marginal(scenario.pmf, lambda o: o[0])
    conditional = {}
    for x1, p1 in first.items():
        cond = [(x2, p / p1) for (a, x2), p in scenario.pmf.items() if a == x1]
        conditional[x1] = _cvar_of(cond, alpha)
    stage = _marginal({x1: p for x1, p in first.items()}, lambda x1: x1 + conditional[x1])
    nested = _cvar_of(stage.items(), alpha)
    return TowerReport(joint, nested, conditional)


@dataclass(frozen=True)
class SubadditivityReport:
    first: Fraction
    second: Fraction
    total: Fraction

    @property
    def strict(self) -> bool:
        return self.total < self.first + self.second


def subadditivity_report(scenario=None) -> SubadditivityReport:
    scenario = scenario or make_counterexamples()[1]
    alpha = scenario.alpha
    first = _cvar_of(_marginal(scenario.pmf, lambda o: o[0]).items(), alpha)
    second = _cvar_of(_marginal(scenario.pmf, lambda o: o[1]).items(), alpha)
    total = _cvar_of(_marginal(scenario.pmf, lambda o: o[0] + o[1]).items(), alpha)
    return SubadditivityReport(first, second, total)


def tower_chain_model(alpha: float = 0.05, blocked: float = 1e3) -> StoppingModel:
    """The tower scenario as a two-period Markov chain.

    States are labels: 0 start, 1 and 2 the first-stage outcomes -80 and 0,
    3 and 4 the second-stage outcomes 100 and 0.  The first-stage cost is a
    continuation cost at t=1, the second-stage cost the terminal cost.
    Stopping early is priced at ``blocked`` so the optimum always continues.
    """
    n = 5
    eye = np.eye(n)
    k0 = eye.copy()
    k0[0] = [0, 0.03, 0.97, 0, 0]
    k1 = eye.copy()
    k1[1] = [0, 0, 0, 1, 0]
    k1[2] = [0, 0, 0, 2 / 97, 95 / 97]
    stop = np.full((3, n), blocked)
    stop[2] = [0, 0, 0, 100, 0]
    cont = np.zeros((2, n))
    cont[1] = [0, -80, 0, 0, 0]
    grid = StateGrid.scalar(np.arange(n, dtype=float))
    return StoppingModel(2, grid, build_tabular_kernel([k0, k1]), CostModel(stop, cont),
                         RiskSpec.cvar(alpha), name="tower-chain")
