from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from riskstop import (Dominance, FiniteDistribution, InvalidDistributionError, InvalidSpecError,
                      OrderSpec, RiskSpec, UnsupportedOrderError, axiom_probe,
                      comonotone_pair_check, cvar, cvar_minimal_element, cvar_oracle,
                      envelope_maximize, evaluate_risk, fosd_compare)
from strategies import level, risk_specs, weighted_samples


# -- FiniteDistribution --------------------------------------------------------

def test_distribution_renormalizes_small_drift():
    d = FiniteDistribution([0.5, 0.5 + 5e-10])
    assert abs(d.weights.sum() - 1) < 1e-15


@pytest.mark.parametrize("weights", [[0.5, 0.4], [1.2, -0.2], [0.0, 0.0], []])
def test_distribution_rejects_bad_weights(weights):
    with pytest.raises(InvalidDistributionError):
        FiniteDistribution(weights)


def test_distribution_is_immutable():
    d = FiniteDistribution([0.25, 0.75])
    with pytest.raises(ValueError):
        d.weights[0] = 1.0


# -- RiskSpec ------------------------------------------------------------------

@pytest.mark.parametrize("text", ["expectation", "cvar:0.05", "mean-cvar:0.8,0.2",
                                  "mean-semideviation:0.5"])
def test_spec_text_round_trip(text):
    spec = RiskSpec.parse(text)
    assert RiskSpec.parse(str(spec)) == spec
    assert RiskSpec.from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize("text", ["cvar", "cvar:0", "cvar:1.5", "mean-cvar:0.5",
                                  "mean-semideviation:2", "evar:0.1", "cvar:x"])
def test_spec_rejects_bad_parameters(text):
    with pytest.raises(InvalidSpecError):
        RiskSpec.parse(text)


def test_spec_rejects_extra_parameter():
    with pytest.raises(InvalidSpecError):
        RiskSpec("expectation", alpha=0.5)


# -- evaluate_risk / cvar examples ----------------------------------------------

def test_expectation_example():
    assert evaluate_risk(RiskSpec.expectation(), [0.95, 0.05], [0, 100]) == pytest.approx(5.0)


def test_cvar_one_is_mean(rng):
    w = rng.dirichlet(np.ones(5))
    z = rng.normal(size=5)
    assert evaluate_risk(RiskSpec.cvar(1.0), w, z) == pytest.approx(
        evaluate_risk(RiskSpec.expectation(), w, z), abs=1e-12)


def test_semideviation_example():
    # 5 + 0.5 * (95 * 0.05), summed by hand
    assert evaluate_risk(RiskSpec.mean_semideviation(0.5), [0.95, 0.05], [0, 100]) == \
        pytest.approx(7.375, abs=1e-12)


def test_cvar_joint_tower_value_exact():
    w = [Fraction(3, 100), Fraction(2, 100), Fraction(95, 100)]
    assert cvar(w, [20, 100, 0], Fraction(1, 20)) == 52
    assert cvar([0.03, 0.02, 0.95], [20, 100, 0], 0.05) == pytest.approx(52, abs=1e-12)


def test_cvar_conditional_tower_value_exact():
    w = [Fraction(2, 97), Fraction(95, 97)]
    assert cvar(w, [100, 0], Fraction(1, 20)) == Fraction(4000, 97)
    assert cvar([2 / 97, 95 / 97], [100, 0], 0.05) == pytest.approx(4000 / 97, abs=1e-9)


@pytest.mark.parametrize("alpha", [0.01, 0.3, 1.0])
def test_cvar_point_mass(alpha):
    assert cvar([1.0], [3.25], alpha) == 3.25
    assert cvar([0.0, 1.0, 0.0], [9.0, 3.25, -1.0], alpha) == 3.25


@pytest.mark.parametrize("w,v,alpha,expected", [
    ([0.03, 0.02, 0.95], [20, 100, 0], 0.05, 52.0),
    ([2 / 97, 95 / 97], [100, 0], 0.05, 4000 / 97),
    ([1.0], [7.0], 0.2, 7.0),
])
def test_cvar_oracle_matches_examples(w, v, alpha, expected):
    assert cvar_oracle(w, v, alpha) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("alpha", [0.0, -0.1, 1.01])
def test_cvar_rejects_bad_level(alpha):
    with pytest.raises(InvalidSpecError):
        cvar([1.0], [1.0], alpha)


def test_misaligned_sample_rejected():
    with pytest.raises(InvalidDistributionError):
        evaluate_risk(RiskSpec.expectation(), [0.5, 0.5], [1.0])


# -- envelope and minimal element ------------------------------------------------

def test_envelope_example():
    p = envelope_maximize([0.03, 0.02, 0.95], [20, 100, 0], 0.05)
    np.testing.assert_allclose(p.weights, [0.6, 0.4, 0.0], atol=1e-12)
    assert p.weights @ np.array([20, 100, 0]) == pytest.approx(52, abs=1e-12)


def test_envelope_trivial_cases():
    d = FiniteDistribution([0.2, 0.8])
    assert envelope_maximize(d, [1.0, 5.0], 1.0) is d
    assert envelope_maximize(d, [4.0, 4.0], 0.1) is d


def test_minimal_element_examples():
    np.testing.assert_allclose(cvar_minimal_element([0.2, 0.3, 0.5], [1, 2, 3], 0.2).weights,
                               [1, 0, 0], atol=1e-12)
    np.testing.assert_allclose(cvar_minimal_element([0.1, 0.3, 0.6], [1, 2, 3], 0.2).weights,
                               [0.5, 0.5, 0], atol=1e-12)
    d = FiniteDistribution([0.1, 0.3, 0.6])
    assert cvar_minimal_element(d, [1, 2, 3], 1.0) is d


def test_minimal_element_reproduces_cvar_of_decreasing_tables(rng):
    w = [0.1, 0.3, 0.6]
    q = cvar_minimal_element(w, [1, 2, 3], 0.2).weights
    for _ in range(100):
        v = -np.cumsum(rng.exponential(size=3)) + rng.normal()
        assert q @ v == pytest.approx(cvar(w, v, 0.2), abs=1e-12)


def test_minimal_element_needs_scalar_states():
    with pytest.raises(UnsupportedOrderError):
        cvar_minimal_element([0.5, 0.5], [[0, 1], [1, 0]], 0.5)


# -- FOSD ------------------------------------------------------------------------

def test_fosd_examples():
    assert fosd_compare([0, 0, 1], [1, 0, 0], [1, 2, 3]).relation is Dominance.A_DOMINATES_B
    assert fosd_compare([0.3, 0.7], [0.3, 0.7], [0, 1]).relation is Dominance.EQUAL
    # CDFs on (-1, 0, 1, 2): a = (0, .5, 1, 1), b = (.5, .5, .5, 1) cross
    a = [0.0, 0.5, 0.5, 0.0]
    b = [0.5, 0.0, 0.0, 0.5]
    assert fosd_compare(a, b, [-1, 0, 1, 2]).relation is Dominance.INCOMPARABLE


def test_fosd_componentwise_exact():
    pts = [[0, 0], [1, 0], [0, 1], [1, 1]]
    cw = OrderSpec.componentwise(2)
    res = fosd_compare([0, 0, 0, 1], [1, 0, 0, 0], pts, cw)
    assert res == (Dominance.A_DOMINATES_B, False)
    # mass moved between incomparable points
    assert fosd_compare([0, 1, 0, 0], [0, 0, 1, 0], pts, cw).relation is Dominance.INCOMPARABLE


def test_fosd_componentwise_marginals_can_mislead_but_exact_check_does_not():
    # same marginals, different joint: the upper set {(1,1)} separates them
    pts = [[0, 0], [1, 0], [0, 1], [1, 1]]
    a = [0.5, 0.0, 0.0, 0.5]
    b = [0.0, 0.5, 0.5, 0.0]
    res = fosd_compare(a, b, pts, OrderSpec.componentwise(2))
    assert res.relation is Dominance.INCOMPARABLE and not res.approximate


def test_fosd_large_poset_is_flagged():
    side = 5
    pts = [[i, j] for i in range(side) for j in range(side)]
    a = np.zeros(side * side)
    b = np.zeros(side * side)
    a[-1] = 1.0
    b[0] = 1.0
    res = fosd_compare(a, b, pts, OrderSpec.componentwise(2))
    assert res.relation is Dominance.A_DOMINATES_B and res.approximate


def test_fosd_rejects_mismatched_support():
    with pytest.raises(InvalidDistributionError):
        fosd_compare([0.5, 0.5], [1.0], [0, 1])


# -- comonotonicity ----------------------------------------------------------------

def test_comonotone_examples():
    assert comonotone_pair_check([1, 2, 3], [10, 20, 30])
    res = comonotone_pair_check([1, 2], [2, 1])
    assert not res and res.witness == (0, 1)
    assert comonotone_pair_check([1, 1, 5], [7, 2, 9])


def test_comonotone_misaligned():
    with pytest.raises(InvalidDistributionError):
        comonotone_pair_check([1, 2], [1])


# -- axiom probe -------------------------------------------------------------------

def test_axiom_probe_expectation_all_pass():
    rep = axiom_probe(RiskSpec.expectation(), trials=100, seed=0)
    assert all(r.holds for r in rep.results.values())


def test_axiom_probe_cvar_coherent_and_comonotone():
    rep = axiom_probe(RiskSpec.cvar(0.3), trials=100, seed=0)
    assert rep.coherent and rep.comonotone_additive


def test_axiom_probe_semideviation_not_comonotone():
    rep = axiom_probe(RiskSpec.mean_semideviation(0.9), trials=100, seed=0)
    assert rep.coherent
    assert not rep.comonotone_additive
    w = rep.results["comonotone_additivity"].witness
    spec = RiskSpec.mean_semideviation(0.9)
    joint = evaluate_risk(spec, w["weights"], np.add(w["x"], w["y"]))
    apart = evaluate_risk(spec, w["weights"], w["x"]) + evaluate_risk(spec, w["weights"], w["y"])
    assert joint < apart - 1e-9


# -- properties --------------------------------------------------------------------

@given(weighted_samples(), level)
def test_cvar_matches_oracle(sample, alpha):
    w, v = sample
    assert cvar(w, v, alpha) == pytest.approx(cvar_oracle(w, v, alpha), abs=1e-12, rel=1e-12)


@given(weighted_samples(), level)
def test_envelope_attains_cvar_and_respects_density_bound(sample, alpha):
    w, v = sample
    p = envelope_maximize(w, v, alpha).weights
    assert p @ v == pytest.approx(cvar(w, v, alpha), abs=1e-12, rel=1e-12)
    assert np.all(p <= w / alpha + 1e-15)


@given(weighted_samples(), level, level)
def test_cvar_decreases_in_level(sample, a1, a2):
    w, v = sample
    lo, hi = min(a1, a2), max(a1, a2)
    assert cvar(w, v, lo) >= cvar(w, v, hi) - 1e-12


@given(weighted_samples(), risk_specs, st.randoms(use_true_random=False))
def test_distribution_invariance(sample, spec, rnd):
    w, v = sample
    perm = list(range(len(w)))
    rnd.shuffle(perm)
    assert evaluate_risk(spec, w[perm], v[perm]) == pytest.approx(
        evaluate_risk(spec, w, v), abs=1e-10)


@given(weighted_samples(min_size=2), weighted_samples(min_size=2), risk_specs)
def test_consistent_with_fosd(sa, sb, spec):
    wa, va = sa
    wb, _ = sb
    n = min(len(wa), len(wb))
    support = np.sort(va[:n])
    a = wa[:n] / wa[:n].sum()
    b = wb[:n] / wb[:n].sum()
    rel = fosd_compare(a, b, support).relation
    ra, rb = evaluate_risk(spec, a, support), evaluate_risk(spec, b, support)
    if rel is Dominance.A_DOMINATES_B:
        assert ra >= rb - 1e-10
    elif rel is Dominance.B_DOMINATES_A:
        assert rb >= ra - 1e-10


@given(weighted_samples(min_size=2), level, st.randoms(use_true_random=False))
def test_cvar_comonotone_additive(sample, alpha, rnd):
    w, x = sample
    rank = np.argsort(x, kind="stable")
    y = np.empty_like(x)
    y[rank] = np.sort([rnd.uniform(-10, 10) for _ in x])
    assert comonotone_pair_check(x, y)
    assert cvar(w, x + y, alpha) == pytest.approx(cvar(w, x, alpha) + cvar(w, y, alpha), abs=1e-10)


@given(weighted_samples(), risk_specs, st.data())
def test_subadditive(sample, spec, data):
    w, x = sample
    y = np.array(data.draw(st.lists(st.floats(-50, 50), min_size=len(w), max_size=len(w))))
    assert evaluate_risk(spec, w, x + y) <= \
        evaluate_risk(spec, w, x) + evaluate_risk(spec, w, y) + 1e-10
