import numpy as np
import pytest
from hypothesis import given, strategies as st

from riskstop import (BudgetExceededError, EnumerationBudget, RiskSpec, enumerate_policies,
                      evaluate_policy, nested_risk_tree, random_tabular_model, solve_dp)
from riskstop.counterexamples import tower_chain_model
from riskstop.model import CostModel, StateGrid, StoppingModel, build_tabular_kernel
from riskstop.oracle import all_policies
from riskstop.risk import cvar
from riskstop.solver import PolicyTables
from helpers import ORACLE_SPECS, small_dims


def test_policy_order_is_lexicographic():
    pol = all_policies(1, 2)
    # stop before continue, first cell most significant
    assert pol.tolist() == [[[True, True]], [[True, False]], [[False, True]], [[False, False]]]


def test_single_state_single_epoch():
    grid = StateGrid.scalar([0.0])
    m = StoppingModel(1, grid, build_tabular_kernel([[[1.0]]]),
                      CostModel([[3.0], [1.0]], [[1.5]]), RiskSpec.cvar(0.5))
    best, pol = enumerate_policies(m)
    assert best.tolist() == [min(3.0, 1.5 + 1.0)]
    assert pol.tolist() == [[[False]]]


def test_zero_costs_give_zero_everywhere():
    m = random_tabular_model(0, 3, 2)
    zero = StoppingModel(2, m.grid, m.kernel, CostModel(np.zeros((3, 3)), np.zeros((2, 3))),
                         RiskSpec.cvar(0.3))
    best, _ = enumerate_policies(zero)
    assert np.all(best == 0)


def test_budget_enforced():
    with pytest.raises(BudgetExceededError):
        enumerate_policies(random_tabular_model(0, 5, 3))
    with pytest.raises(BudgetExceededError):
        nested_risk_tree(random_tabular_model(0, 4, 3), np.zeros((3, 4), bool), max_nodes=10)


@pytest.mark.parametrize("spec", ORACLE_SPECS, ids=str)
def test_oracle_agrees_with_solver(spec):
    for seed in range(100):
        n, T = small_dims(seed)
        m = random_tabular_model(seed, n, T, spec)
        best, _ = enumerate_policies(m)
        assert np.abs(best - solve_dp(m).values[0]).max() <= 1e-10, seed


def test_three_state_two_epoch_enumeration_size():
    assert all_policies(2, 3).shape == (64, 2, 3)


def test_tree_on_tower_chain():
    m = tower_chain_model()
    always = np.zeros((2, 5), bool)
    assert nested_risk_tree(m, always)[0] == pytest.approx(4000 / 97, abs=1e-9)


def test_one_stage_tree_is_plain_cvar():
    m = random_tabular_model(9, 4, 1, RiskSpec.cvar(0.25))
    got = nested_risk_tree(m, np.zeros((1, 4), bool))
    k, s, c = m.kernel.matrices[0], m.costs.stop, m.costs.cont
    want = [c[0, x] + cvar(k[x], s[1], 0.25) for x in range(4)]
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_deterministic_chain_sums_costs():
    grid = StateGrid.scalar(np.arange(3.0))
    shift = np.eye(3)[[1, 2, 2]]
    cont = np.array([[1.0, 2.0, 4.0], [8.0, 16.0, 32.0]])
    stop = np.array([[0.0] * 3, [0.0] * 3, [100.0, 200.0, 300.0]])
    m = StoppingModel(2, grid, build_tabular_kernel([shift, shift]), CostModel(stop, cont),
                      RiskSpec.cvar(0.1))
    got = nested_risk_tree(m, np.zeros((2, 3), bool))
    assert got.tolist() == [1 + 16 + 300, 2 + 32 + 300, 4 + 32 + 300]


@given(st.integers(0, 10_000), st.sampled_from(ORACLE_SPECS), st.integers(0, 2 ** 31))
def test_tree_matches_policy_evaluation(seed, spec, pseed):
    n, T = small_dims(seed)
    m = random_tabular_model(seed, n, T, spec)
    stop = np.random.default_rng(pseed).random((T, n)) < 0.4
    np.testing.assert_allclose(nested_risk_tree(m, stop), evaluate_policy(m, PolicyTables(stop)),
                               atol=1e-12)


@given(st.integers(0, 10_000), st.sampled_from(ORACLE_SPECS), st.integers(0, 2 ** 31))
def test_enumeration_lower_bounds_any_policy(seed, spec, pseed):
    n, T = small_dims(seed)
    m = random_tabular_model(seed, n, T, spec)
    best, _ = enumerate_policies(m)
    stop = np.random.default_rng(pseed).random((T, n)) < 0.5
    assert np.all(best <= nested_risk_tree(m, stop) + 1e-10)


def test_default_budget():
    b = EnumerationBudget()
    assert (b.max_states, b.max_horizon, b.max_policies) == (4, 3, 4096)
