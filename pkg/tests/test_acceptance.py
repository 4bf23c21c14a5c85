"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are printed even
without ``-s``).  Suites are cached so the loss-bound criterion can sweep
every instance solved by the others without solving them twice.
"""
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest

from riskstop import RiskSpec, solve_dp
from riskstop.catalog import asset_sale, deadline_sale
from riskstop.counterexamples import (make_counterexamples, subadditivity_report,
                                      tower_report)
from riskstop.model import random_comonotone_model, random_monotone_model, random_tabular_model
from riskstop.oracle import enumerate_policies
from riskstop.solver import (compare_risk_aversion, loss_recursion_gap,
                             one_step_lookahead_policy, risk_neutral_equivalent)
from riskstop.structure import (Verdict, check_loss_monotonicity, check_monotone_costs,
                                check_one_step_conditions, check_threshold_monotonicity,
                                check_value_monotonicity, extract_control_limits)

from helpers import ORACLE_SPECS, small_dims

VALUE_TOL = 1e-10
ORDER_TOL = 1e-12


@pytest.fixture
def report(capsys):
    def _print(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, detail
    return _print


# -- cached suites ---------------------------------------------------------------
# each returns (failures, instances) with instances a list of (model, result)

@lru_cache(maxsize=None)
def oracle_suite():
    bad, solved = [], []
    for seed in range(100):
        n, T = small_dims(seed)
        for spec in ORACLE_SPECS:
            model = random_tabular_model(seed, n, T, spec)
            res = solve_dp(model)
            best, _ = enumerate_policies(model)
            err = float(np.abs(best - res.values[0]).max())
            if err > VALUE_TOL:
                bad.append((seed, str(spec), err))
            solved.append((model, res))
    return bad, solved


@lru_cache(maxsize=None)
def joint_monotone_suite():
    bad, solved = [], []
    for seed in range(100):
        sizes = (5,) if seed % 2 == 0 else (3, 4)
        model = random_monotone_model(seed, sizes, 3, "joint", RiskSpec.cvar(0.3))
        res = solve_dp(model)
        rep = check_value_monotonicity(res.values, model.grid)
        if rep.verdict is not Verdict.HOLDS:
            bad.append((seed, rep.witness))
        solved.append((model, res))
    return bad, solved


@lru_cache(maxsize=None)
def risk_neutral_suite():
    bad, solved = [], []
    for seed in range(50):
        for alpha in (0.2, 0.5, 0.9):
            model = random_monotone_model(seed, (6,), 4, "joint", RiskSpec.cvar(alpha))
            res = solve_dp(model)
            neutral = solve_dp(risk_neutral_equivalent(model))
            err = float(np.abs(neutral.values - res.values).max())
            if err > VALUE_TOL or neutral.policy != res.policy:
                bad.append((seed, alpha, err))
            solved.append((model, res))
    return bad, solved


@lru_cache(maxsize=None)
def partial_monotone_suite():
    bad, solved = [], []
    for seed in range(50):
        model = random_monotone_model(seed, (4, 3), 3, "partial", RiskSpec.cvar(0.3))
        res = solve_dp(model)
        rep = check_value_monotonicity(res.values, model.grid, dims=(0,))
        if rep.verdict is not Verdict.HOLDS:
            bad.append((seed, rep.witness))
        solved.append((model, res))
    return bad, solved


@lru_cache(maxsize=None)
def comonotone_suite():
    bad, solved = [], []
    for seed in range(50):
        model = random_comonotone_model(seed, (4, 4), 3, RiskSpec.cvar(0.4))
        res = solve_dp(model)
        problems = []
        if not model.certificate.holds:
            problems.append("certificate")
        if not check_monotone_costs(model.costs, model.grid):
            problems.append("costs")
        if not check_loss_monotonicity(res, model.grid, "M"):
            problems.append("M")
        if not check_loss_monotonicity(res, model.grid, "L"):
            problems.append("L")
        for dim in range(model.grid.dims):
            if extract_control_limits(res.policy, model.grid, dim)[1] is None:
                problems.append(f"limit dim {dim}")
        gap = float(np.abs(loss_recursion_gap(model, res)).max())
        if gap > VALUE_TOL:
            problems.append(f"gap {gap:.2e}")
        if problems:
            bad.append((seed, problems))
        solved.append((model, res))
    return bad, solved


@lru_cache(maxsize=None)
def asset_sale_suite():
    bad, solved = [], []
    for r in (0.0, 0.05):
        for alpha in (0.1, 0.5, 1.0):
            model = asset_sale(r=r, risk=RiskSpec.cvar(alpha))
            res = solve_dp(model)
            failed = [rep.item for rep in check_one_step_conditions(model, res)
                      if rep.verdict is not Verdict.HOLDS]
            if one_step_lookahead_policy(res) != res.policy:
                failed.append("lookahead policy")
            if failed:
                bad.append((r, alpha, failed))
            solved.append((model, res))
    return bad, solved


@lru_cache(maxsize=None)
def deadline_suite():
    model = deadline_sale()
    res = solve_dp(model)
    reports = [check_loss_monotonicity(res, model.grid, "M", strict=True)]
    rep, th = extract_control_limits(res.policy, model.grid, 0)
    reports.append(rep)
    if th is not None:
        reports.append(check_threshold_monotonicity(th, "inTime", model=model))
    bad = [(r.item, r.witness) for r in reports if r.verdict is not Verdict.HOLDS]
    return bad, [(model, res)]


@lru_cache(maxsize=None)
def risk_ordering_suite():
    bad, solved = [], []
    averse, mild = RiskSpec.mean_cvar(0.8, 0.2), RiskSpec.mean_cvar(0.2, 0.2)
    for seed in range(20):
        sizes = (6,) if seed % 2 else (4, 4)
        model = random_comonotone_model(seed, sizes, 3, averse)
        cmp = compare_risk_aversion(model, averse, mild, seed=seed, tol=ORDER_TOL)
        if cmp.direction not in ("a>=b", "equal") or not cmp.ok:
            failed = [r.item for r in cmp.threshold_reports if r.verdict is not Verdict.HOLDS]
            bad.append((seed, cmp.direction, cmp.value_witness, failed))
        if cmp.result_a is not None:
            solved += [(model.with_risk(averse), cmp.result_a), (model.with_risk(mild), cmp.result_b)]
    return bad, solved


# -- criteria ----------------------------------------------------------------------

def test_criterion_01_tower_counterexample(report):
    tr = tower_report()
    ok = (tr.joint == 52 and abs(float(tr.nested) - 4000 / 97) <= 1e-9
          and tr.nested == Fraction(4000, 97) and tr.tower_fails)
    report(1, ok, f"joint CVaR = {tr.joint}, nested CVaR = {tr.nested} "
                  f"({float(tr.nested):.6f}), differ = {tr.tower_fails}")


def test_criterion_02_subadditivity_counterexample(report):
    sr = subadditivity_report(make_counterexamples()[1])
    ok = sr.first == sr.second == sr.total == 100 and sr.strict
    report(2, ok, f"CVaR(X1) = {sr.first}, CVaR(X2) = {sr.second}, CVaR(X1+X2) = {sr.total}")


def test_criterion_03_oracle_equivalence(report):
    bad, solved = oracle_suite()
    report(3, not bad, f"{len(solved)} instances, {len(bad)} mismatches {bad[:3]}")


def test_criterion_04_joint_monotone_values(report):
    bad, solved = joint_monotone_suite()
    report(4, not bad, f"{len(solved)} models, {len(bad)} violations {bad[:1]}")


def test_criterion_05_risk_neutral_equivalent(report):
    bad, solved = risk_neutral_suite()
    report(5, not bad, f"{len(solved)} model/level pairs, {len(bad)} failures {bad[:3]}")


def test_criterion_06_partial_monotone_values(report):
    bad, solved = partial_monotone_suite()
    report(6, not bad, f"{len(solved)} models, {len(bad)} violations {bad[:1]}")


def test_criterion_07_comonotone_control_limits(report):
    bad, solved = comonotone_suite()
    report(7, not bad, f"{len(solved)} models, {len(bad)} failures {bad[:3]}")


def test_criterion_08_asset_sale_lookahead(report):
    bad, solved = asset_sale_suite()
    report(8, not bad, f"{len(solved)} (r, alpha) cases, {len(bad)} failures {bad[:3]}")


def test_criterion_09_deadline_sale_thresholds(report):
    bad, _ = deadline_suite()
    report(9, not bad, "strict one-step loss, single threshold, thresholds in time"
                       + (f"; failed {bad}" if bad else ""))


def test_criterion_10_risk_aversion_ordering(report):
    bad, solved = risk_ordering_suite()
    report(10, not bad, f"{len(solved) // 2} models, {len(bad)} failures {bad[:3]}")


def test_criterion_11_loss_bound(report):
    suites = (oracle_suite, joint_monotone_suite, risk_neutral_suite, partial_monotone_suite,
              comonotone_suite, asset_sale_suite, deadline_suite, risk_ordering_suite)
    count, worst = 0, -np.inf
    for suite in suites:
        for _, res in suite()[1]:
            count += 1
            worst = max(worst, float((res.L - res.M).max()))
    report(11, worst <= VALUE_TOL, f"{count} instances, max(L - M) = {worst:.3e}")
