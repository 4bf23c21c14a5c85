"""Batch command line front end.

    riskstop solve --builtin asset-sale --risk cvar:0.5 --out results/
    riskstop check --model model.json --check value_monotonicity,control_limits
    riskstop counterexamples
    riskstop example --name deadline-sale
    riskstop compare --builtin random-comonotone --risk-a mean-cvar:0.8,0.2 --risk-b mean-cvar:0.2,0.2
    riskstop oracle-verify --seeds 100

Exit status is 1 when any check is violated, 2 on bad input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import catalog
from .counterexamples import make_counterexamples, subadditivity_report, tower_report
from .errors import RiskStopError
from .model import StoppingModel, random_tabular_model
from .modelio import load_model, model_to_dict
from .oracle import enumerate_policies, nested_risk_tree
from .risk import RiskSpec
from .solver import (compare_risk_aversion, loss_recursion_gap, one_step_lookahead_policy,
                     solve_dp)
from .structure import (StructureReport, Verdict, _jsonable, check_comonotone_dynamics,
                        check_comonotone_risk, check_loss_monotonicity, check_monotone_costs,
                        check_one_step_conditions, check_partial_assumptions,
                        check_stochastic_monotonicity, check_threshold_monotonicity,
                        check_value_monotonicity, extract_control_limits)

TOL = 1e-10


# -- helpers -----------------------------------------------------------------

def parse_risk(text):
    """``cvar:0.5`` for every epoch, or ``cvar:0.5;cvar:0.3;...`` one per epoch."""
    if text is None:
        return None
    parts = [p for p in text.split(";") if p.strip()]
    specs = tuple(RiskSpec.parse(p) for p in parts)
    return specs[0] if len(specs) == 1 else specs


def load(args) -> StoppingModel:
    risk = parse_risk(getattr(args, "risk", None))
    if args.model:
        model = load_model(args.model)
        return model.with_risk(risk) if risk is not None else model
    if args.builtin:
        return catalog.build(args.builtin, catalog.parse_params(args.params), risk)
    raise RiskStopError("give --model FILE or --builtin NAME")


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def table_csv(grid, table, labels=None) -> str:
    """One row per state: coordinates, then one column per epoch."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    table = np.asarray(table)
    w.writerow([f"x{k}" for k in range(grid.dims)] + [f"t{t}" for t in range(table.shape[0])])
    for x in range(grid.size):
        coords = [_fmt(c) for c in grid.points[x]]
        if labels is not None:
            w.writerow(coords + [labels(v) for v in table[:, x]])
        else:
            w.writerow(coords + [_fmt(v) for v in table[:, x]])
    return buf.getvalue()


def result_tables(model, result) -> dict:
    g = model.grid
    return {
        "values": table_csv(g, result.values),
        "policy": table_csv(g, result.policy.stop, lambda s: "S" if s else "C"),
        "continuation_loss": table_csv(g, result.L),
        "one_step_loss": table_csv(g, result.M),
    }


def invariant_reports(model, result) -> list:
    reps = []
    s = model.costs.stop
    bad = np.argwhere(result.values > s + 1e-12)
    reps.append(_report("value_below_stop_cost", bad, result.values, s))
    bad = np.argwhere(result.L > result.M + TOL)
    reps.append(_report("continuation_below_one_step_loss", bad, result.L, result.M))
    bad = np.argwhere(result.policy.stop != (result.L >= 0))
    reps.append(_report("policy_matches_loss_sign", bad, result.L, result.M))
    return reps


def _report(item, bad, a, b):
    if bad.size:
        t, x = bad[0]
        return StructureReport(item, Verdict.VIOLATED,
                               {"t": int(t), "state": int(x), "values": (float(a[t, x]), float(b[t, x]))})
    return StructureReport(item, Verdict.HOLDS)


def threshold_summary(model, result) -> dict:
    out = {}
    for dim in range(model.grid.dims):
        rep, th = extract_control_limits(result.policy, model.grid, dim)
        out[f"dim{dim}"] = ({"orientation": th.orientation, "limits": _jsonable(th.values)}
                           if th is not None else {"violated": _jsonable(rep.witness)})
    return out


# -- checks ------------------------------------------------------------------

def _run_checks(model, result, names):
    grid = model.grid
    reps = []
    for name in names:
        if name == "stochastic_monotonicity":
            reps.append(check_stochastic_monotonicity(model.kernel, grid))
        elif name == "monotone_costs":
            reps.append(check_monotone_costs(model.costs, grid))
        elif name == "partial":
            reps.extend(check_partial_assumptions(model, (0,)))
        elif name == "comonotone_dynamics":
            reps.append(check_comonotone_dynamics(model))
        elif name == "comonotone_risk":
            reps.append(check_comonotone_risk(model))
        elif name == "value_monotonicity":
            reps.append(check_value_monotonicity(result.values, grid))
        elif name == "value_monotonicity_dim0":
            reps.append(check_value_monotonicity(result.values, grid, dims=(0,)))
        elif name == "loss_monotonicity":
            reps.append(check_loss_monotonicity(result, grid, "L"))
        elif name == "one_step_loss_monotonicity":
            reps.append(check_loss_monotonicity(result, grid, "M"))
        elif name == "one_step_loss_strict":
            rep = check_loss_monotonicity(result, grid, "M", strict=True)
            reps.append(StructureReport("one_step_loss_strictly_decreasing", rep.verdict,
                                        rep.witness, rep.detail))
        elif name == "loss_additivity":
            gap = np.abs(loss_recursion_gap(model, result))
            bad = np.argwhere(gap > TOL)
            reps.append(StructureReport("loss_additivity", Verdict.VIOLATED,
                                        {"t": int(bad[0][0]), "state": int(bad[0][1]),
                                         "gap": float(gap[tuple(bad[0])])})
                        if bad.size else StructureReport("loss_additivity", Verdict.HOLDS))
        elif name == "control_limits":
            reps.extend(extract_control_limits(result.policy, grid, d)[0] for d in range(grid.dims))
        elif name in ("threshold_time", "threshold_cross"):
            mode = "inTime" if name == "threshold_time" else "crossDim"
            for d in range(grid.dims):
                rep, th = extract_control_limits(result.policy, grid, d)
                reps.append(check_threshold_monotonicity(th, mode, model=model) if th is not None
                            else StructureReport(f"threshold_{mode}_dim{d}", Verdict.NOT_APPLICABLE,
                                                 None, "no control limit"))
        elif name == "one_step":
            reps.extend(check_one_step_conditions(model, result))
        elif name == "lookahead_optimal":
            same = one_step_lookahead_policy(result) == result.policy
            bad = np.argwhere(one_step_lookahead_policy(result).stop != result.policy.stop)
            reps.append(StructureReport("lookahead_optimal", Verdict.HOLDS) if same else
                        StructureReport("lookahead_optimal", Verdict.VIOLATED,
                                        {"t": int(bad[0][0]), "state": int(bad[0][1])}))
        elif name == "invariants":
            reps.extend(invariant_reports(model, result))
        else:
            raise RiskStopError(f"unknown check {name!r}; choose from {', '.join(CHECKS)}")
    return reps


CHECKS = ("invariants", "stochastic_monotonicity", "monotone_costs", "partial",
          "comonotone_dynamics", "comonotone_risk", "value_monotonicity",
          "value_monotonicity_dim0", "loss_monotonicity", "one_step_loss_monotonicity",
          "one_step_loss_strict", "loss_additivity", "control_limits", "threshold_time",
          "threshold_cross", "one_step", "lookahead_optimal")

DEFAULT_CHECKS = ("invariants", "stochastic_monotonicity", "monotone_costs",
                  "value_monotonicity", "loss_monotonicity", "control_limits")

EXAMPLE_CHECKS = {
    "asset-sale": ("invariants", "one_step", "lookahead_optimal", "control_limits"),
    "deadline-sale": ("invariants", "one_step_loss_strict", "control_limits", "threshold_time"),
    "arf": ("invariants", "comonotone_dynamics", "comonotone_risk", "monotone_costs",
            "partial", "value_monotonicity_dim0"),
    "tower-chain": ("invariants",),
    "random-monotone": ("invariants", "stochastic_monotonicity", "monotone_costs",
                        "value_monotonicity"),
    "random-comonotone": ("invariants", "comonotone_dynamics", "one_step_loss_monotonicity",
                          "loss_monotonicity", "loss_additivity", "control_limits",
                          "threshold_cross"),
    "random-tabular": ("invariants",),
}


# -- output ------------------------------------------------------------------

def emit(args, summary: dict, tables: dict | None = None) -> int:
    reps = summary.get("verdicts", [])
    failed = any(r["verdict"] == Verdict.VIOLATED.value for r in reps)
    if getattr(args, "format", "csv") == "json" and tables:
        summary = dict(summary, tables=tables)
        tables = None
    text = json.dumps(_jsonable(summary), indent=1)
    out = getattr(args, "out", None)
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / "summary.json").write_text(text + "\n")
        for name, body in (tables or {}).items():
            (d / f"{name}.csv").write_text(body)
    else:
        print(text)
    return 1 if failed else 0


def _inputs(args, model) -> dict:
    d = {"model": getattr(args, "model", None) or getattr(args, "builtin", None)
         or getattr(args, "name", None),
         "params": catalog.parse_params(getattr(args, "params", None)),
         "risk": [str(r) for r in model.risk] if model is not None else None,
         "seed": getattr(args, "seed", None)}
    return d


def _headline(model, result) -> dict:
    return {"v0_min": float(result.values[0].min()), "v0_max": float(result.values[0].max()),
            "stop_fraction": float(result.policy.stop.mean()),
            "thresholds": threshold_summary(model, result)}


# -- commands ----------------------------------------------------------------

def cmd_solve(args) -> int:
    model = load(args)
    result = solve_dp(model)
    reps = invariant_reports(model, result)
    summary = {"command": "solve", "inputs": _inputs(args, model),
               "verdicts": [r.to_dict() for r in reps], "headline_values": _headline(model, result)}
    return emit(args, summary, result_tables(model, result))


def _check_names(text, default):
    if not text:
        return default
    names = tuple(n.strip() for n in text.split(",") if n.strip())
    return CHECKS if names == ("all",) else names


def cmd_check(args) -> int:
    model = load(args)
    result = solve_dp(model)
    reps = _run_checks(model, result, _check_names(args.check, DEFAULT_CHECKS))
    summary = {"command": "check", "inputs": _inputs(args, model),
               "verdicts": [r.to_dict() for r in reps], "headline_values": _headline(model, result)}
    return emit(args, summary, result_tables(model, result))


def _rational(x: Fraction) -> dict:
    return {"exact": str(x), "decimal": float(x)}


def cmd_counterexamples(args) -> int:
    tower, subadd = make_counterexamples()
    tr, sr = tower_report(tower), subadditivity_report(subadd)
    model = catalog.tower_chain()
    chain = float(nested_risk_tree(model, np.zeros((model.horizon, model.n_states), bool))[0])
    reps = [
        StructureReport("tower_property_fails", Verdict.HOLDS if tr.tower_fails else Verdict.VIOLATED,
                        None if tr.tower_fails else {"joint": str(tr.joint), "nested": str(tr.nested)},
                        f"joint {tr.joint} vs nested {tr.nested}"),
        StructureReport("strict_subadditivity", Verdict.HOLDS if sr.strict else Verdict.VIOLATED,
                        None if sr.strict else {"first": str(sr.first), "second": str(sr.second),
                                                "total": str(sr.total)},
                        f"{sr.total} < {sr.first} + {sr.second}"),
    ]
    summary = {"command": "counterexamples",
               "inputs": {"alpha": str(tower.alpha)},
               "verdicts": [r.to_dict() for r in reps],
               "headline_values": {
                   "tower": {"joint_cvar": _rational(tr.joint), "nested_cvar": _rational(tr.nested),
                             "conditional": {str(k): _rational(v) for k, v in tr.conditional.items()},
                             "markov_chain_nested_value": chain},
                   "subadditivity": {"cvar_first": _rational(sr.first),
                                     "cvar_second": _rational(sr.second),
                                     "cvar_sum": _rational(sr.total)}}}
    if not args.out and args.format != "json":
        print(f"tower:         joint CVaR = {tr.joint}, nested CVaR = {tr.nested} "
              f"= {float(tr.nested):.4f}; differ: {tr.tower_fails}")
        print(f"subadditivity: CVaR(X1) = {sr.first}, CVaR(X2) = {sr.second}, "
              f"CVaR(X1+X2) = {sr.total} < {sr.first + sr.second}: {sr.strict}")
        return 0 if tr.tower_fails and sr.strict else 1
    return emit(args, summary)


def cmd_example(args) -> int:
    name = args.name
    model = catalog.build(name, catalog.parse_params(args.params), parse_risk(args.risk))
    result = solve_dp(model)
    reps = _run_checks(model, result, _check_names(args.check, EXAMPLE_CHECKS[name]))
    summary = {"command": "example", "inputs": _inputs(args, model),
               "verdicts": [r.to_dict() for r in reps], "headline_values": _headline(model, result)}
    return emit(args, summary, result_tables(model, result))


def cmd_compare(args) -> int:
    model = load(args)
    a, b = parse_risk(args.risk_a), parse_risk(args.risk_b)
    cmp = compare_risk_aversion(model, a, b, seed=args.seed or 0)
    reps = []
    if cmp.direction is None:
        reps.append(StructureReport("risk_dominance", Verdict.VIOLATED, cmp.probe_witness,
                                    "neither mapping dominates the other"))
    else:
        reps.append(StructureReport("risk_dominance", Verdict.HOLDS, None, cmp.direction))
        reps.append(StructureReport("value_ordering",
                                    Verdict.HOLDS if cmp.values_ordered else Verdict.VIOLATED,
                                    None if cmp.values_ordered else {"t": cmp.value_witness[0],
                                                                     "state": cmp.value_witness[1],
                                                                     "values": cmp.value_witness[2:]}))
        reps.extend(cmp.threshold_reports)
    headline = {"direction": cmp.direction}
    if cmp.result_a is not None:
        headline["a"] = _headline(model, cmp.result_a)
        headline["b"] = _headline(model, cmp.result_b)
    summary = {"command": "compare", "inputs": dict(_inputs(args, model), risk_a=args.risk_a,
                                                    risk_b=args.risk_b),
               "verdicts": [r.to_dict() for r in reps], "headline_values": headline}
    return emit(args, summary)


ORACLE_RISKS = ("expectation", "cvar:0.5", "mean-cvar:0.5,0.3", "mean-semideviation:0.5")


def oracle_sweep(seeds: int, start: int = 0):
    """Solver versus exhaustive enumeration on small random models.

    Returns ``(checked, mismatches)`` with one mismatch record per failure.
    """
    mismatches = []
    checked = 0
    for seed in range(start, start + seeds):
        rng = np.random.default_rng(seed)
        n, T = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        for text in ORACLE_RISKS:
            model = random_tabular_model(seed, n, T, RiskSpec.parse(text))
            best, _ = enumerate_policies(model)
            got = solve_dp(model).values[0]
            err = float(np.abs(best - got).max())
            checked += 1
            if err > TOL:
                mismatches.append({"seed": seed, "risk": text, "states": n, "horizon": T,
                                   "max_error": err})
    return checked, mismatches


def cmd_oracle_verify(args) -> int:
    checked, bad = oracle_sweep(args.seeds, args.seed or 0)
    rep = (StructureReport("oracle_agreement", Verdict.VIOLATED, bad[0]) if bad
           else StructureReport("oracle_agreement", Verdict.HOLDS, None, f"{checked} instances"))
    summary = {"command": "oracle-verify", "inputs": {"seeds": args.seeds, "seed": args.seed},
               "verdicts": [rep.to_dict()],
               "headline_values": {"instances": checked, "mismatches": len(bad)}}
    return emit(args, summary)


# -- argument parsing ----------------------------------------------------------

def _model_args(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--model", metavar="FILE", help="JSON model file")
    src.add_argument("--builtin", metavar="NAME", choices=sorted(catalog.BUILTINS),
                     help="builtin model: %(choices)s")
    p.add_argument("--params", nargs="*", metavar="K=V", default=[],
                   help="builtin parameters, e.g. r=0.05 T=6")
    p.add_argument("--risk", metavar="SPEC",
                   help="risk override: kind[:params], ';'-separated for per-epoch specs")


def _output_args(p):
    p.add_argument("--out", metavar="DIR", help="write summary.json (and CSV tables) here")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="csv: tables as CSV files next to summary.json; json: tables embedded")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="riskstop",
                                 description="Risk-averse optimal stopping on finite grids.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the stopping problem and emit tables")
    _model_args(p)
    _output_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", help="solve and run structure checks")
    _model_args(p)
    _output_args(p)
    p.add_argument("--check", metavar="LIST",
                   help=f"comma-separated subset of: {', '.join(CHECKS)} (or 'all')")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("counterexamples", help="tower-property and subadditivity scenarios")
    _output_args(p)
    p.set_defaults(func=cmd_counterexamples)

    p = sub.add_parser("example", help="solve a worked example and run its checks")
    p.add_argument("--name", required=True, choices=sorted(EXAMPLE_CHECKS))
    p.add_argument("--params", nargs="*", metavar="K=V", default=[])
    p.add_argument("--risk", metavar="SPEC")
    p.add_argument("--check", metavar="LIST")
    _output_args(p)
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("compare", help="compare two risk mappings on one model")
    _model_args(p)
    p.add_argument("--risk-a", required=True, metavar="SPEC")
    p.add_argument("--risk-b", required=True, metavar="SPEC")
    _output_args(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("oracle-verify", help="solver versus brute-force enumeration")
    p.add_argument("--seeds", type=int, default=100)
    _output_args(p)
    p.set_defaults(func=cmd_oracle_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RiskStopError as exc:
        print(f"riskstop: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
