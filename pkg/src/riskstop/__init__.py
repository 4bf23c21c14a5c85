"""Finite-horizon optimal stopping under nested coherent risk measures."""
from .errors import (BudgetExceededError, InvalidDistributionError, InvalidKernelError,
                     InvalidSpecError, ModelFileError, MonotoneDeclarationError, RiskStopError,
                     UnsupportedOrderError)
from .risk import (Dominance, FiniteDistribution, OrderSpec, RiskKind, RiskSpec, axiom_probe,
                   comonotone_pair_check, cvar, cvar_minimal_element, cvar_oracle,
                   envelope_maximize, evaluate_risk, fosd_compare)
from .model import (CostModel, SharedShockDynamics, StateGrid, StoppingModel, TransitionKernel,
                    build_shared_shock_kernel, build_tabular_kernel, make_arf_model,
                    make_asset_sale_model, make_deadline_sale_model, random_comonotone_model,
                    random_monotone_model, random_tabular_model)
from .counterexamples import make_counterexamples, subadditivity_report, tower_report
from .solver import (PolicyTables, SolveResult, compare_risk_aversion, evaluate_policy,
                     one_step_lookahead_policy, risk_neutral_equivalent, solve_dp)
from .oracle import EnumerationBudget, enumerate_policies, nested_risk_tree
from .structure import StructureReport, ThresholdTables, Verdict
from .modelio import load_model, save_model

__version__ = "0.1.0"
