"""Optimal transport on the line for the distance cost.

Exact decomposition of optimal plans into moving components, the Kellerer
product-form plan, and entropic (Sinkhorn) approximations of it.
"""

from .couplings import (KellererComponent, NotConverged, OrderViolation, Verdict, Witness,
                        check_optimal_crossings, cost, entropy_form, is_strongly_multiplicative_on,
                        is_weakly_multiplicative, kellerer_component, kellerer_parts,
                        kellerer_plan, mix, monotone_coupling, relative_entropy, w1_oracle)
from .decomposition import (LineDecomposition, MarginalComponents, MassMismatch,
                            PlanComponents, barrier_set, decomposition_report,
                            four_set_union, line_components, marginal_components,
                            reassemble, split_plan)
from .entropic import (SinkhornResult, SweepReport, is_eps_cyclically_invariant,
                       sinkhorn_solve, sweep_to_limit, tv_distance, verify_eps_invariance)
from .measure import (INF, MINUS, PLUS, ZERO, Interval, IntervalUnion, Measure, atomic, cdf,
                      common_part, dirac, discretize, measure_from_json, measure_to_json,
                      quantile, restrict, uniform)
from .orders import OrderVerdict, leq_F, leq_G, leq_st
from .plan import FloatPlan, TransportPlan, read_plan_csv, write_plan_csv

__version__ = "0.1.0"
