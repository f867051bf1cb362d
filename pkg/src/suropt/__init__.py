"""Multiobjective optimization by stepwise reduction of excursion volumes.

Kriging emulators per objective, closed-form expected-excursion-volume
sampling criteria backed by the bivariate normal CDF, Monte-Carlo oracles for
every closed form, and a benchmark harness with quality indicators.
"""

from .gaussians import bvn_cdf, norm_cdf, norm_pdf, std_normal
from .gp import (Design, DuplicatePointError, GPPosterior, HyperparameterBounds,
                 KernelSpec, ModelFitError, TrendBasis, estimate_hyperparameters,
                 fit, kernel_eval, kernel_matrix, sample_paths, update_moments)
from .pairprob import (PairGeometry, PairLink, h_prob, link_coefficients,
                       pair_geometry, q_prob, r_prob)
from .pareto import (Cell, ParetoState, Tessellation, build_tessellation,
                     cell_probability, dominates, excursion_volume,
                     excursion_volume_single, extract_front,
                     nondominated_probability)
from .criteria import (CriterionValue, IntegrationGrid, SingleObjectiveState,
                       eev_multi, eev_multi_fast2d, eev_single,
                       expected_improvement, p_ij, pair_cell_terms)
from .oracle import OracleEstimate, mc_eev, mc_pair_expectations
from .loop import (Problem, RunAborted, RunConfig, RunTrace, Seeds,
                   initial_design, run, select_next)
from .problems import ProblemSpec, gen_problem, load_problem, make_problem, save_problem
from .indicators import epsilon_indicator, hypervolume, r2_indicator, simplex_weights
from .reporting import (IndicatorReport, indicator_report, read_trace,
                        run_benchmark, write_indicators, write_trace)

__version__ = "0.1.0"
