"""GBS-based estimators for Gaussian expectation problems."""

from .advantage import (AdvantageConfig, AdvantageResult, TrialRecord,
                        advantage_trial, efficiency_ratio_summary,
                        estimate_percentage, sweep)
from .errors import (BudgetExceededError, ConfigError, GbspeError,
                     IllPosedError, InternalInconsistencyError)
from .estimators import (AccuracySpec, HybridPlan, SlicePlan, SliceSpec,
                         VarianceReport, empirical_mse, gbsi_estimate,
                         gbsp_estimate, guaranteed_sample_size, hybrid_plan,
                         mc_estimate_haf, mc_estimate_hafsq, mu_haf, mu_hafsq,
                         variance_gbsi, variance_gbsp, variance_mc_haf,
                         variance_mc_hafsq, variance_report)
from .gbs import (DegreeSampler, GbsProgram, SampleTally, build_degree_sampler,
                  degree_mass_closed_form, draw_tally, mean_photon_number,
                  normalization, solve_scaling, tune_program)
from .hafnian import (HafnianCache, hafnian_dense, hafnian_multiindex,
                      hafnian_reference, hafnian_sign)
from .linalg import (EigenDecomposition, ProblemInstance, ProblemShape,
                     eigendecompose, sample_haar_orthogonal,
                     sample_problem_instance, sample_unit_sphere,
                     vandermonde_abs)
from .multiindex import (count_sigma, degree, enumerate_degree, format_index,
                         multiindex_factorial, parse_index)
from .rng import derive_rng

__version__ = "0.1.0"
