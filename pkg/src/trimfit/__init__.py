"""Trimmed regularized M-estimators.

Jointly fits a parameter and a set of per-sample inclusion weights so
that only the h best-fitting samples drive the estimate, which keeps
gross outliers from distorting it.  Ships sparse trimmed least squares,
a trimmed logistic lasso, a trimmed graphical lasso and trace-norm
trimmed multi-response regression, all solved by partial-minimization
proximal gradient descent, together with a brute-force subset oracle, a
simulation harness and bound calculators.
"""

from .data import Dataset
from .errors import (CliInputError, IncompatibleData, InvalidCounts, InvalidH,
                     InvalidTau, LineSearchFailed, NonPositiveCurvature,
                     NotPositiveDefinite, ShapeMismatch, TooManySubsets,
                     TrimfitError)
from .estimators import (CVPlan, EstimatorSpec, build_problem, cross_validate,
                         fit, lambda_path)
from .linalg import (cholesky_logdet, spectral_norm, svd_deterministic,
                     svd_soft_threshold, symmetrize)
from .losses import (make_loss, per_sample_loss, smooth_objective,
                     weighted_gradient, weighted_objective)
from .oracle import OracleResult, enumerate_global
from .regularizers import Regularizer, soft_threshold
from .simulate import (EstimatorRun, MetricsReport, ScenarioSpec, generate,
                       roc_auc, run_experiment, score)
from .solver import (FitResult, SolverConfig, check_local_minimum,
                     fit_alternate_min, fit_fixed_weights, fit_partial_min,
                     prox_gradient_residual)
from .theory import (ConditionReport, TheoryParams, check_logdet_curvature,
                     diagnose_conditions, gaussian_outlier_bound,
                     general_error_bounds, glasso_frobenius_bound,
                     glasso_lambda_choice, gradient_dual_norm,
                     lts_error_bounds, lts_lambda_choice,
                     sample_cov_deviation_rate)
from .trimming import TrimWeights, is_weight_optimal, solve_weights

__version__ = "0.1.0"
