"""Generalized multilayer latent space models for directed networks.

Estimation by unfolding and fusion, sandwich-based asymptotic inference for
latent positions and layer connection matrices, layer-equality testing with
change-point scanning, and a reproducible simulation harness.
"""

from .errors import (BoundaryWarning, ConditioningError, ConvergenceError,
                     DimensionError, MlsmError, ParseError, RankDeficiencyError,
                     SelectionTieWarning, SupportError)
from .factor import FactorPair, FitConfig, fit_mode, normalize_pair, spectral_init, total_loglik
from .families import FamilySpec, loglik, mean_link, neg_hess, sample, score
from .inference import (LayerTestResult, SandwichCov, TestResult, changepoint_scan,
                        ci_position, core_variance, diff_test, gaussian_sigma0_hat,
                        layer_test, sandwich_col_u, sandwich_row_v)
from .pipeline import FitResult, estimate, fuse_core, scree_singular_values, select_columns
from .simulate import (AlignmentResult, ModelParams, align_signs, coverage_experiment,
                       gen_network, gen_params)
from .tensor import (CenteringOps, Tensor3, kron_rightmul, refold, tucker_linpred,
                     two_sided_center, unfold)
from .tensorio import read_tensor, save_fit, write_tensor

__version__ = "0.1.0"
