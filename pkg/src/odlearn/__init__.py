"""odlearn: kernel / Gaussian-process operator learning between function spaces.

Learn maps between function spaces from sampled input/output pairs by
composing pointwise measurements, vector-valued kernel ridge regression with a
diagonal operator-valued kernel, and optimal-recovery interpolation back to
functions; with Gaussian-process uncertainty quantification, norm-equalizing
preconditioners, PCA preprocessing, synthetic PDE benchmark generators, and a
cost-accuracy benchmark CLI.
"""

from .errors import (
    DatasetFormatError,
    FactorizationError,
    OdlearnError,
    SolverError,
    UsageError,
)
from .kernels import ScalarKernel, eval_kernel, gram, gram_diag
from .metrics import ErrorReport, FlopsReport, count_inference_flops, relative_l2
from .operator import (
    OperatorModel,
    apply,
    apply_batch,
    apply_mesh_invariant,
    apply_with_uq,
    error_bound,
    fit_operator,
    fit_operator_from_features,
    load_model,
    prepare_features,
    save_model,
)
from .preprocess import PcaProjector, pca_fit, project, reconstruct
from .recovery import (
    FunctionSamples,
    MeasurementOperator,
    RecoveryMap,
    cholesky_preconditioner,
    fill_distance,
    measure,
    recover,
    recovery_weights,
)
from .regression import (
    TrainedRegressor,
    TuningSpec,
    fit,
    log_marginal_likelihood,
    posterior_variance,
    predict,
    rkhs_norm_squared,
    tune,
)

__version__ = "0.1.0"

__all__ = [
    "DatasetFormatError",
    "ErrorReport",
    "FactorizationError",
    "FlopsReport",
    "FunctionSamples",
    "MeasurementOperator",
    "OdlearnError",
    "OperatorModel",
    "PcaProjector",
    "RecoveryMap",
    "ScalarKernel",
    "SolverError",
    "TrainedRegressor",
    "TuningSpec",
    "UsageError",
    "apply",
    "apply_batch",
    "apply_mesh_invariant",
    "apply_with_uq",
    "cholesky_preconditioner",
    "count_inference_flops",
    "error_bound",
    "eval_kernel",
    "fill_distance",
    "fit",
    "fit_operator",
    "fit_operator_from_features",
    "gram",
    "gram_diag",
    "load_model",
    "log_marginal_likelihood",
    "measure",
    "pca_fit",
    "posterior_variance",
    "predict",
    "prepare_features",
    "project",
    "recover",
    "recovery_weights",
    "reconstruct",
    "relative_l2",
    "rkhs_norm_squared",
    "save_model",
    "tune",
]
