"""Vector-valued kernel ridge regression with a diagonal operator-valued kernel.

With the kernel Gamma(U, U') = S(U, U') * I the m output components decouple
into independent scalar regressions that share one Gram matrix, so a single
Cholesky factorization of S(U, U) + gamma*I serves all coefficient columns;
this is the dominant cost saver of the whole pipeline. The same factorization
backs prediction, Gaussian-process posterior variance, the log marginal
likelihood, and the RKHS norm of the fitted map.

Hyperparameters are tuned by grid search, either over K-fold cross-validation
loss or the log marginal likelihood; they are shared across all output
components.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import FactorizationError
from .kernels import ScalarKernel, gram, gram_diag

log = logging.getLogger(__name__)

DEFAULT_GAMMA_FACTOR = 1e-8  # fallback ridge = 1e-8 * mean(diag Gram) when gamma=0 fails


@dataclass(frozen=True)
class TrainedRegressor:
    """Fitted ridge regressor: inputs, targets, ridge, Gram factor, coefficients."""

    kernel: ScalarKernel
    inputs: np.ndarray        # (N, n)
    targets: np.ndarray       # (N, m)
    gamma: float
    coef: np.ndarray          # (N, m), solves (S(U,U) + gamma I) coef = targets
    factor: tuple = field(repr=False, compare=False, default=None)

    @property
    def n_train(self) -> int:
        return self.inputs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def output_dim(self) -> int:
        return self.targets.shape[1]


def _as_matrix(A, name: str) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.shape[0] == 0:
        raise ValueError(f"{name} must be a nonempty 2-d matrix")
    if not np.isfinite(A).all():
        raise ValueError(f"{name} contains non-finite entries")
    return A


def fit(kernel: ScalarKernel, inputs, targets, gamma: float = 0.0) -> TrainedRegressor:
    """Fit the regressor by factorizing S(U, U) + gamma*I once.

    If the user passes gamma=0 and the factorization fails, a default ridge of
    1e-8 * mean(diag Gram) is applied and reported through logging, never
    silently. An explicitly positive gamma that still fails raises
    FactorizationError advising a larger value.
    """
    U = _as_matrix(inputs, "inputs")
    V = _as_matrix(targets, "targets")
    if U.shape[0] != V.shape[0]:
        raise ValueError(f"inputs have {U.shape[0]} rows but targets have {V.shape[0]}")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    G = gram(kernel, U)
    eye = np.eye(G.shape[0])
    try:
        factor = cho_factor(G + gamma * eye, lower=True)
    except LinAlgError:
        if gamma == 0.0:
            fallback = DEFAULT_GAMMA_FACTOR * float(np.mean(np.diag(G)))
            log.warning(
                "Gram factorization failed at gamma=0; retrying with default gamma=%.3e",
                fallback,
            )
            try:
                factor = cho_factor(G + fallback * eye, lower=True)
                gamma = fallback
            except LinAlgError as exc:
                raise FactorizationError(
                    f"Gram factorization failed even at gamma={fallback:.3e}; "
                    "increase gamma"
                ) from exc
        else:
            raise FactorizationError(
                f"Gram factorization failed at gamma={gamma:.3e}; increase gamma"
            ) from None
    # C-order everything so persisted and in-memory models take identical BLAS
    # paths (memory order changes matmul results at ULP level)
    factor = (np.ascontiguousarray(factor[0]), factor[1])
    coef = np.ascontiguousarray(cho_solve(factor, V))
    return TrainedRegressor(
        kernel=kernel, inputs=U, targets=V, gamma=float(gamma), coef=coef, factor=factor
    )


def predict(model: TrainedRegressor, U) -> np.ndarray:
    """Predict S(U, inputs) @ coef; a single n-vector gives an m-vector, an
    (B, n) batch gives (B, m)."""
    U = np.asarray(U, dtype=float)
    single = U.ndim == 1
    U2 = U[None, :] if single else U
    if U2.shape[1] != model.input_dim:
        raise ValueError(f"query dimension {U2.shape[1]} != trained dimension {model.input_dim}")
    out = gram(model.kernel, U2, model.inputs) @ model.coef
    return out[0] if single else out


def posterior_variance(model: TrainedRegressor, U):
    """Per-component conditional variance s(U, U) - s(U, D)(S + gamma I)^-1 s(D, U).

    Under the diagonal operator-valued kernel this single scalar is the
    posterior variance of every output component. A single query returns a
    float; a batch returns a vector.
    """
    U = np.asarray(U, dtype=float)
    single = U.ndim == 1
    U2 = U[None, :] if single else U
    if U2.shape[1] != model.input_dim:
        raise ValueError(f"query dimension {U2.shape[1]} != trained dimension {model.input_dim}")
    k_cross = gram(model.kernel, U2, model.inputs)
    solved = cho_solve(model.factor, k_cross.T)
    prior = gram_diag(model.kernel, U2)
    var = prior - np.einsum("ij,ji->i", k_cross, solved)
    return float(var[0]) if single else var


def log_marginal_likelihood(kernel: ScalarKernel, inputs, targets, gamma: float = 0.0) -> float:
    """Gaussian-process evidence summed over the decoupled output components.

    Returns sum_j [ -1/2 V_j^T (S + gamma I)^-1 V_j ] - (m/2) logdet(S + gamma I)
    - (N m / 2) log(2 pi), all columns sharing one factorization.
    """
    U = _as_matrix(inputs, "inputs")
    V = _as_matrix(targets, "targets")
    if U.shape[0] != V.shape[0]:
        raise ValueError("inputs and targets row counts differ")
    G = gram(kernel, U) + gamma * np.eye(U.shape[0])
    try:
        factor = cho_factor(G, lower=True)
    except LinAlgError as exc:
        raise FactorizationError(
            f"Gram factorization failed at gamma={gamma:.3e}; increase gamma"
        ) from exc
    alpha = cho_solve(factor, V)
    n, m = V.shape
    data_fit = -0.5 * float(np.sum(V * alpha))
    logdet = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    return data_fit - 0.5 * m * logdet - 0.5 * n * m * np.log(2.0 * np.pi)


def rkhs_norm_squared(model: TrainedRegressor) -> float:
    """Squared RKHS norm of the fitted map: trace(V^T coef) = sum_j V_j^T (S+gamma I)^-1 V_j."""
    return float(np.sum(model.targets * model.coef))


@dataclass(frozen=True)
class TuningSpec:
    """Grid-search settings over kernel hyperparameters and gamma.

    Each grid entry is a kernel config dict (see ScalarKernel.from_config)
    optionally carrying a "gamma" key. ``objective`` is "cv" (minimize mean
    held-out relative error over contiguous folds of a seeded shuffle) or
    "lml" (maximize log marginal likelihood).
    """

    grid: tuple
    objective: str = "lml"
    folds: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.grid) == 0:
            raise ValueError("tuning grid must be nonempty")
        if self.objective not in ("cv", "lml"):
            raise ValueError(f"objective must be 'cv' or 'lml', got {self.objective!r}")
        if self.objective == "cv" and self.folds < 2:
            raise ValueError("cross-validation needs folds >= 2")
        object.__setattr__(self, "grid", tuple(dict(entry) for entry in self.grid))


def _entry_kernel_gamma(entry: dict, default_family: str | None) -> tuple[ScalarKernel, float]:
    entry = dict(entry)
    gamma = float(entry.pop("gamma", 0.0))
    if "family" not in entry and default_family is not None:
        entry["family"] = default_family
    return ScalarKernel.from_config(entry), gamma


def _cv_score(kernel: ScalarKernel, gamma: float, U, V, folds: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    order = rng.permutation(U.shape[0])
    blocks = np.array_split(order, folds)
    fold_means = []
    for b in blocks:
        mask = np.ones(U.shape[0], dtype=bool)
        mask[b] = False
        model = fit(kernel, U[mask], V[mask], gamma)
        pred = predict(model, U[b])
        truth = V[b]
        num = np.linalg.norm(pred - truth, axis=1)
        den = np.linalg.norm(truth, axis=1)
        den = np.where(den > 0, den, 1.0)
        fold_means.append(float(np.mean(num / den)))
    return float(np.mean(fold_means))


def tune(spec: TuningSpec, inputs, targets, default_family: str | None = None):
    """Evaluate every grid entry and return (best_params, best_value, report).

    Ties are broken by first occurrence in grid order; entries whose
    factorization fails are recorded in the report and skipped. If every entry
    fails, FactorizationError is raised.
    """
    U = _as_matrix(inputs, "inputs")
    V = _as_matrix(targets, "targets")
    if spec.objective == "cv" and spec.folds > U.shape[0]:
        raise ValueError(f"folds={spec.folds} exceeds sample count {U.shape[0]}")
    report = []
    best_idx = None
    best_value = None
    for i, entry in enumerate(spec.grid):
        try:
            kernel, gamma = _entry_kernel_gamma(entry, default_family)
            if spec.objective == "lml":
                value = log_marginal_likelihood(kernel, U, V, gamma)
            else:
                value = _cv_score(kernel, gamma, U, V, spec.folds, spec.seed)
        except FactorizationError as exc:
            report.append({"params": dict(entry), "status": "failed", "detail": str(exc)})
            continue
        report.append({"params": dict(entry), "status": "ok", "objective": value})
        better = (
            best_value is None
            or (spec.objective == "lml" and value > best_value)
            or (spec.objective == "cv" and value < best_value)
        )
        if better:
            best_idx, best_value = i, value
    if best_idx is None:
        raise FactorizationError("every tuning grid entry failed to factorize")
    return dict(spec.grid[best_idx]), best_value, report
