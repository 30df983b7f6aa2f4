"""Linear pointwise measurements and optimal-recovery interpolation.

A measurement operator turns a sampled function into the Euclidean vector
``L @ u(X)`` where X are collocation points and L an invertible preconditioner
(identity by default). A recovery map inverts that: given a measurement vector
it returns the minimum-RKHS-norm interpolant

    u(x) = k(x, X) G^-1 L^-1 U,      G = k(X, X) + nugget * I,

so that measuring the recovered function gives back U. The module also
provides the norm-equalizing preconditioner (``cholesky_preconditioner``) and
fill-distance computation.

Recovery maps are immutable after construction: the regularized kernel matrix
is factorized once and reused for every query.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.spatial.distance import cdist

from .errors import FactorizationError
from .kernels import ScalarKernel, gram

NUGGET_FACTOR = 1e-10  # default nugget = 1e-10 * mean(diag Gram)


@dataclass(frozen=True)
class FunctionSamples:
    """A function known through its values on a finite grid of points."""

    grid: np.ndarray    # (n_points, dim)
    values: np.ndarray  # (n_points,)

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim == 1:
            grid = grid[:, None]
        values = np.asarray(self.values, dtype=float).ravel()
        if grid.ndim != 2 or grid.shape[0] == 0:
            raise ValueError("grid must be a nonempty (n_points, dim) array")
        if values.shape[0] != grid.shape[0]:
            raise ValueError(
                f"values length {values.shape[0]} != grid length {grid.shape[0]}"
            )
        if not (np.isfinite(grid).all() and np.isfinite(values).all()):
            raise ValueError("grid and values must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class MeasurementOperator:
    """Collocation points plus an invertible preconditioner: phi(u) = L @ u(X).

    ``preconditioner=None`` means the identity. The condition number of L is
    recorded at construction as a diagnostic (``condition``).
    """

    points: np.ndarray
    preconditioner: np.ndarray | None = None
    label: str = ""
    condition: float = field(init=False, repr=False, compare=False, default=1.0)

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("points must be a nonempty (n, dim) array")
        if not np.isfinite(pts).all():
            raise ValueError("points must be finite")
        n = pts.shape[0]
        if n > 1:
            d = cdist(pts, pts)
            d[np.diag_indices(n)] = np.inf
            if not (d.min() > 0):
                raise ValueError("collocation points must be pairwise distinct")
        object.__setattr__(self, "points", pts)
        if self.preconditioner is not None:
            L = np.asarray(self.preconditioner, dtype=float)
            if L.shape != (n, n):
                raise ValueError(f"preconditioner must be {n}x{n}, got {L.shape}")
            object.__setattr__(self, "preconditioner", L)
            object.__setattr__(self, "condition", float(np.linalg.cond(L)))

    @property
    def size(self) -> int:
        return self.points.shape[0]


def measure(op: MeasurementOperator, f: FunctionSamples) -> np.ndarray:
    """Apply the measurement operator: restrict f to op.points, then apply L.

    The function must supply values at exactly the operator's points (same
    order) or on a grid containing them with exact coordinate equality; no
    nearest-neighbor snapping is performed.
    """
    if f.grid.shape == op.points.shape and np.array_equal(f.grid, op.points):
        vals = f.values
    else:
        if f.grid.shape[1] != op.points.shape[1]:
            raise ValueError(
                f"grid dimension {f.grid.shape[1]} != measurement dimension {op.points.shape[1]}"
            )
        index = {row.tobytes(): i for i, row in enumerate(f.grid)}
        sel = np.empty(op.size, dtype=int)
        for i, row in enumerate(op.points):
            j = index.get(row.tobytes())
            if j is None:
                raise ValueError(f"function grid has no value at measurement point {row.tolist()}")
            sel[i] = j
        vals = f.values[sel]
    if op.preconditioner is None:
        return vals.copy()
    return op.preconditioner @ vals


def _default_nugget(gram_matrix: np.ndarray) -> float:
    return NUGGET_FACTOR * float(np.mean(np.diag(gram_matrix)))


@dataclass(frozen=True)
class RecoveryMap:
    """Optimal-recovery interpolant factory for one kernel/measurement pair.

    The kernel matrix on the measurement points is assembled and
    Cholesky-factorized once at construction; ``recover`` reuses the factor
    for all queries, so concurrent calls are safe.
    """

    kernel: ScalarKernel
    measurement: MeasurementOperator
    nugget: float | None = None
    gram_matrix: np.ndarray = field(init=False, repr=False, compare=False)
    _factor: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        G = gram(self.kernel, self.measurement.points)
        nugget = self.nugget if self.nugget is not None else _default_nugget(G)
        if nugget < 0:
            raise ValueError("nugget must be nonnegative")
        object.__setattr__(self, "nugget", float(nugget))
        object.__setattr__(self, "gram_matrix", G)
        A = G + nugget * np.eye(G.shape[0])
        try:
            factor = cho_factor(A, lower=True)
        except LinAlgError as exc:
            raise FactorizationError(
                "kernel matrix is numerically singular even after adding "
                f"nugget={nugget:.3e}; increase the nugget"
            ) from exc
        object.__setattr__(self, "_factor", factor)

    @property
    def size(self) -> int:
        return self.measurement.size

    def coefficients(self, U) -> np.ndarray:
        """Representer coefficients c with recover(U) = sum_i c_i k(., X_i)."""
        U = np.asarray(U, dtype=float).ravel()
        if U.size != self.size:
            raise ValueError(f"measurement vector has length {U.size}, expected {self.size}")
        L = self.measurement.preconditioner
        w = U if L is None else np.linalg.solve(L, U)
        return cho_solve(self._factor, w)


def recover(rmap: RecoveryMap, U, query_points) -> FunctionSamples:
    """Evaluate the minimum-norm interpolant of the measurement vector U.

    Raises FactorizationError at map construction (not here) if the kernel
    matrix cannot be factorized; measuring the result returns U up to the
    nugget-level error.
    """
    c = rmap.coefficients(U)
    qp = np.asarray(query_points, dtype=float)
    if qp.ndim == 1:
        qp = qp[:, None]
    values = gram(rmap.kernel, qp, rmap.measurement.points) @ c
    return FunctionSamples(qp, values)


def recovery_weights(rmap: RecoveryMap, query_points) -> np.ndarray:
    """Matrix W with recover(U)(query_points) = W @ U (rows indexed by query point)."""
    qp = np.asarray(query_points, dtype=float)
    if qp.ndim == 1:
        qp = qp[:, None]
    kq = gram(rmap.kernel, qp, rmap.measurement.points)
    W = cho_solve(rmap._factor, kq.T).T
    L = rmap.measurement.preconditioner
    if L is not None:
        W = np.linalg.solve(L.T, W.T).T
    return W


def cholesky_preconditioner(kernel: ScalarKernel, points, nugget: float | None = None) -> np.ndarray:
    """Norm-equalizing preconditioner L with L @ L.T = (Gram + nugget I)^-1.

    The returned factor is the symmetric inverse principal square root of the
    regularized kernel matrix. Symmetry makes the factor satisfy
    L.T @ L = G^-1 as well, so preconditioned measurement vectors carry the
    RKHS geometry: |L u(X)|^2 = u(X)^T G^-1 u(X), and measurement/recovery
    become norm-one maps on the span of the representers.
    """
    G = gram(kernel, points)
    if nugget is None:
        nugget = _default_nugget(G)
    A = G + nugget * np.eye(G.shape[0])
    w, V = np.linalg.eigh(A)
    if w.min() <= 0:
        raise FactorizationError(
            f"kernel matrix has nonpositive eigenvalue {w.min():.3e} after "
            f"nugget={nugget:.3e}; increase the nugget"
        )
    L = (V * (1.0 / np.sqrt(w))) @ V.T
    return 0.5 * (L + L.T)


def fill_distance(sample, domain_probe) -> float:
    """max over probe points of the distance to the nearest sample point."""
    S = np.asarray(sample, dtype=float)
    P = np.asarray(domain_probe, dtype=float)
    if S.ndim == 1:
        S = S[:, None]
    if P.ndim == 1:
        P = P[:, None]
    if S.shape[0] == 0 or P.shape[0] == 0:
        raise ValueError("sample and probe must be nonempty")
    if S.shape[1] != P.shape[1]:
        raise ValueError("sample and probe dimensions differ")
    return float(cdist(P, S).min(axis=1).max())
