"""PCA dimensionality reduction of measurement vectors.

Fitting centers the sample matrix by its column mean, takes a singular value
decomposition, and keeps the minimal number of components whose squared
singular values reach the requested variance fraction. Variance accounting
uses squared singular values of the centered matrix directly (the N-1 divisor
cancels out of fractions).

Sign convention: each basis column is flipped so its largest-magnitude entry
is positive, which makes serialized projectors reproducible. When singular
values tie, the first-computed order is kept; such degenerate subspaces are
not deterministic across BLAS implementations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FRACTION_SLACK = 1e-12  # absorb roundoff exactly at the threshold


@dataclass(frozen=True)
class PcaProjector:
    """Affine projector onto the leading principal subspace of a sample set."""

    mean: np.ndarray             # (d,)
    basis: np.ndarray            # (d, k), orthonormal columns
    singular_values: np.ndarray  # (k,), nonincreasing
    retained_fraction: float     # requested fraction in (0, 1]
    achieved_fraction: float     # variance fraction actually captured by k components

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def k(self) -> int:
        return self.basis.shape[1]


def pca_fit(samples, retained_fraction: float) -> PcaProjector:
    """Fit a PCA projector keeping the minimal k that preserves the variance fraction."""
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("samples must be an (N, d) matrix with N >= 2")
    if not (0.0 < retained_fraction <= 1.0):
        raise ValueError("retained_fraction must be in (0, 1]")
    mean = X.mean(axis=0)
    centered = X - mean
    _, s, Vt = np.linalg.svd(centered, full_matrices=False)
    total = float((s * s).sum())
    if total <= 0.0 or s[0] == 0.0:
        raise ValueError("samples are constant: zero total variance, nothing to project")
    # numerical rank: drop directions at roundoff level
    rank = int((s > s[0] * max(X.shape) * np.finfo(float).eps).sum())
    cum = np.cumsum(s[:rank] ** 2) / total
    k = int(np.searchsorted(cum, retained_fraction - FRACTION_SLACK) + 1)
    k = min(k, rank)
    basis = Vt[:k].T.copy()
    flip = np.sign(basis[np.abs(basis).argmax(axis=0), np.arange(k)])
    flip[flip == 0] = 1.0
    basis *= flip
    return PcaProjector(
        mean=mean,
        basis=basis,
        singular_values=s[:k].copy(),
        retained_fraction=float(retained_fraction),
        achieved_fraction=float(cum[k - 1]),
    )


def project(p: PcaProjector, x) -> np.ndarray:
    """Coordinates of x in the principal subspace: basis.T @ (x - mean).

    Accepts a single d-vector or an (N, d) batch.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != p.dim:
        raise ValueError(f"expected vectors of dimension {p.dim}, got {x.shape[-1]}")
    return (x - p.mean) @ p.basis


def reconstruct(p: PcaProjector, z) -> np.ndarray:
    """Inverse of project on the subspace: mean + basis @ z."""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != p.k:
        raise ValueError(f"expected coefficient vectors of length {p.k}, got {z.shape[-1]}")
    return z @ p.basis.T + p.mean
