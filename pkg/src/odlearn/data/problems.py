"""Synthetic dataset generators for the four benchmark transport/diffusion problems.

* advection1 -- random square waves transported by half a period (exact shift).
* advection2 -- sign-thresholded periodic Gaussian fields, same exact shift.
* burgers    -- viscous Burgers on the periodic unit interval, Fourier
  pseudo-spectral in space (conservative flux form, 2/3-rule dealiasing of the
  quadratic term) and explicit RK4 in time, integrated to t_final.
* darcy      -- 2D diffusion -div(a grad v) = 1 with piecewise-constant
  coefficient a in {3, 12} from a thresholded Neumann field, zero Dirichlet
  boundary, conservative 5-point finite differences with harmonic-mean face
  coefficients, direct sparse solves.

All generators are deterministic given (seed, counts, grid_size): sample i
draws from the substream (seed, i), train samples first, test samples after.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from ..errors import SolverError
from .container import Dataset
from .fields import GaussianFieldSpec, grid_points, sample_field_matrix, substream

BURGERS_CFL = 0.5        # advective time-step factor: dt <= 0.5 dx / max|w|
BURGERS_DIFFUSION = 0.25  # diffusive factor: dt <= 0.25 dx^2 / nu


def _periodic_grid(n: int) -> np.ndarray:
    return (np.arange(n) / n)[:, None]


def _half_shift(values: np.ndarray, n: int) -> np.ndarray:
    """Exact transport by half a period on an even uniform periodic grid."""
    if n % 2 != 0:
        raise ValueError("grid_size must be even for an exact half-period shift")
    return np.roll(values, n // 2, axis=-1)


# ---------------------------------------------------------------------------
# advection
# ---------------------------------------------------------------------------


def gen_advection1(count_train: int, count_test: int, grid_size: int = 40, seed: int = 0) -> Dataset:
    """Square waves h*1_[c-b/2, c+b/2] with (c, b, h) uniform on
    [0.3, 0.7] x [0.3, 0.6] x [1, 2]; outputs are the inputs shifted by 0.5."""
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    x = np.arange(grid_size) / grid_size
    total = count_train + count_test
    inputs = np.empty((total, grid_size))
    for i in range(total):
        rng = substream(seed, i)
        c = rng.uniform(0.3, 0.7)
        b = rng.uniform(0.3, 0.6)
        h = rng.uniform(1.0, 2.0)
        inputs[i] = np.where((x >= c - b / 2) & (x <= c + b / 2), h, 0.0)
    outputs = _half_shift(inputs, grid_size)
    grid = _periodic_grid(grid_size)
    return Dataset(
        name="advection1",
        input_grid=grid,
        output_grid=grid,
        train_inputs=inputs[:count_train],
        train_outputs=outputs[:count_train],
        test_inputs=inputs[count_train:],
        test_outputs=outputs[count_train:],
        seed=seed,
        provenance=(
            f"random square waves on a uniform periodic grid of {grid_size}; "
            "(c, b, h) ~ U([0.3,0.7] x [0.3,0.6] x [1,2]); outputs are the exact "
            "periodic transport by 0.5"
        ),
    )


def gen_advection2(count_train: int, count_test: int, grid_size: int = 200, seed: int = 0) -> Dataset:
    """Binarized Gaussian fields -1 + 2*1{field >= 0}; outputs shifted by 0.5."""
    spec = GaussianFieldSpec(boundary="periodic1d", grid_size=grid_size, scale=1.0, tau=3.0, exponent=2.0)
    _, fields = sample_field_matrix(spec, seed, count_train + count_test)
    inputs = np.where(fields >= 0.0, 1.0, -1.0)
    outputs = _half_shift(inputs, grid_size)
    grid = _periodic_grid(grid_size)
    return Dataset(
        name="advection2",
        input_grid=grid,
        output_grid=grid,
        train_inputs=inputs[:count_train],
        train_outputs=outputs[:count_train],
        test_inputs=inputs[count_train:],
        test_outputs=outputs[count_train:],
        seed=seed,
        provenance=(
            f"sign of a periodic Gaussian field with covariance (-Lap + 9 I)^-2 on "
            f"{grid_size} grid points, mapped to -1/+1; outputs are the exact periodic "
            "transport by 0.5"
        ),
    )


# ---------------------------------------------------------------------------
# viscous Burgers
# ---------------------------------------------------------------------------


def solve_burgers(
    u0,
    nu: float,
    t_final: float,
    dt_safety: float = 1.0,
    energy_trace: bool = False,
):
    """Integrate periodic viscous Burgers states to t_final.

    ``u0`` is one state or a (batch, n) matrix on the uniform periodic grid of
    the unit interval. The time step is re-evaluated each step as
    dt_safety * min(0.5 dx / max|w|, 0.25 dx^2 / nu) over the integrated
    batch (the diffusive bound binds for all realistic states). Returns the
    final states, or (states, energies) with the per-step l2 trace of the
    first sample when ``energy_trace`` is set.
    """
    u = np.atleast_2d(np.asarray(u0, dtype=float)).copy()
    n = u.shape[1]
    dx = 1.0 / n
    wavenum = 2.0 * np.pi * np.fft.rfftfreq(n, d=dx)
    keep = np.arange(wavenum.size) <= n // 3  # 2/3-rule mask for the quadratic flux
    damping = nu * wavenum * wavenum

    def rhs(w):
        what = np.fft.rfft(w, axis=1)
        flux = np.fft.rfft(0.5 * w * w, axis=1)
        flux[:, ~keep] = 0.0
        return np.fft.irfft(-1j * wavenum * flux - damping * what, n=n, axis=1)

    def check_finite(t):
        bad = np.flatnonzero(~np.isfinite(u).all(axis=1))
        if bad.size:
            raise SolverError(f"burgers solve blew up at t={t:.4f} for sample {int(bad[0])}")

    check_finite(0.0)
    energies = [float(np.linalg.norm(u[0]))] if energy_trace else None
    t = 0.0
    steps = 0
    while t < t_final:
        wmax = float(np.abs(u).max())
        dt = dt_safety * min(
            BURGERS_CFL * dx / max(wmax, np.finfo(float).tiny),
            BURGERS_DIFFUSION * dx * dx / nu,
        )
        dt = min(dt, t_final - t)
        if not dt > 0:
            check_finite(t)
            raise SolverError(f"burgers time step collapsed to {dt} at t={t:.4f}")
        k1 = rhs(u)
        k2 = rhs(u + 0.5 * dt * k1)
        k3 = rhs(u + 0.5 * dt * k2)
        k4 = rhs(u + dt * k3)
        u += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += dt
        steps += 1
        if energy_trace:
            energies.append(float(np.linalg.norm(u[0])))
        if steps % 50 == 0:
            check_finite(t)
    check_finite(t_final)
    if energy_trace:
        return u, np.asarray(energies)
    return u


def gen_burgers(
    count_train: int,
    count_test: int,
    grid_size: int = 128,
    nu: float = 0.1,
    t_final: float = 1.0,
    seed: int = 0,
) -> Dataset:
    """Initial conditions from the periodic field 625 (-Lap + 25 I)^-2, outputs
    the viscous Burgers solution at t_final."""
    if grid_size < 4 or grid_size & (grid_size - 1) != 0:
        raise ValueError("grid_size must be a power of two for the spectral solver")
    spec = GaussianFieldSpec(
        boundary="periodic1d", grid_size=grid_size, scale=625.0, tau=5.0, exponent=2.0
    )
    grid, inputs = sample_field_matrix(spec, seed, count_train + count_test)
    outputs = solve_burgers(inputs, nu=nu, t_final=t_final)
    return Dataset(
        name="burgers",
        input_grid=grid,
        output_grid=grid,
        train_inputs=inputs[:count_train],
        train_outputs=outputs[:count_train],
        test_inputs=inputs[count_train:],
        test_outputs=outputs[count_train:],
        seed=seed,
        provenance=(
            f"viscous Burgers, nu={nu}, solved to t={t_final} on {grid_size} periodic "
            "grid points by RK4 pseudo-spectral (conservative flux, 2/3 dealiasing); "
            "initial conditions from the periodic Gaussian field 625 (-Lap + 25 I)^-2"
        ),
    )


# ---------------------------------------------------------------------------
# Darcy flow
# ---------------------------------------------------------------------------


def solve_darcy(coefficient: np.ndarray) -> np.ndarray:
    """Solve -div(a grad v) = 1 on the unit square with v = 0 on the boundary.

    ``coefficient`` holds nodal values of a on a uniform (g, g) grid including
    the boundary. Face coefficients are harmonic means of the adjacent nodes;
    the 5-point scheme is an M-matrix, so the interior solution is positive.
    """
    a = np.asarray(coefficient, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 3:
        raise ValueError("coefficient must be a square nodal grid of size >= 3")
    if not (np.isfinite(a).all() and (a > 0).all()):
        raise SolverError("coefficient field must be positive and finite")
    g = a.shape[0]
    h = 1.0 / (g - 1)
    m = g - 2
    # harmonic means across x-faces (between rows i, i+1) and y-faces
    ax = 2.0 * a[1:, :] * a[:-1, :] / (a[1:, :] + a[:-1, :])  # (g-1, g)
    ay = 2.0 * a[:, 1:] * a[:, :-1] / (a[:, 1:] + a[:, :-1])  # (g, g-1)
    ii, jj = np.meshgrid(np.arange(1, g - 1), np.arange(1, g - 1), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    idx = (ii - 1) * m + (jj - 1)
    aE = ax[ii, jj]
    aW = ax[ii - 1, jj]
    aN = ay[ii, jj]
    aS = ay[ii, jj - 1]
    rows = [idx]
    cols = [idx]
    vals = [(aE + aW + aN + aS) / h**2]
    for face, di, dj in ((aE, 1, 0), (aW, -1, 0), (aN, 0, 1), (aS, 0, -1)):
        ni, nj = ii + di, jj + dj
        interior = (ni >= 1) & (ni <= g - 2) & (nj >= 1) & (nj <= g - 2)
        rows.append(idx[interior])
        cols.append((ni[interior] - 1) * m + (nj[interior] - 1))
        vals.append(-face[interior] / h**2)
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(m * m, m * m),
    )
    rhs = np.ones(m * m)
    v_int = spsolve(A, rhs)
    if not np.isfinite(v_int).all():
        raise SolverError("darcy sparse solve produced non-finite values")
    v = np.zeros((g, g))
    v[1:-1, 1:-1] = v_int.reshape(m, m)
    return v


def gen_darcy(count_train: int, count_test: int, grid_size: int = 29, seed: int = 0) -> Dataset:
    """Log-coefficient inputs from a thresholded Neumann field (positive -> 12,
    negative -> 3), outputs the Darcy pressure for the fixed source w = 1."""
    if grid_size < 5:
        raise ValueError("grid_size must be at least 5")
    spec = GaussianFieldSpec(
        boundary="neumann2d", grid_size=grid_size, scale=1.0, tau=3.0, exponent=2.0
    )
    grid = grid_points(spec)
    total = count_train + count_test
    _, fields = sample_field_matrix(spec, seed, total)
    coeff = np.where(fields >= 0.0, 12.0, 3.0)
    inputs = np.log(coeff)
    outputs = np.empty_like(inputs)
    for i in range(total):
        try:
            outputs[i] = solve_darcy(coeff[i].reshape(grid_size, grid_size)).ravel()
        except SolverError as exc:
            raise SolverError(f"darcy solve failed for sample {i}: {exc}") from exc
    return Dataset(
        name="darcy",
        input_grid=grid,
        output_grid=grid,
        train_inputs=inputs[:count_train],
        train_outputs=outputs[:count_train],
        test_inputs=inputs[count_train:],
        test_outputs=outputs[count_train:],
        seed=seed,
        provenance=(
            f"-div(exp(u) grad v) = w on the unit square at resolution {grid_size}x{grid_size}; "
            "exp(u) in {3, 12} from the sign of a Neumann Gaussian field with covariance "
            "(-Lap + 9 I)^-2; source fixed to w = 1 (a choice of this generator); inputs "
            "stored as u = log-coefficient; zero Dirichlet boundary; conservative 5-point "
            "scheme with harmonic-mean face coefficients"
        ),
    )


GENERATORS = {
    "advection1": gen_advection1,
    "advection2": gen_advection2,
    "burgers": gen_burgers,
    "darcy": gen_darcy,
}
