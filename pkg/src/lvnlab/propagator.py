"""Free evolution ``exp(it(Lap_x - Lap_y))`` on a periodic box.

:func:`propagate` is exact on the lattice (pointwise Fourier multiplier).
:func:`propagate_kernel` is an independent route through the free-space
Schrodinger kernel, integrated by the trapezoid rule over the box; it is
meant as an oracle on coarse grids and for data that stays away from the
box boundary.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .lattice import BipartiteField, GridSpec


def propagate(f: BipartiteField, t: float) -> BipartiteField:
    t = float(t)
    if not np.isfinite(t):
        raise ValueError(f"propagation time must be finite, got {t}")
    if t == 0.0:
        return f
    grid = f.grid
    coeffs = sfft.fftn(f.values, norm="ortho")
    coeffs *= np.exp(-1j * t * grid.symbol)
    return BipartiteField(grid, sfft.ifftn(coeffs, norm="ortho"))


def schrodinger_kernel(x, t: float, n: int = 1) -> np.ndarray:
    """``K_t(x) = (4 pi i t)^(-n/2) exp(i |x|^2 / 4t)``, principal branch.

    ``x`` holds ``|x|`` (or a signed 1D coordinate); only ``x**2`` is used.
    """
    if t == 0:
        raise ValueError("Schrodinger kernel is singular at t = 0")
    x = np.asarray(x, dtype=float)
    pref = (4.0 * np.pi * abs(t)) ** (-n / 2) * np.exp(-1j * np.pi * n * np.sign(t) / 4)
    return pref * np.exp(1j * x**2 / (4.0 * t))


@lru_cache(maxsize=32)
def _interp_matrix(N: int, m: int) -> np.ndarray:
    """Trigonometric interpolation from N to m*N periodic samples."""
    if m == 1:
        out = np.eye(N, dtype=complex)
        out.flags.writeable = False
        return out
    coeffs = np.fft.fft(np.eye(N), axis=0)
    padded = np.zeros((m * N, N), dtype=complex)
    half = N // 2
    padded[:half] = coeffs[:half]
    padded[m * N - half + 1 :] = coeffs[half + 1 :]
    # split the Nyquist row so the interpolant stays real for real data
    padded[half] = coeffs[half] / 2
    padded[m * N - half] = coeffs[half] / 2
    out = np.fft.ifft(padded, axis=0) * m
    out.flags.writeable = False
    return out


def kernel_oversampling(grid: GridSpec, t: float) -> int:
    """Refinement factor resolving the kernel chirp across the whole box.

    The chirp ``exp(i(x - x')^2 / 4t)`` reaches local frequency ``L/|t|``;
    the quadrature nodes must sample it below Nyquist.
    """
    need = grid.half_length * grid.spacing / (np.pi * abs(t))
    m = 1
    while m < need:
        m *= 2
    return m


def kernel_axis_operator(grid: GridSpec, t: float, oversample: int | None = None) -> np.ndarray:
    """N x N matrix of the 1D kernel convolution ``g -> K_t * g`` on the box.

    The trapezoid rule runs on an ``oversample``-times finer node set, with
    the input carried there by trigonometric interpolation.
    """
    t = float(t)
    if t == 0.0:
        raise ValueError("kernel quadrature needs t != 0; use propagate for t = 0")
    m = kernel_oversampling(grid, t) if oversample is None else int(oversample)
    N, L, h = grid.points_per_axis, grid.half_length, grid.spacing
    x = grid.coords
    fine = -L + (h / m) * np.arange(m * N)
    K = schrodinger_kernel(x[:, None] - fine[None, :], t, n=1) * (h / m)
    return K @ _interp_matrix(N, m)


def apply_axis_operators(values: np.ndarray, ops) -> np.ndarray:
    """Apply one matrix per axis: ``out = ops[0] (x) ops[1] (x) ... values``."""
    out = values
    for axis, op in enumerate(ops):
        out = np.moveaxis(np.tensordot(op, out, axes=([1], [axis])), 0, axis)
    return out


def propagate_kernel(f: BipartiteField, t: float, oversample: int | None = None) -> BipartiteField:
    """Evolve by direct quadrature of ``K_{-t} *_y (K_t *_x f)``."""
    t = float(t)
    if t == 0.0:
        raise ValueError("kernel quadrature needs t != 0; use propagate for t = 0")
    grid = f.grid
    fwd = kernel_axis_operator(grid, t, oversample)
    bwd = kernel_axis_operator(grid, -t, oversample)
    ops = [fwd] * grid.n + [bwd] * grid.n
    return BipartiteField(grid, apply_axis_operators(f.values, ops))


def rescale(f: BipartiteField, lam: float) -> BipartiteField:
    """``f_lam(x, y) = f(lam x, lam y)`` on the box shrunk by ``lam``.

    The node count is kept, so the sample array is carried over unchanged.
    """
    if not lam > 0:
        raise ValueError(f"scaling factor must be positive, got {lam}")
    return BipartiteField(f.grid.rescaled(float(lam)), f.values)
