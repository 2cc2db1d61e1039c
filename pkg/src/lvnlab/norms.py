"""Mixed Lebesgue norms ``L^q_t L^r1_x L^r2_y`` by Riemann sums on the grid."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.fft as sfft

from .lattice import BipartiteField, GridSpec


def parse_exponent(value) -> float:
    """Accept a float, an int, or the strings ``"inf"``/``"infinity"``."""
    if isinstance(value, str):
        s = value.strip().lower()
        if s in ("inf", "infinity", "oo"):
            return math.inf
        value = float(s)
    value = float(value)
    if math.isnan(value) or value < 1:
        raise ValueError(f"Lebesgue exponent must lie in [1, inf], got {value}")
    return value


@dataclass(frozen=True)
class MixedNormSpec:
    r1: float
    r2: float

    def __post_init__(self):
        object.__setattr__(self, "r1", parse_exponent(self.r1))
        object.__setattr__(self, "r2", parse_exponent(self.r2))

    @property
    def label(self) -> str:
        return f"L^{_fmt(self.r1)}_x L^{_fmt(self.r2)}_y"


def _fmt(r: float) -> str:
    return "inf" if math.isinf(r) else f"{r:g}"


def lebesgue_norm(a: np.ndarray, r: float, axes: tuple[int, ...], weight: float) -> np.ndarray:
    """``(weight * sum |a|^r)^(1/r)`` over ``axes``; max when ``r`` is infinite.

    ``a`` must already be nonnegative. The sum is rescaled by the max so large
    exponents do not overflow.
    """
    if not axes:
        return a
    if math.isinf(r):
        return a.max(axis=axes)
    top = a.max(axis=axes, keepdims=True)
    safe = np.where(top > 0, top, 1.0)
    s = np.sum((a / safe) ** r, axis=axes)
    return np.squeeze(safe, axis=axes) * (weight * s) ** (1.0 / r)


def _mixed(a: np.ndarray, grid: GridSpec, spec: MixedNormSpec, lead: int = 0) -> np.ndarray:
    n, w = grid.n, grid.factor_weight
    y_axes = tuple(range(lead + n, lead + 2 * n))
    x_axes = tuple(range(lead, lead + n))
    inner = lebesgue_norm(a, spec.r2, y_axes, w)
    return lebesgue_norm(inner, spec.r1, x_axes, w)


def mixed_norm(f: BipartiteField, spec: MixedNormSpec) -> float:
    return float(_mixed(np.abs(f.values), f.grid, spec))


def y_gradient_magnitude(f: BipartiteField) -> np.ndarray:
    """Pointwise ``|grad_y f|``, differentiated spectrally along the y axes."""
    grid, n = f.grid, f.grid.n
    y_axes = tuple(range(n, 2 * n))
    coeffs = sfft.fftn(f.values, axes=y_axes)
    total = np.zeros(grid.shape)
    for a in y_axes:
        d = sfft.ifftn(coeffs * (1j * grid.axis_view(grid.wavenumbers, a)), axes=y_axes)
        total += np.abs(d) ** 2
    return np.sqrt(total)


def sobolev_y_norm(f: BipartiteField, r2, order: int, r1=2.0) -> float:
    """``L^r1_x W^{order, r2}_y`` norm with ``||g|| + ||grad g||`` inside.

    ``order == 0`` gives the plain mixed Lebesgue norm.
    """
    if order not in (0, 1):
        raise ValueError(f"Sobolev order must be 0 or 1, got {order}")
    spec = MixedNormSpec(r1, r2)
    grid, n, w = f.grid, f.grid.n, f.grid.factor_weight
    y_axes = tuple(range(n, 2 * n))
    per_x = lebesgue_norm(np.abs(f.values), spec.r2, y_axes, w)
    if order == 1:
        per_x = per_x + lebesgue_norm(y_gradient_magnitude(f), spec.r2, y_axes, w)
    return float(lebesgue_norm(per_x, spec.r1, tuple(range(n)), w))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Fields at uniformly spaced times, stacked along a leading time axis."""

    grid: GridSpec
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).ravel()
        vals = np.asarray(self.values, dtype=np.complex128)
        if times.size == 0:
            raise ValueError("trajectory has no time samples")
        if vals.shape != (times.size, *self.grid.shape):
            raise ValueError(f"values shape {vals.shape} does not match {times.size} x {self.grid.shape}")
        if times.size > 1:
            dts = np.diff(times)
            if np.any(dts <= 0):
                raise ValueError("trajectory times must be strictly increasing")
            if np.max(np.abs(dts - dts.mean())) > 1e-12 * max(abs(times).max(), dts.mean()):
                raise ValueError("trajectory times must be uniformly spaced")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_fields(cls, times: Sequence[float], fields: Sequence[BipartiteField]) -> "Trajectory":
        if not fields:
            raise ValueError("trajectory has no time samples")
        grid = fields[0].grid
        if any(f.grid != grid for f in fields):
            raise ValueError("all trajectory fields must share one grid")
        return cls(grid, np.asarray(times, dtype=float), np.stack([f.values for f in fields]))

    @property
    def dt(self) -> float:
        if self.times.size < 2:
            return 0.0
        return float((self.times[-1] - self.times[0]) / (self.times.size - 1))

    def __len__(self) -> int:
        return self.times.size

    def __getitem__(self, k: int) -> BipartiteField:
        return BipartiteField(self.grid, self.values[k])

    @property
    def fields(self) -> list[BipartiteField]:
        return [self[k] for k in range(len(self))]

    def restrict(self, t0: float, t1: float, tol: float = 1e-12) -> "Trajectory":
        """Sub-trajectory on ``[t0, t1]``; the end points must be sample times."""
        scale = tol * max(1.0, abs(t0), abs(t1))
        keep = (self.times >= t0 - scale) & (self.times <= t1 + scale)
        idx = np.flatnonzero(keep)
        if idx.size == 0 or abs(self.times[idx[0]] - t0) > scale or abs(self.times[idx[-1]] - t1) > scale:
            raise ValueError(
                f"trajectory on [{self.times[0]:g}, {self.times[-1]:g}] has no samples at both ends of [{t0:g}, {t1:g}]"
            )
        return Trajectory(self.grid, self.times[idx], self.values[idx])


def mixed_norm_series(traj: Trajectory, spec: MixedNormSpec) -> np.ndarray:
    """Per-time mixed norms."""
    return _mixed(np.abs(traj.values), traj.grid, spec, lead=1)


def spacetime_norm(traj: Trajectory, q, spec: MixedNormSpec) -> float:
    """``L^q_t`` of the per-time mixed norms, left-endpoint Riemann sum."""
    q = parse_exponent(q)
    per_t = mixed_norm_series(traj, spec)
    if math.isinf(q):
        return float(per_t.max())
    if len(traj) < 2:
        raise ValueError("a finite time exponent needs at least two time samples")
    return float(lebesgue_norm(per_t[:-1], q, (0,), traj.dt))


def hls_convolve(g: np.ndarray, alpha: float, dt: float) -> np.ndarray:
    """``(|.|^-alpha * g)`` on the sample grid of ``g``.

    ``g`` is treated as constant on each cell ``[t_j - dt/2, t_j + dt/2]`` and
    the kernel is integrated exactly over every cell, including the singular
    one.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"HLS exponent must lie in (0, 1), got {alpha}")
    g = np.asarray(g)
    M = g.size
    if M == 0:
        return g.copy()
    offsets = dt * np.arange(-(M - 1), M)

    def prim(u):
        return np.sign(u) * np.abs(u) ** (1.0 - alpha) / (1.0 - alpha)

    weights = prim(offsets + dt / 2) - prim(offsets - dt / 2)
    full = np.convolve(g, weights)
    return full[M - 1 : 2 * M - 1]


def write_norms_csv(path, times, norms, spec: MixedNormSpec) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "norm", "r1", "r2"])
        for t, v in zip(times, norms):
            w.writerow([f"{t:.6g}", f"{v:.6g}", _fmt(spec.r1), _fmt(spec.r2)])
