"""Bipartite wave functions sampled on a periodic box.

A field lives on ``[-L, L)^n x [-L, L)^n`` with ``N`` nodes per axis. The
value array has ``2n`` axes: the first ``n`` index ``x``, the last ``n``
index ``y``. Angular frequencies are ``xi_k = pi k / L`` for
``k in [-N/2, N/2)`` and the discrete transform is unitary, so Plancherel
holds to rounding.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.fft as sfft

SUPPORTED_DIMS = (1, 2)

FIELD_MAGIC = b"BPWF1"
_HEADER = struct.Struct("<5sIId")


@dataclass(frozen=True)
class GridSpec:
    n: int
    points_per_axis: int
    half_length: float

    def __post_init__(self):
        if self.n not in SUPPORTED_DIMS:
            raise ValueError(f"unsupported dimension n={self.n}; expected one of {SUPPORTED_DIMS}")
        N = self.points_per_axis
        if int(N) != N or N < 4 or (N & (N - 1)) != 0:
            raise ValueError(f"points_per_axis must be a power of two >= 4, got {N}")
        if not np.isfinite(self.half_length) or self.half_length <= 0:
            raise ValueError(f"half_length must be positive, got {self.half_length}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.points_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * (2 * self.n)

    @property
    def size(self) -> int:
        return self.points_per_axis ** (2 * self.n)

    @property
    def factor_weight(self) -> float:
        """Quadrature weight ``h^n`` of one node in a single factor."""
        return self.spacing**self.n

    @cached_property
    def coords(self) -> np.ndarray:
        return -self.half_length + self.spacing * np.arange(self.points_per_axis)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        # FFT ordering; equals pi*k/L
        return 2.0 * np.pi * sfft.fftfreq(self.points_per_axis, d=self.spacing)

    def axis_view(self, values: np.ndarray, axis: int) -> np.ndarray:
        """Reshape a 1D per-axis array so it broadcasts along ``axis``."""
        shape = [1] * (2 * self.n)
        shape[axis] = self.points_per_axis
        return values.reshape(shape)

    def positions(self):
        """Broadcastable node coordinates ``(x, y)``.

        For ``n == 1`` these are arrays; for ``n == 2`` each is a tuple of
        two arrays, one per component.
        """
        comps = [self.axis_view(self.coords, a) for a in range(2 * self.n)]
        if self.n == 1:
            return comps[0], comps[1]
        return tuple(comps[: self.n]), tuple(comps[self.n :])

    @cached_property
    def symbol(self) -> np.ndarray:
        """``|xi|^2 - |xi'|^2`` on the frequency lattice, FFT ordering."""
        k2 = self.wavenumbers**2
        out = np.zeros(self.shape)
        for a in range(self.n):
            out = out + self.axis_view(k2, a)
        for a in range(self.n, 2 * self.n):
            out = out - self.axis_view(k2, a)
        return out

    def rescaled(self, lam: float) -> "GridSpec":
        return GridSpec(self.n, self.points_per_axis, self.half_length / lam)

    def as_dict(self) -> dict:
        return {"n": self.n, "points_per_axis": self.points_per_axis,
                "half_length": self.half_length, "spacing": self.spacing}


def radius2(x) -> np.ndarray:
    """``|x|^2`` for a coordinate as handed out by :meth:`GridSpec.positions`."""
    if isinstance(x, tuple):
        return sum(c**2 for c in x)
    return x**2


def make_grid(n: int, points_per_axis: int, half_length: float) -> GridSpec:
    return GridSpec(int(n), int(points_per_axis), float(half_length))


@dataclass(frozen=True, eq=False)
class BipartiteField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")
        if vals is self.values and vals.flags.writeable:
            vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def norm(self) -> float:
        """Continuum L2 norm with node weight ``h^(2n)``."""
        w = self.grid.factor_weight**2
        return float(np.sqrt(w * np.sum(np.abs(self.values) ** 2)))

    def inner(self, other: "BipartiteField") -> complex:
        """``<self, other>`` over x and y, linear in the first slot."""
        if other.grid != self.grid:
            raise ValueError("inner product of fields on different grids")
        w = self.grid.factor_weight**2
        return complex(w * np.vdot(other.values, self.values))

    def with_values(self, values: np.ndarray) -> "BipartiteField":
        return BipartiteField(self.grid, values)

    def __add__(self, other: "BipartiteField") -> "BipartiteField":
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "BipartiteField") -> "BipartiteField":
        return self.with_values(self.values - other.values)

    def __mul__(self, c) -> "BipartiteField":
        return self.with_values(self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: GridSpec
    coefficients: np.ndarray

    def norm(self) -> float:
        w = self.grid.factor_weight**2
        return float(np.sqrt(w * np.sum(np.abs(self.coefficients) ** 2)))


def sample(grid: GridSpec, f: Callable) -> BipartiteField:
    """Evaluate ``f(x, y)`` at every node of ``grid``."""
    x, y = grid.positions()
    vals = np.broadcast_to(np.asarray(f(x, y), dtype=np.complex128), grid.shape).copy()
    if not np.all(np.isfinite(vals)):
        raise ValueError("sampled function is not finite on the grid")
    return BipartiteField(grid, vals)


def to_spectral(field: BipartiteField) -> SpectralField:
    return SpectralField(field.grid, sfft.fftn(field.values, norm="ortho"))


def from_spectral(spec: SpectralField) -> BipartiteField:
    return BipartiteField(spec.grid, sfft.ifftn(spec.coefficients, norm="ortho"))


def write_field(path, field: BipartiteField) -> None:
    """Write ``field`` in the BPWF1 binary format (little-endian)."""
    g = field.grid
    header = _HEADER.pack(FIELD_MAGIC, g.n, g.points_per_axis, g.half_length)
    body = np.ascontiguousarray(field.values, dtype="<c16").tobytes()
    Path(path).write_bytes(header + body)


def read_field(path) -> BipartiteField:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, n, N, L = _HEADER.unpack_from(raw)
    if magic != FIELD_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    grid = GridSpec(n, N, L)
    body = raw[_HEADER.size :]
    if len(body) != 16 * grid.size:
        raise ValueError(f"{path}: expected {16 * grid.size} data bytes, found {len(body)}")
    vals = np.frombuffer(body, dtype="<c16").reshape(grid.shape).astype(np.complex128)
    return BipartiteField(grid, vals)
