"""Numerical checks of the dispersive and Strichartz-type bounds.

* :func:`decay_fit` - log-log slope of a fixed-time mixed norm against t.
* :func:`strichartz_ratio` - space-time norm over data norm on ``[0, T]``.
* :func:`whitney_decompose` / :func:`bilinear_Tj` - dyadic localisation of
  the retarded bilinear form and its scale-by-scale decay.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import exponents as ex
from .lattice import BipartiteField
from .norms import MixedNormSpec, Trajectory, mixed_norm, spacetime_norm
from .propagator import kernel_axis_operator, propagate

WRAP_GUARD = 1e-10


class WrapAroundError(RuntimeError):
    """Too much of the wave packet reached the periodic boundary."""


def evolve(f: BipartiteField, times: Sequence[float]) -> Trajectory:
    """Free evolution of ``f`` sampled at ``times`` (spectrally exact)."""
    return Trajectory.from_fields(times, [propagate(f, t) for t in times])


def boundary_mass_fraction(f: BipartiteField, width: int = 2) -> float:
    """Share of ``|f|^2`` on nodes within ``width`` cells of the box boundary."""
    N = f.grid.points_per_axis
    near = np.zeros(N, dtype=bool)
    near[: width + 1] = True
    near[N - width :] = True
    mask = np.zeros(f.grid.shape, dtype=bool)
    for a in range(2 * f.grid.n):
        mask |= f.grid.axis_view(near, a)
    dens = np.abs(f.values) ** 2
    total = dens.sum()
    return float(dens[mask].sum() / total) if total > 0 else 0.0


@dataclass
class DecayFitReport:
    exponent_fitted: float
    exponent_target: Fraction
    residual: float
    window: tuple[float, float]
    samples: int
    times: list[float] = field(default_factory=list)
    norms: list[float] = field(default_factory=list)
    rejected: list[float] = field(default_factory=list)
    r1: float = math.inf
    r2: float = math.inf

    @property
    def truncated(self) -> bool:
        return bool(self.rejected)

    @property
    def fitted_window(self) -> tuple[float, float]:
        return (min(self.times), max(self.times))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["exponent_target"] = str(self.exponent_target)
        d["exponent_target_float"] = float(self.exponent_target)
        d["truncated"] = self.truncated
        d["fitted_window"] = list(self.fitted_window)
        d["r1"] = _exp_str(self.r1)
        d["r2"] = _exp_str(self.r2)
        d["window"] = list(self.window)
        return d


def _exp_str(r: float) -> str | float:
    return "inf" if math.isinf(r) else r


def decay_fit(G: BipartiteField, spec: MixedNormSpec, window=(1.0, 16.0), samples: int = 9,
              guard: float = WRAP_GUARD) -> DecayFitReport:
    """Fit ``log ||e^{itL} G||`` against ``log t`` on geometric samples.

    Samples whose evolved field carries boundary mass above ``guard`` are
    rejected and listed in the report; fewer than four survivors raises
    :class:`WrapAroundError`.
    """
    t_min, t_max = map(float, window)
    if not 0 < t_min < t_max:
        raise ValueError(f"decay window must satisfy 0 < t_min < t_max, got {window}")
    if samples < 4:
        raise ValueError("a decay fit needs at least four samples")
    if G.norm() == 0:
        raise ValueError("cannot fit decay of the zero field")
    kept_t, kept_v, rejected = [], [], []
    for t in np.geomspace(t_min, t_max, samples):
        u = propagate(G, t)
        if boundary_mass_fraction(u) >= guard:
            rejected.append(float(t))
            continue
        kept_t.append(float(t))
        kept_v.append(mixed_norm(u, spec))
    if len(kept_t) < 4:
        raise WrapAroundError(
            f"only {len(kept_t)} of {samples} samples in [{t_min:g}, {t_max:g}] are free of wrap-around"
        )
    lt, lv = np.log(kept_t), np.log(kept_v)
    slope, icpt = np.polyfit(lt, lv, 1)
    resid = float(np.sqrt(np.mean((lv - (slope * lt + icpt)) ** 2)))
    target = -ex.decay_rate(G.grid.n, ex.reciprocal(spec.r1), ex.reciprocal(spec.r2))
    return DecayFitReport(float(slope), target, resid, (t_min, t_max), len(kept_t),
                          kept_t, [float(v) for v in kept_v], rejected, spec.r1, spec.r2)


def strichartz_quotient(f: BipartiteField, triple: ex.ExponentTriple, horizon: float, steps: int) -> float:
    """``||e^{itL} f||_{L^q([0,T]) L^r1 L^r2} / ||f||_2`` without admissibility checks."""
    if horizon <= 0 or steps < 1:
        raise ValueError("need horizon > 0 and steps >= 1")
    nf = f.norm()
    if nf == 0:
        raise ValueError("Strichartz quotient of the zero field is undefined")
    traj = evolve(f, np.linspace(0.0, horizon, steps + 1))
    spec = MixedNormSpec(triple.r1, triple.r2)
    return spacetime_norm(traj, triple.q, spec) / nf


def strichartz_ratio(f: BipartiteField, triple: ex.ExponentTriple, horizon: float, steps: int) -> float:
    """Strichartz quotient on the one-sided window ``[0, horizon]``."""
    verdict = ex.is_admissible(f.grid.n, triple)
    if not verdict:
        raise ex.ExponentError(f"triple {triple} is not admissible for n={f.grid.n}: {verdict.reason}")
    return strichartz_quotient(f, triple, horizon, steps)


def strichartz_growth(f: BipartiteField, triple: ex.ExponentTriple, horizons: Sequence[float],
                      steps: int) -> list[tuple[float, float]]:
    """Quotient against horizon; meant for excluded endpoints, no verdict."""
    return [(float(T), strichartz_quotient(f, triple, T, steps)) for T in horizons]


@dataclass(frozen=True)
class WhitneySquare:
    j: int
    I: tuple[float, float]
    J: tuple[float, float]

    def __post_init__(self):
        side = 2.0**self.j
        for name, iv in (("I", self.I), ("J", self.J)):
            if not math.isclose(iv[1] - iv[0], side, rel_tol=1e-12):
                raise ValueError(f"{name} = {iv} does not have length 2^{self.j}")
        if not self.I[1] <= self.J[0]:
            raise ValueError(f"square {self.I} x {self.J} is not in the retarded region s < t")
        ratio = self.distance / side
        if not 1 - 1e-12 <= ratio <= 4 + 1e-12:
            raise ValueError(f"dist(I, J)/|I| = {ratio:g} outside [1, 4]")

    @property
    def side(self) -> float:
        return 2.0**self.j

    @property
    def distance(self) -> float:
        return self.J[0] - self.I[1]


def whitney_decompose(window=(0.0, 8.0), j_range=(-5, 1)) -> list[WhitneySquare]:
    """Dyadic Whitney squares for ``{s < t}`` inside ``window x window``.

    Starting from the coarsest scale, a dyadic square is kept once its
    intervals are at least one side length apart and refined while they
    touch; refinement stops at the finest scale. At the coarsest scale
    squares further than four sides from the diagonal are left out.
    """
    j_min, j_max = int(j_range[0]), int(j_range[1])
    if j_min > j_max:
        raise ValueError(f"empty scale range {j_range}")
    t0, t1 = map(float, window)
    if not t0 < t1 or not math.isfinite(t1 - t0):
        raise ValueError(f"window must be a bounded interval, got {window}")
    side = 2.0**j_max
    k0, k1 = math.ceil(t0 / side), math.floor(t1 / side)
    todo = [(j_max, k, l) for k in range(k0, k1) for l in range(k, k1)]
    out = []
    while todo:
        j, k, l = todo.pop()
        gap = l - k
        if gap >= 2:
            if gap <= 5:
                s = 2.0**j
                out.append(WhitneySquare(j, (k * s, (k + 1) * s), (l * s, (l + 1) * s)))
            continue
        if j == j_min:
            continue
        for dk in (0, 1):
            for dl in (0, 1):
                kc, lc = 2 * k + dk, 2 * l + dl
                if lc >= kc:
                    todo.append((j - 1, kc, lc))
    out.sort(key=lambda q: (q.j, q.I[0], q.J[0]))
    return out


def whitney_checks(squares: Sequence[WhitneySquare], window, j_min: int) -> dict:
    """Distance ratios, overlap and area coverage of a Whitney family.

    Squares are rasterised onto the finest dyadic cells; a cell hit twice
    means two squares overlap with positive area. The reference area is the
    part of the retarded window at least ``2^j_min`` from the diagonal; the
    uncovered area must stay below ``2^j_min`` times the window diagonal.
    """
    t0, t1 = map(float, window)
    W = t1 - t0
    cell = 2.0**j_min
    seen: set[tuple[int, int]] = set()
    overlap = False
    covered = 0.0
    ratios = []
    for q in squares:
        ratios.append(q.distance / q.side)
        covered += q.side**2
        m = 2 ** (q.j - j_min)
        k0, l0 = round(q.I[0] / cell), round(q.J[0] / cell)
        for a in range(m):
            for b in range(m):
                c = (k0 + a, l0 + b)
                if c in seen:
                    overlap = True
                seen.add(c)
    resolvable = 0.5 * max(W - cell, 0.0) ** 2
    bound = cell * W * math.sqrt(2.0)
    return {
        "count": len(squares),
        "ratio_min": min(ratios) if ratios else float("nan"),
        "ratio_max": max(ratios) if ratios else float("nan"),
        "ratios_ok": all(1 - 1e-12 <= r <= 4 + 1e-12 for r in ratios),
        "overlap": overlap,
        "covered_area": covered,
        "retarded_area": 0.5 * W * W,
        "resolvable_area": resolvable,
        "missing_area": resolvable - covered,
        "missing_bound": bound,
        "coverage": covered / resolvable if resolvable > 0 else float("nan"),
        "coverage_ok": 0.0 <= resolvable - covered <= bound,
    }


def _trapezoid_weights(m: int, dt: float) -> np.ndarray:
    w = np.full(m, dt)
    if m > 1:
        w[0] = w[-1] = dt / 2
    else:
        w[0] = 0.0
    return w


def bilinear_form(F: Trajectory, G: Trajectory, I, J, method: str = "spectral") -> complex:
    """``int_J int_I <e^{-isL} F(s), e^{-itL} G(t)> ds dt`` by the trapezoid rule.

    ``method="spectral"`` back-propagates both slices with the periodic
    multiplier. ``method="kernel"`` instead pairs ``e^{i(t-s)L} F(s)`` with
    ``G(t)``, propagating by free-space kernel quadrature, which does not
    see the periodic images of the box.
    """
    if F.grid != G.grid:
        raise ValueError("F and G live on different grids")
    FI, GJ = F.restrict(*I), G.restrict(*J)
    ws = _trapezoid_weights(len(FI), FI.dt)
    wt = _trapezoid_weights(len(GJ), GJ.dt)
    if method == "spectral":
        A = sum(w * propagate(FI[a], -s).values for a, (w, s) in enumerate(zip(ws, FI.times)))
        B = sum(w * propagate(GJ[b], -t).values for b, (w, t) in enumerate(zip(wt, GJ.times)))
        return BipartiteField(F.grid, A).inner(BipartiteField(F.grid, B))
    if method == "kernel":
        return _bilinear_kernel(FI, GJ, ws, wt)
    raise ValueError(f"unknown method {method!r}")


def _bilinear_kernel(FI: Trajectory, GJ: Trajectory, ws, wt) -> complex:
    grid = FI.grid
    n = grid.n
    cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}
    total = 0j
    weight = grid.factor_weight**2
    for b, t in enumerate(GJ.times):
        acc = np.zeros(grid.shape, dtype=complex)
        for a, s in enumerate(FI.times):
            tau = float(t - s)
            key = round(tau, 12)
            if key not in cache:
                cache[key] = (kernel_axis_operator(grid, tau), kernel_axis_operator(grid, -tau))
            fwd, bwd = cache[key]
            v = FI.values[a]
            for axis, op in enumerate([fwd] * n + [bwd] * n):
                v = np.moveaxis(np.tensordot(op, v, axes=([1], [axis])), 0, axis)
            acc += ws[a] * v
        total += wt[b] * weight * np.vdot(GJ.values[b], acc)
    return complex(total)


def bilinear_Tj(F: Trajectory, G: Trajectory, square: WhitneySquare, method: str = "spectral") -> complex:
    return bilinear_form(F, G, square.I, square.J, method)


def representative_square(j: int) -> WhitneySquare:
    """``I = [0, 2^j]``, ``J = [2^(j+1), 3 * 2^j]``: distance one side length."""
    s = 2.0**j
    return WhitneySquare(j, (0.0, s), (2 * s, 3 * s))


@dataclass
class TjScanReport:
    js: list[int]
    values: list[float]
    ratios: list[float]
    slope: float
    beta: Fraction
    residual: float

    @property
    def target_slope(self) -> float:
        return -float(self.beta)

    def to_dict(self) -> dict:
        return {"js": self.js, "abs_Tj": self.values, "ratios": self.ratios, "slope": self.slope,
                "beta": str(self.beta), "target_slope": self.target_slope, "residual": self.residual}


def tj_decay_scan(phi: BipartiteField, psi: BipartiteField, js: Sequence[int], nodes: int = 17,
                  inv_a=0, inv_a_tilde=0, inv_r2=0, method: str = "kernel") -> TjScanReport:
    """``|T_j| / (||F|| ||G||)`` against ``j`` for time-constant bump data.

    ``F = phi`` on ``I`` and ``G = psi`` on ``J`` of :func:`representative_square`,
    normed in ``L^2_t L^{a'}_x L^{r2'}_y``. The least-squares slope of
    ``log2`` of the ratio is to be compared with ``-beta(a, a~)``.
    """
    inv_a, inv_at, inv_r2 = map(ex.as_fraction, (inv_a, inv_a_tilde, inv_r2))
    n = phi.grid.n
    b = ex.beta(n, inv_a, inv_at, inv_r2)
    dual = lambda inv: 1.0 / (1.0 - float(inv))  # noqa: E731
    spec_F = MixedNormSpec(dual(inv_a), dual(inv_r2))
    spec_G = MixedNormSpec(dual(inv_at), dual(inv_r2))
    vals, ratios = [], []
    for j in js:
        sq = representative_square(j)
        F = Trajectory(phi.grid, np.linspace(*sq.I, nodes), np.broadcast_to(phi.values, (nodes, *phi.grid.shape)))
        G = Trajectory(psi.grid, np.linspace(*sq.J, nodes), np.broadcast_to(psi.values, (nodes, *psi.grid.shape)))
        T = abs(bilinear_Tj(F, G, sq, method))
        vals.append(T)
        ratios.append(T / (spacetime_norm(F, 2, spec_F) * spacetime_norm(G, 2, spec_G)))
    x = np.asarray(js, dtype=float)
    y = np.log2(ratios)
    slope, icpt = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
    return TjScanReport(list(map(int, js)), vals, ratios, float(slope), b, resid)
