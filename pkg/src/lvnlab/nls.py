"""Local solutions of ``i u_t + (Lap_x - Lap_y) u = sign |u|^alpha u``.

Two independent discretisations of the same flow:

* :func:`picard_solve` iterates the Duhamel map on a uniform time grid,
  integrating the forcing by the trapezoid rule in the interaction picture
  (propagators are applied exactly, only the ``s``-quadrature is approximate).
* :func:`split_step_solve` is Strang splitting: exact nonlinear phase
  half-steps around an exact linear step.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction

import numpy as np
import scipy.fft as sfft

from . import exponents as ex
from .lattice import BipartiteField, GridSpec, radius2, sample
from .norms import MixedNormSpec, Trajectory, lebesgue_norm, sobolev_y_norm, spacetime_norm
from .propagator import propagate
from .verify import strichartz_ratio


class NonContractionError(RuntimeError):
    def __init__(self, message: str, factor: float):
        super().__init__(message)
        self.factor = factor


class ConvergenceError(RuntimeError):
    pass


class BlowupError(RuntimeError):
    def __init__(self, message: str, last_time: float):
        super().__init__(message)
        self.last_time = last_time


@dataclass(frozen=True, eq=False)
class NlsProblem:
    initial: BipartiteField
    alpha: float
    sign: int
    horizon: float
    steps: int = 256

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"nonlinearity power must be positive, got {self.alpha}")
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be +1 (defocusing), -1 (focusing) or 0 (linear), got {self.sign}")
        if not self.horizon > 0 or not math.isfinite(self.horizon):
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")
        if self.steps < 1:
            raise ValueError("need at least one time step")

    @property
    def grid(self) -> GridSpec:
        return self.initial.grid

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.steps + 1)


@dataclass
class PicardState:
    k: int
    distance: float
    ratio: float | None = None
    trajectory: Trajectory | None = field(default=None, repr=False)


def nonlinearity(u: np.ndarray, alpha: float, sign: int) -> np.ndarray:
    """``sign |u|^alpha u``; ``0^alpha`` is 0 for positive ``alpha``."""
    if sign == 0:
        return np.zeros_like(u)
    return sign * np.abs(u) ** alpha * u


def _space_axes(grid: GridSpec) -> tuple[int, ...]:
    return tuple(range(1, 2 * grid.n + 1))


def free_trajectory(problem: NlsProblem) -> Trajectory:
    times = problem.times
    coeffs = sfft.fftn(problem.initial.values, norm="ortho")
    phase = np.exp(-1j * np.multiply.outer(times, problem.grid.symbol))
    vals = sfft.ifftn(phase * coeffs, axes=_space_axes(problem.grid), norm="ortho")
    return Trajectory(problem.grid, times, vals)


def _check_trajectory(problem: NlsProblem, u: Trajectory) -> None:
    if u.grid != problem.grid:
        raise ValueError("trajectory and problem live on different grids")
    if len(u) != problem.steps + 1 or not np.allclose(u.times, problem.times, rtol=0, atol=1e-12 * problem.horizon):
        raise ValueError("trajectory times do not match the problem's time grid")


def duhamel_map(problem: NlsProblem, u: Trajectory, triple: ex.ExponentTriple | None = None) -> Trajectory:
    """``Phi(u)(t) = e^{itL} f - i int_0^t e^{i(t-s)L} F(u(s)) ds``."""
    _check_trajectory(problem, u)
    if triple is not None:
        verdict = ex.is_admissible(problem.grid.n, triple)
        if not verdict:
            raise ex.ExponentError(f"triple {triple} is not admissible: {verdict.reason}")
    grid, times = problem.grid, u.times
    axes = _space_axes(grid)
    omega = grid.symbol
    forcing = sfft.fftn(nonlinearity(u.values, problem.alpha, problem.sign), axes=axes, norm="ortho")
    # interaction picture: e^{-isL} F(u(s)) has multiplier e^{+is omega}
    forcing *= np.exp(1j * np.multiply.outer(times, omega))
    acc = np.zeros_like(forcing)
    if len(times) > 1:
        dt = u.dt
        acc[1:] = np.cumsum(0.5 * dt * (forcing[1:] + forcing[:-1]), axis=0)
    f_hat = sfft.fftn(problem.initial.values, norm="ortho")
    out = np.exp(-1j * np.multiply.outer(times, omega)) * (f_hat - 1j * acc)
    return Trajectory(grid, times, sfft.ifftn(out, axes=axes, norm="ortho"))


def l2_series(traj: Trajectory) -> np.ndarray:
    w = traj.grid.factor_weight**2
    return np.sqrt(w * np.sum(np.abs(traj.values) ** 2, axis=_space_axes(traj.grid)))


def distance(u: Trajectory, v: Trajectory, triple: ex.ExponentTriple) -> float:
    """``sup_t ||u - v||_2 + ||u - v||_{L^q_t L^r1_x L^r2_y}``."""
    diff = Trajectory(u.grid, u.times, u.values - v.values)
    spec = MixedNormSpec(triple.r1, triple.r2)
    return float(l2_series(diff).max()) + spacetime_norm(diff, triple.q, spec)


def contraction_factor(ledger: list[PicardState], floor: float) -> float:
    """Largest ratio of consecutive distances whose predecessor exceeds ``floor``."""
    ratios = [s.ratio for prev, s in zip(ledger, ledger[1:]) if s.ratio is not None and prev.distance > floor]
    return max(ratios) if ratios else 0.0


def _zero_like(u: Trajectory) -> Trajectory:
    return Trajectory(u.grid, u.times, np.zeros_like(u.values))


def _validate_nonlinear_exponents(problem: NlsProblem, triple: ex.ExponentTriple) -> None:
    n = problem.grid.n
    verdict = ex.is_admissible(n, triple)
    if not verdict:
        raise ex.ExponentError(f"triple {triple} is not admissible for n={n}: {verdict.reason}")
    if ex.time_gap(n, ex.as_fraction(problem.alpha)) <= 0:
        raise ex.ExponentError("2 + alpha - n alpha must be positive for the contraction argument")


def picard_solve(problem: NlsProblem, triple: ex.ExponentTriple, max_iter: int = 50, tol: float = 1e-12,
                 noise_floor: float = 1e-10):
    """Iterate ``u <- Phi(u)`` from the free evolution until ``d < tol (1 + d(u, 0))``.

    Returns ``(trajectory, ledger)``. Three consecutive increases of the
    distance raise :class:`NonContractionError`.
    """
    _validate_nonlinear_exponents(problem, triple)
    u = free_trajectory(problem)
    scale = 1.0 + distance(u, _zero_like(u), triple)
    ledger: list[PicardState] = []
    rises = 0
    for k in range(1, max_iter + 1):
        new = duhamel_map(problem, u)
        d = distance(new, u, triple)
        prev = ledger[-1].distance if ledger else None
        ratio = d / prev if prev else None
        ledger.append(PicardState(k, d, ratio))
        u = new
        if d <= tol * scale:
            ledger[-1].trajectory = u
            return u, ledger
        rises = rises + 1 if prev is not None and d > prev else 0
        if rises >= 3:
            factor = contraction_factor(ledger, noise_floor * scale)
            raise NonContractionError(f"Picard distances grew for 3 iterations (factor {factor:.3g})", factor)
    raise ConvergenceError(f"no convergence after {max_iter} iterations (last distance {ledger[-1].distance:.3g})")


def split_step_solve(problem: NlsProblem, steps: int | None = None) -> Trajectory:
    """Strang splitting with ``steps`` uniform steps over ``[0, horizon]``."""
    steps = problem.steps if steps is None else int(steps)
    if steps < 1:
        raise ValueError("need at least one step")
    grid = problem.grid
    dt = problem.horizon / steps
    lin = np.exp(-1j * dt * grid.symbol)
    alpha, sign = problem.alpha, problem.sign
    u = problem.initial.values.copy()
    out = np.empty((steps + 1, *grid.shape), dtype=complex)
    out[0] = u

    def kick(v):
        if sign == 0:
            return v
        with np.errstate(over="raise", invalid="raise"):
            return v * np.exp(-1j * sign * (dt / 2) * np.abs(v) ** alpha)

    for m in range(1, steps + 1):
        try:
            u = kick(u)
            u = sfft.ifftn(lin * sfft.fftn(u, norm="ortho"), norm="ortho")
            u = kick(u)
        except FloatingPointError:
            raise BlowupError("overflow in |u|^alpha", (m - 1) * dt) from None
        if not np.all(np.isfinite(u)):
            raise BlowupError("non-finite field", (m - 1) * dt)
        out[m] = u
    return Trajectory(grid, np.linspace(0.0, problem.horizon, steps + 1), out)


def gaussian_family(grid: GridSpec, widths=(0.5, 1.0, 2.0)) -> list[BipartiteField]:
    return [sample(grid, lambda x, y, w=w: np.exp(-(radius2(x) + radius2(y)) / (2 * w * w))) for w in widths]


def calibrate_constant(f: BipartiteField, triple: ex.ExponentTriple, horizon: float = 1.0, steps: int = 64,
                       widths=(0.5, 1.0, 2.0)) -> float:
    """Largest observed Strichartz quotient over ``f`` and a Gaussian family, floored at 1."""
    family = [f] + gaussian_family(f.grid, widths)
    quotients = [strichartz_ratio(g, triple, horizon, steps) for g in family if g.norm() > 0]
    return max([1.0] + quotients)


def propose_horizon(data_norm: float, C: float, alpha: float, n: int) -> tuple[float | None, float]:
    """``A = 2 C ||f||`` and the largest ``T`` with ``C T^gap A^alpha <= 1/2``.

    ``T`` is ``None`` when the time gap ``(2 + alpha - n alpha)/2`` is not
    positive, and infinite for zero data.
    """
    A = 2.0 * C * data_norm
    gap = float(ex.time_gap(n, ex.as_fraction(alpha)))
    if gap <= 0:
        return None, A
    if A == 0:
        return math.inf, A
    return (1.0 / (2.0 * C * A**alpha)) ** (1.0 / gap), A


def sup_l2h1(traj: Trajectory) -> float:
    return max(sobolev_y_norm(traj[k], 2, 1, r1=2) for k in range(len(traj)))


@dataclass
class WellposednessReport:
    n: int
    alpha: float
    sign: int
    triple: str
    gap: Fraction
    in_regime: bool
    constant: float | None = None
    data_norm: float | None = None
    ball_radius: float | None = None
    proposed_horizon: float | None = None
    horizon: float | None = None
    contraction_factor: float | None = None
    iterations: int | None = None
    final_residual: float | None = None
    sup_l2h1: float | None = None
    distances: list[float] = field(default_factory=list)
    res_clauses: list[tuple[str, bool]] = field(default_factory=list)
    note: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gap"] = str(self.gap)
        d["res_clauses"] = [{"clause": c, "passed": p} for c, p in self.res_clauses]
        return d


def wellposedness_report(problem: NlsProblem, triple: ex.ExponentTriple, C: float | None = None,
                         max_iter: int = 60, tol: float = 1e-12):
    """Propose a horizon from the ball condition and run the Picard iteration there.

    The solver runs on ``min(proposed T, problem.horizon)``. Returns
    ``(report, trajectory)``; the trajectory is ``None`` out of regime.
    """
    n = problem.grid.n
    alpha = ex.as_fraction(problem.alpha)
    gap = ex.time_gap(n, alpha)
    res = ex.res_constraints(n, alpha, triple)
    report = WellposednessReport(n, float(problem.alpha), problem.sign, str(triple), gap, gap > 0,
                                 res_clauses=list(res.clauses))
    if gap <= 0:
        report.note = "time gap (2 + alpha - n alpha)/2 is not positive; no horizon can be proposed"
        return report, None
    if C is None:
        C = calibrate_constant(problem.initial, triple)
    with np.errstate(over="ignore", invalid="ignore"):
        data_norm = sobolev_y_norm(problem.initial, 2, 1, r1=2)
    if not math.isfinite(data_norm):
        raise BlowupError("initial data norm overflows", 0.0)
    T, A = propose_horizon(data_norm, C, problem.alpha, n)
    if T == 0:
        raise BlowupError(f"proposed horizon underflows to zero (ball radius {A:.3e})", 0.0)
    horizon = min(T, problem.horizon)
    run = replace(problem, horizon=horizon)
    u, ledger = picard_solve(run, triple, max_iter=max_iter, tol=tol)
    scale = 1.0 + distance(u, _zero_like(u), triple)
    residual = distance(duhamel_map(run, u), u, triple)
    report.constant = C
    report.data_norm = data_norm
    report.ball_radius = A
    report.proposed_horizon = T
    report.horizon = horizon
    report.contraction_factor = contraction_factor(ledger, 1e-10 * scale)
    report.iterations = len(ledger)
    report.final_residual = residual
    report.sup_l2h1 = sup_l2h1(u)
    report.distances = [s.distance for s in ledger]
    return report, u
