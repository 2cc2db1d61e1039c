"""Exact exponent arithmetic for the bipartite Strichartz estimates.

Exponents are stored as reciprocals in :class:`fractions.Fraction`, with
``0`` standing for infinity. Every equality and inequality below is decided
in exact arithmetic, so triples on the boundary of a region are classified
correctly.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import NamedTuple

import numpy as np

HALF = Fraction(1, 2)

# (1/q, 1/r1, 1/r2) triples left out of the estimate, by dimension
EXCLUDED_ENDPOINTS = {
    1: (HALF, Fraction(0), Fraction(0)),
    2: (HALF, Fraction(0), HALF),
}


class ExponentError(ValueError):
    """Derived exponents fall outside the allowed range."""


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**6)
    return Fraction(value)


def reciprocal(exponent) -> Fraction:
    """``1/r`` as a fraction; ``inf`` (float or string) maps to 0."""
    if isinstance(exponent, str) and exponent.strip().lower() in ("inf", "infinity", "oo"):
        return Fraction(0)
    if isinstance(exponent, float) and math.isinf(exponent):
        return Fraction(0)
    r = as_fraction(exponent)
    if r <= 0:
        raise ExponentError(f"exponent must be positive, got {exponent}")
    return 1 / r


def _exponent(inv: Fraction) -> float:
    return math.inf if inv == 0 else float(1 / inv)


def _fmt_inv(inv: Fraction) -> str:
    return str(inv)


@dataclass(frozen=True)
class ExponentTriple:
    """``(q, r1, r2)`` held as ``(1/q, 1/r1, 1/r2)``."""

    inv_q: Fraction
    inv_r1: Fraction
    inv_r2: Fraction

    def __post_init__(self):
        for name in ("inv_q", "inv_r1", "inv_r2"):
            v = as_fraction(getattr(self, name))
            if v < 0:
                raise ExponentError(f"{name} must be nonnegative, got {v}")
            object.__setattr__(self, name, v)

    @classmethod
    def from_exponents(cls, q, r1, r2) -> "ExponentTriple":
        return cls(reciprocal(q), reciprocal(r1), reciprocal(r2))

    @classmethod
    def parse(cls, items) -> "ExponentTriple":
        """From three reciprocal strings or numbers, e.g. ``["1/6", "1/3", "1/3"]``."""
        if len(items) != 3:
            raise ExponentError(f"expected three reciprocals, got {items!r}")
        return cls(*(Fraction(str(v)) for v in items))

    @property
    def q(self) -> float:
        return _exponent(self.inv_q)

    @property
    def r1(self) -> float:
        return _exponent(self.inv_r1)

    @property
    def r2(self) -> float:
        return _exponent(self.inv_r2)

    def reciprocals(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.inv_q, self.inv_r1, self.inv_r2)

    def __str__(self) -> str:
        return f"(1/q, 1/r1, 1/r2) = ({self.inv_q}, {self.inv_r1}, {self.inv_r2})"


class Verdict(NamedTuple):
    ok: bool
    reason: str

    def __bool__(self) -> bool:
        return self.ok


def decay_rate(n: int, inv_r1, inv_r2) -> Fraction:
    """``n (1 - 1/r1 - 1/r2)``, the fixed-time dispersive decay power."""
    return n * (1 - as_fraction(inv_r1) - as_fraction(inv_r2))


def scaling_defect(n: int, triple: ExponentTriple) -> Fraction:
    """``n(1 - 1/r1 - 1/r2) - 2/q``; zero exactly on the scaling-invariant plane."""
    return decay_rate(n, triple.inv_r1, triple.inv_r2) - 2 * triple.inv_q


def is_admissible(n: int, triple: ExponentTriple) -> Verdict:
    iq, i1, i2 = triple.reciprocals()
    if iq > HALF:
        return Verdict(False, "q < 2")
    if i2 > HALF:
        return Verdict(False, "r2 < 2")
    if i1 > i2:
        return Verdict(False, "r1 < r2")
    if scaling_defect(n, triple) != 0:
        return Verdict(False, "scaling relation 2/q = n(1 - 1/r1 - 1/r2) fails")
    if EXCLUDED_ENDPOINTS.get(n) == (iq, i1, i2):
        return Verdict(False, "excluded endpoint")
    return Verdict(True, "admissible")


def admissible_q(n: int, inv_r1, inv_r2) -> Fraction:
    """The ``1/q`` that puts ``(q, r1, r2)`` on the scaling plane."""
    return decay_rate(n, inv_r1, inv_r2) / 2


def beta(n: int, inv_a, inv_a_tilde, inv_r2) -> Fraction:
    """Decay exponent of the Whitney-localised bilinear form at scale ``2^j``.

    ``-1 + n/2 (2 - 1/a - 1/a~ - 2/r2)``.
    """
    s = as_fraction(inv_a) + as_fraction(inv_a_tilde)
    return -1 + Fraction(n, 2) * (2 - s - 2 * as_fraction(inv_r2))


def perturbed_exponents(inv_r1, eps) -> tuple[Fraction, Fraction]:
    """``(1/a0, 1/a1) = (1/r1 - 2 eps, 1/r1 + 4 eps)``.

    On the plane ``1 = n(1 - 1/r1 - 1/r2)`` this gives ``beta(a0, a0) = 2 n eps``
    and ``beta(a0, a1) = beta(a1, a0) = -n eps``, and the ``1/3``-interpolant
    of ``1/a0`` and ``1/a1`` is ``1/r1`` again.
    """
    inv_r1, eps = as_fraction(inv_r1), as_fraction(eps)
    return inv_r1 - 2 * eps, inv_r1 + 4 * eps


def hoelder_duals(n: int, alpha, inv_r1, inv_r2) -> tuple[Fraction, Fraction]:
    """``(1/r1~, 1/r2~)`` with ``1/r1~' = alpha/2 + 1/r1`` and
    ``1/r2~' = alpha(1/2 - 1/n) + 1/r2``."""
    alpha = as_fraction(alpha)
    inv_r1t_prime = alpha / 2 + as_fraction(inv_r1)
    inv_r2t_prime = alpha * (HALF - Fraction(1, n)) + as_fraction(inv_r2)
    return 1 - inv_r1t_prime, 1 - inv_r2t_prime


def time_gap(n: int, alpha) -> Fraction:
    """``(2 + alpha - n alpha) / 2``, the power of T gained by Hoelder in time."""
    alpha = as_fraction(alpha)
    return (2 + alpha - n * alpha) / 2


@dataclass(frozen=True)
class NonlinearExponents:
    n: int
    alpha: Fraction
    triple: ExponentTriple
    dual: ExponentTriple
    gap: Fraction


def dual_triple(n: int, alpha, triple: ExponentTriple) -> NonlinearExponents:
    """Dual triple ``(q~, r1~, r2~)`` paired with ``triple`` for ``|u|^alpha u``.

    Raises :class:`ExponentError` naming the violated constraint.
    """
    alpha = as_fraction(alpha)
    if alpha <= 0:
        raise ExponentError(f"nonlinearity power must be positive, got {alpha}")
    verdict = is_admissible(n, triple)
    if not verdict:
        raise ExponentError(f"input triple not admissible: {verdict.reason}")
    gap = time_gap(n, alpha)
    if gap <= 0:
        raise ExponentError("time gap (2 + alpha - n alpha)/2 must be positive (alpha < 2/(n-1))")
    i1, i2 = hoelder_duals(n, alpha, triple.inv_r1, triple.inv_r2)
    checks = [
        (i1 >= 0, "1/r1~ >= 0"),
        (i2 <= HALF, "1/r2~ <= 1/2"),
        (i1 <= i2, "1/r1~ <= 1/r2~"),
    ]
    for ok, clause in checks:
        if not ok:
            raise ExponentError(f"dual exponent violates {clause}: (1/r1~, 1/r2~) = ({i1}, {i2})")
    iq = admissible_q(n, i1, i2)
    if iq < 0 or iq > HALF:
        raise ExponentError(f"dual exponent violates 0 <= 1/q~ <= 1/2: 1/q~ = {iq}")
    dual = ExponentTriple(iq, i1, i2)
    verdict = is_admissible(n, dual)
    if not verdict:
        raise ExponentError(f"dual triple not admissible: {verdict.reason}")
    return NonlinearExponents(n, alpha, triple, dual, gap)


class ResReport(NamedTuple):
    ok: bool
    clauses: tuple[tuple[str, bool], ...]

    def __bool__(self) -> bool:
        return self.ok

    @property
    def failed(self) -> list[str]:
        return [name for name, passed in self.clauses if not passed]


def res_constraints(n: int, alpha, triple: ExponentTriple) -> ResReport:
    """Both inequality chains on ``(1/q, 1/r1, 1/r2)`` for local well-posedness."""
    a = as_fraction(alpha)
    iq, i1, i2 = triple.reciprocals()
    clauses = (
        ("(alpha(n-1) - 1)/2 <= 1/q", (a * (n - 1) - 1) / 2 <= iq),
        ("1/q <= alpha(n-1)/2", iq <= a * (n - 1) / 2),
        ("1/2 - alpha/2 <= 1/r2 - alpha/n", HALF - a / 2 <= i2 - a / n),
        ("1/r2 - alpha/n <= 1/r1", i2 - a / n <= i1),
        ("1/r1 <= 1 - alpha/2", i1 <= 1 - a / 2),
    )
    return ResReport(all(p for _, p in clauses), clauses)


def _feasible_polygon_constraints(n: int, alpha: Fraction):
    """Half-planes ``c0 + c1 u + c2 v >= 0`` in ``u = 1/r1, v = 1/r2``.

    ``1/q`` is eliminated through the scaling relation.
    """
    a, nq = alpha, Fraction(n, 2)  # 1/q = nq (1 - u - v)
    return [
        (Fraction(0), Fraction(1), Fraction(0)),          # u >= 0
        (Fraction(0), Fraction(-1), Fraction(1)),         # v >= u
        (HALF, Fraction(0), Fraction(-1)),                # v <= 1/2
        (nq, -nq, -nq),                                   # 1/q >= 0
        (HALF - nq, nq, nq),                              # 1/q <= 1/2
        (nq - (a * (n - 1) - 1) / 2, -nq, -nq),           # res: lower bound on 1/q
        (a * (n - 1) / 2 - nq, nq, nq),                   # res: upper bound on 1/q
        (-(HALF - a / 2) - a / n, Fraction(0), Fraction(1)),  # 1/2 - a/2 <= v - a/n
        (a / n, Fraction(1), Fraction(-1)),               # v - a/n <= u
        (1 - a / 2, Fraction(-1), Fraction(0)),           # u <= 1 - a/2
    ]


def res_feasible(n: int, alpha) -> tuple[bool, list[ExponentTriple]]:
    """Decide whether some admissible triple satisfies the constraint chains.

    Exact vertex enumeration: the feasible set is a convex polygon in
    ``(1/r1, 1/r2)``, nonempty iff one of the pairwise line intersections
    satisfies every half-plane. Returns the feasible vertices.
    """
    alpha = as_fraction(alpha)
    hp = _feasible_polygon_constraints(n, alpha)
    vertices = set()
    for (a0, a1, a2), (b0, b1, b2) in combinations(hp, 2):
        det = a1 * b2 - a2 * b1
        if det == 0:
            continue
        u = (-a0 * b2 + a2 * b0) / det
        v = (-a1 * b0 + a0 * b1) / det
        if all(c0 + c1 * u + c2 * v >= 0 for c0, c1, c2 in hp):
            vertices.add((u, v))
    triples = [ExponentTriple(admissible_q(n, u, v), u, v) for u, v in sorted(vertices)]
    excluded = EXCLUDED_ENDPOINTS.get(n)
    # a polygon whose only vertex is an excluded endpoint has no usable point
    usable = [t for t in triples if t.reciprocals() != excluded]
    return bool(usable), triples


def rational_grid(bound: int) -> list[Fraction]:
    """All fractions in ``[0, 1/2]`` with denominator at most ``bound``."""
    if bound < 2:
        raise ValueError(f"denominator bound must be at least 2, got {bound}")
    pts = {Fraction(a, b) for b in range(1, bound + 1) for a in range(0, b // 2 + 1)}
    return sorted(pts)


@dataclass(frozen=True)
class RegionRow:
    inv_r1: Fraction
    inv_r2: Fraction
    inv_q: Fraction
    admissible: bool
    reason: str


def region_scan(n: int, bound: int = 60) -> list[RegionRow]:
    """Label every grid point ``1/r1 <= 1/r2`` of ``[0, 1/2]^2``.

    ``1/q`` is taken from the scaling relation, so every row lies on the
    scaling plane; rows are then labelled by :func:`is_admissible` logic in
    integer arithmetic over a common denominator.
    """
    grid = rational_grid(bound)
    D = math.lcm(*(f.denominator for f in grid))
    nums = [f.numerator * (D // f.denominator) for f in grid]
    excluded = EXCLUDED_ENDPOINTS.get(n)
    rows = []
    inv_q = {}  # top -> Fraction(top, 2D); few distinct values
    for i, (u, A) in enumerate(zip(grid, nums)):
        for v, B in zip(grid[i:], nums[i:]):
            top = n * (D - A - B)  # 1/q = top / (2D)
            if top < 0:
                ok, reason = False, "1/q < 0"
            elif top > D:
                ok, reason = False, "q < 2"
            else:
                ok, reason = True, "admissible"
            iq = inv_q.get(top)
            if iq is None:
                iq = inv_q[top] = Fraction(top, 2 * D)
            if ok and top == D and excluded == (iq, u, v):
                ok, reason = False, "excluded endpoint"
            rows.append(RegionRow(u, v, iq, ok, reason))
    return rows


def res_scan(n: int, alpha, bound: int = 60) -> list[ExponentTriple]:
    """Exhaustively list grid triples that are admissible and satisfy the chains.

    A float prefilter with a wide margin discards points far from the
    feasible set; survivors are confirmed exactly.
    """
    alpha = as_fraction(alpha)
    grid = rational_grid(bound)
    g = np.array([float(f) for f in grid])
    U, V = np.meshgrid(g, g, indexing="ij")
    a = float(alpha)
    IQ = n * (1 - U - V) / 2
    eps = 1e-9
    near = (
        (U <= V + eps)
        & (IQ >= -eps) & (IQ <= 0.5 + eps)
        & ((a * (n - 1) - 1) / 2 <= IQ + eps) & (IQ <= a * (n - 1) / 2 + eps)
        & (0.5 - a / 2 <= V - a / n + eps) & (V - a / n <= U + eps) & (U <= 1 - a / 2 + eps)
    )
    out = []
    for i, j in zip(*np.nonzero(near)):
        u, v = grid[i], grid[j]
        t = ExponentTriple(admissible_q(n, u, v), u, v)
        if is_admissible(n, t) and res_constraints(n, alpha, t):
            out.append(t)
    return out


def write_region_csv(path, rows: list[RegionRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["inv_r1", "inv_r2", "inv_q", "admissible", "reason"])
        for r in rows:
            w.writerow([_fmt_inv(r.inv_r1), _fmt_inv(r.inv_r2), _fmt_inv(r.inv_q), int(r.admissible), r.reason])
