import math
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lvnlab import exponents as ex
from lvnlab import verify as V
from lvnlab.lattice import BipartiteField, GridSpec, sample
from lvnlab.norms import MixedNormSpec, Trajectory
from oracles import gaussian_overlap, trapezoid_double
from strategies import random_fields


def gaussian(grid, width=1.0):
    return sample(grid, lambda x, y: np.exp(-(x**2 + y**2) / (2 * width**2)))


def test_boundary_mass():
    g = GridSpec(1, 64, 16.0)
    assert V.boundary_mass_fraction(gaussian(g)) < 1e-30
    flat = sample(g, lambda x, y: 1.0)
    # 5 of 64 indices per axis are near the boundary
    assert math.isclose(V.boundary_mass_fraction(flat), 1 - (59 / 64) ** 2)
    assert V.boundary_mass_fraction(BipartiteField(g, np.zeros(g.shape))) == 0.0


def test_evolve_times():
    g = GridSpec(1, 16, 4.0)
    tr = V.evolve(gaussian(g), [0, 0.5, 1.0])
    assert len(tr) == 3 and tr.dt == 0.5


@pytest.mark.parametrize("r1,r2,target", [("inf", "inf", -1), ("inf", 2, -0.5), (2, 2, 0)])
def test_decay_fit_small_grid(r1, r2, target):
    g = GridSpec(1, 256, 64.0)
    rep = V.decay_fit(gaussian(g, 0.7), MixedNormSpec(r1, r2), window=(1, 4), samples=6)
    assert rep.exponent_target == Fr(target).limit_denominator()
    assert abs(rep.exponent_fitted - target) < 0.05
    assert not rep.truncated
    d = rep.to_dict()
    assert d["fitted_window"] == [1.0, 4.0]


def test_decay_fit_reports_rejected_samples():
    g = GridSpec(1, 256, 64.0)
    rep = V.decay_fit(gaussian(g, 0.7), MixedNormSpec("inf", "inf"))
    assert rep.truncated and rep.rejected
    assert rep.samples + len(rep.rejected) == 9
    assert max(rep.times) < min(rep.rejected)


def test_decay_fit_errors():
    g = GridSpec(1, 64, 8.0)
    with pytest.raises(V.WrapAroundError):
        V.decay_fit(gaussian(g, 2.0), MixedNormSpec(2, 2))
    with pytest.raises(ValueError):
        V.decay_fit(BipartiteField(g, np.zeros(g.shape)), MixedNormSpec(2, 2))
    with pytest.raises(ValueError):
        V.decay_fit(gaussian(g), MixedNormSpec(2, 2), window=(2, 1))


@given(random_fields(GridSpec(1, 16, 4.0)))
def test_energy_triple_quotient_is_one(f):
    # (q, r1, r2) = (inf, 2, 2): sup_t ||e^{itL} f||_2 / ||f||_2 = 1
    t = ex.ExponentTriple.from_exponents("inf", 2, 2)
    assert math.isclose(V.strichartz_ratio(f, t, 3.0, 8), 1.0, rel_tol=1e-12)


def test_strichartz_ratio_checks_admissibility():
    g = GridSpec(1, 16, 4.0)
    with pytest.raises(ex.ExponentError):
        V.strichartz_ratio(gaussian(g), ex.ExponentTriple.from_exponents(3, 2, 2), 1.0, 4)
    with pytest.raises(ValueError):
        V.strichartz_quotient(BipartiteField(g, np.zeros(g.shape)), ex.ExponentTriple(0, Fr(1, 2), Fr(1, 2)), 1, 4)


def test_strichartz_growth_excluded_endpoint():
    g = GridSpec(1, 32, 8.0)
    t = ex.ExponentTriple.from_exponents(2, "inf", "inf")
    rows = V.strichartz_growth(gaussian(g), t, [0.5, 1.0, 2.0], 16)
    assert [r[0] for r in rows] == [0.5, 1.0, 2.0]
    assert rows[0][1] < rows[1][1] < rows[2][1]


def test_whitney_default_invariants():
    squares = V.whitney_decompose()
    chk = V.whitney_checks(squares, (0, 8), -5)
    assert chk["ratios_ok"] and not chk["overlap"] and chk["coverage_ok"]
    assert 1 <= chk["ratio_min"] and chk["ratio_max"] <= 4


@given(st.integers(0, 3), st.integers(1, 12), st.integers(-4, 0), st.integers(0, 2))
def test_whitney_invariants_property(start, width, j_min, extra):
    window = (float(start), float(start + width))
    j_range = (j_min, j_min + extra)
    squares = V.whitney_decompose(window, j_range)
    chk = V.whitney_checks(squares, window, j_min)
    assert chk["ratios_ok"] and not chk["overlap"]
    assert chk["missing_area"] >= 0
    for q in squares:
        assert window[0] <= q.I[0] and q.J[1] <= window[1]
        assert j_range[0] <= q.j <= j_range[1]


def test_whitney_refining_shrinks_missing_area():
    a = V.whitney_checks(V.whitney_decompose((0, 8), (-3, 1)), (0, 8), -3)
    b = V.whitney_checks(V.whitney_decompose((0, 8), (-6, 1)), (0, 8), -6)
    assert b["covered_area"] > a["covered_area"]
    assert b["coverage_ok"] and a["coverage_ok"]


def test_whitney_square_validation():
    with pytest.raises(ValueError):
        V.WhitneySquare(0, (0.0, 1.0), (0.5, 1.5))
    with pytest.raises(ValueError):
        V.WhitneySquare(0, (0.0, 1.0), (7.0, 8.0))
    with pytest.raises(ValueError):
        V.WhitneySquare(0, (0.0, 2.0), (3.0, 5.0))
    with pytest.raises(ValueError):
        V.whitney_decompose((0, 8), (1, 0))
    q = V.representative_square(-1)
    assert q.side == 0.5 and q.distance == 0.5


def _constant_traj(field, interval, nodes):
    ts = np.linspace(*interval, nodes)
    return Trajectory(field.grid, ts, np.broadcast_to(field.values, (nodes, *field.grid.shape)))


def test_bilinear_spectral_matches_kernel_when_localised():
    g = GridSpec(1, 128, 16.0)
    phi = gaussian(g, 0.7)
    F, G = _constant_traj(phi, (0, 0.5), 5), _constant_traj(phi, (1.0, 1.5), 5)
    a = V.bilinear_form(F, G, (0, 0.5), (1.0, 1.5), "spectral")
    b = V.bilinear_form(F, G, (0, 0.5), (1.0, 1.5), "kernel")
    assert abs(a - b) < 1e-8 * abs(a)


@given(random_fields(GridSpec(1, 16, 4.0)), random_fields(GridSpec(1, 16, 4.0)))
def test_bilinear_conjugate_symmetry(f, h):
    F, G = _constant_traj(f, (0, 1), 3), _constant_traj(h, (2, 3), 3)
    lhs = V.bilinear_form(F, G, (0, 1), (2, 3))
    rhs = V.bilinear_form(G, F, (2, 3), (0, 1))
    assert np.isclose(lhs, np.conj(rhs), rtol=1e-10, atol=1e-10)


def test_bilinear_rejects_bad_input():
    g = GridSpec(1, 16, 4.0)
    F = _constant_traj(gaussian(g), (0, 1), 3)
    G = _constant_traj(gaussian(GridSpec(1, 16, 5.0)), (2, 3), 3)
    with pytest.raises(ValueError):
        V.bilinear_form(F, G, (0, 1), (2, 3))
    with pytest.raises(ValueError):
        V.bilinear_form(F, F, (0, 1), (0, 1), method="nope")


@pytest.mark.parametrize("j", [-2, 0, 2])
def test_tj_kernel_matches_gaussian_overlap(j):
    sigma = 0.4
    g = GridSpec(1, 128, 6.0)
    phi = gaussian(g, sigma)
    sq = V.representative_square(j)
    F, G = _constant_traj(phi, sq.I, 17), _constant_traj(phi, sq.J, 17)
    got = V.bilinear_Tj(F, G, sq, method="kernel")
    expect = trapezoid_double(F.times, G.times, lambda tau: gaussian_overlap(tau, sigma))
    assert abs(got - expect) < 1e-8 * expect


def test_tj_scan_report():
    g = GridSpec(1, 64, 6.0)
    phi = gaussian(g, 0.4)
    rep = V.tj_decay_scan(phi, phi, [0, 1, 2], nodes=5)
    assert rep.beta == 0 and rep.target_slope == 0
    assert len(rep.ratios) == 3
    assert set(rep.to_dict()) >= {"slope", "beta", "abs_Tj", "ratios"}
