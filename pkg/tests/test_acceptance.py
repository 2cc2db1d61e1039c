"""The ten acceptance criteria, each at its stated tolerance and runtime budget.

Every test logs one ``PASS criterion N: ...`` or ``FAIL criterion N: ...`` line;
the lines are collected into a summary section at the end of the pytest run.
"""
import random
import time
from fractions import Fraction as Fr
from pathlib import Path

import numpy as np
import pytest

from lvnlab import exponents as ex
from lvnlab import nls
from lvnlab import verify as V
from lvnlab.config import build_initial, load_config
from lvnlab.lattice import BipartiteField, GridSpec, sample
from lvnlab.norms import MixedNormSpec, Trajectory
from lvnlab.propagator import propagate, propagate_kernel, rescale
from oracles import gaussian_product_evolution

pytestmark = pytest.mark.acceptance

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def verdict(log, k, ok, elapsed, budget, detail):
    ok = bool(ok) and elapsed < budget
    log(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail} [{elapsed:.2f} s of {budget} s]")
    assert ok, detail


def test_criterion_1_unitarity(acceptance_log):
    t0 = time.perf_counter()
    g = GridSpec(1, 64, 16.0)
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(100):
        f = BipartiteField(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
        n0 = f.norm()
        for t in (0.1, 1.0, 10.0):
            worst = max(worst, abs(propagate(f, t).norm() - n0) / n0)
    verdict(acceptance_log, 1, worst <= 1e-12, time.perf_counter() - t0, 5,
            f"max relative L2 drift {worst:.2e} over 100 fields (<= 1e-12)")


def test_criterion_2_kernel_oracle(acceptance_log):
    t0 = time.perf_counter()
    g = GridSpec(1, 64, 16.0)
    f = sample(g, lambda x, y: np.exp(-(x**2 + y**2) / 2))
    a, b = propagate(f, 0.5).values, propagate_kernel(f, 0.5).values
    err = np.abs(a - b).max() / np.abs(a).max()
    verdict(acceptance_log, 2, err <= 1e-6, time.perf_counter() - t0, 10,
            f"multiplier vs kernel quadrature relative Linf {err:.2e} (<= 1e-6)")


def test_criterion_3_gaussian_closed_form(acceptance_log):
    t0 = time.perf_counter()
    g = GridSpec(1, 128, 16.0)
    f = sample(g, lambda x, y: np.exp(-(x**2 + y**2) / 2))
    X, Y = np.meshgrid(g.coords, g.coords, indexing="ij")
    worst = 0.0
    for t in (0.25, 0.5, 1.0):
        exact = gaussian_product_evolution(X, Y, t)
        worst = max(worst, np.abs(propagate(f, t).values - exact).max() / np.abs(exact).max())
    verdict(acceptance_log, 3, worst <= 1e-8, time.perf_counter() - t0, 5,
            f"closed-form Gaussian relative Linf {worst:.2e} (<= 1e-8)")


def test_criterion_4_decay_exponents(acceptance_log):
    t0 = time.perf_counter()
    results = {}
    for case, target, tol in (("a", -1.0, 0.05), ("b", -0.5, 0.05), ("c", 0.0, 0.02)):
        cfg = load_config("decay", CONFIGS / f"decay_{case}.toml")
        assert (cfg.n, cfg.points_per_axis, cfg.half_length, cfg.window) == (1, 256, 64.0, [1.0, 16.0])
        rep = V.decay_fit(build_initial(cfg.grid, cfg.initial), MixedNormSpec(cfg.r1, cfg.r2),
                          tuple(cfg.window), cfg.samples, cfg.guard)
        results[case] = (rep.exponent_fitted, target, tol, rep.fitted_window)
    ok = all(abs(s - tgt) <= tol for s, tgt, tol, _ in results.values())
    detail = ", ".join(f"({c}) {s:+.4f} vs {t:+.1f}+-{tol} on t in [{w[0]:g}, {w[1]:g}]"
                       for c, (s, t, tol, w) in results.items())
    verdict(acceptance_log, 4, ok, time.perf_counter() - t0, 60, "decay slopes " + detail)


def _key(r):
    return tuple((f.numerator, f.denominator) for f in (r.inv_q, r.inv_r1, r.inv_r2))


def test_criterion_5_admissibility_calculus(acceptance_log):
    t0 = time.perf_counter()
    problems = []
    # exclusions and point B, keyed by (numerator, denominator) pairs of (1/q, 1/r1, 1/r2)
    named = {1: {((1, 2), (0, 1), (0, 1)): "excluded endpoint"},
             2: {((1, 2), (0, 1), (1, 2)): "excluded endpoint"}}
    point_b = ((0, 1), (1, 2), (1, 2))
    for n in (1, 2, 3):
        seen = {}
        for r in ex.region_scan(n, 60):
            q, a, b = r.inv_q, r.inv_r1, r.inv_r2
            if q.numerator == 0 or q.denominator == 2:
                seen[_key(r)] = r
            if not r.admissible:
                continue
            qn, qd, an, ad, bn, bd = q.numerator, q.denominator, a.numerator, a.denominator, b.numerator, b.denominator
            if not (0 <= qn and 2 * qn <= qd and an * bd <= bn * ad and 2 * bn <= bd):
                problems.append(f"n={n} out of range {r}")
            # 2/q = n(1 - 1/r1 - 1/r2), cross-multiplied so it stays in exact integers
            lhs = 2 * qn * ad * bd
            if lhs != n * qd * (ad * bd - an * bd - bn * ad):
                problems.append(f"n={n} off the scaling plane {r}")
            if (an, ad) == (bn, bd) and 2 * qn * ad != n * qd * (ad - 2 * an):
                problems.append(f"n={n} diagonal {r}")
        for key, reason in named.get(n, {}).items():
            if seen[key].reason != reason:
                problems.append(f"n={n} exclusion {key} labelled {seen[key].reason!r}")
        if not seen[point_b].admissible:
            problems.append(f"point B not admissible for n={n}")
    for n in range(1, 9):
        if not ex.is_admissible(n, ex.ExponentTriple(0, Fr(1, 2), Fr(1, 2))):
            problems.append(f"point B rejected by is_admissible for n={n}")
    verdict(acceptance_log, 5, not problems, time.perf_counter() - t0, 5,
            "region scans at bound 60 for n=1,2,3 " + ("consistent" if not problems else "; ".join(problems[:3])))


def test_criterion_6_beta_identities(acceptance_log):
    t0 = time.perf_counter()
    rnd = random.Random(6)
    checked, bad = 0, []
    while checked < 20:
        n = rnd.randint(2, 6)
        inv_r2 = Fr(rnd.randint(0, 60), 120)
        inv_r1 = 1 - Fr(1, n) - inv_r2
        eps = Fr(1, rnd.randint(50, 1000))
        a0, a1 = ex.perturbed_exponents(inv_r1, eps)
        if not (0 <= a0 and a1 <= 1 and inv_r1 <= inv_r2):
            continue
        checked += 1
        if ex.beta(n, inv_r1, inv_r1, inv_r2) != 0:
            bad.append(("beta(r1,r1)", n, inv_r1, inv_r2))
        if ex.beta(n, a0, a0, inv_r2) != 2 * n * eps:
            bad.append(("beta(a0,a0)", n, inv_r1, inv_r2, eps))
        if ex.beta(n, a0, a1, inv_r2) != -n * eps:
            bad.append(("beta(a0,a1)", n, inv_r1, inv_r2, eps))
    verdict(acceptance_log, 6, not bad, time.perf_counter() - t0, 1,
            f"beta(r1,r1)=0, beta(a0,a0)=2n eps, beta(a0,a1)=-n eps exact on {checked} random cases"
            + (f"; failures {bad[:2]}" if bad else ""))


def test_criterion_7_whitney(acceptance_log):
    t0 = time.perf_counter()
    cfg = load_config("whitney", CONFIGS / "whitney.toml")
    assert cfg.n == 1 and cfg.points_per_axis == 128 and cfg.scan_js == [-2, -1, 0, 1, 2, 3]
    squares = V.whitney_decompose(tuple(cfg.window), tuple(cfg.j_range))
    chk = V.whitney_checks(squares, tuple(cfg.window), cfg.j_range[0])
    phi = build_initial(cfg.grid, cfg.initial)
    scan = V.tj_decay_scan(phi, phi, cfg.scan_js, cfg.nodes, cfg.inv_a, cfg.inv_a_tilde, cfg.inv_r2, cfg.method)
    slope_ok = abs(scan.slope - scan.target_slope) <= 0.15
    ok = chk["ratios_ok"] and not chk["overlap"] and chk["coverage_ok"] and slope_ok
    verdict(acceptance_log, 7, ok, time.perf_counter() - t0, 120,
            f"{len(squares)} squares, dist/|I| in [{chk['ratio_min']:g}, {chk['ratio_max']:g}], "
            f"overlap={chk['overlap']}, coverage_ok={chk['coverage_ok']}; "
            f"|T_j| slope {scan.slope:+.4f} vs -beta {scan.target_slope:+.1f} (+-0.15)")


def test_criterion_8_strichartz_scaling(acceptance_log):
    t0 = time.perf_counter()
    cfg = load_config("strichartz", CONFIGS / "strichartz.toml")
    triple = ex.ExponentTriple.parse(cfg.triple)
    assert cfg.n == 1 and ex.is_admissible(1, triple)
    f = build_initial(cfg.grid, cfg.initial)
    qs = [V.strichartz_ratio(rescale(f, lam), triple, cfg.horizon / lam**2, cfg.steps) for lam in (0.5, 1, 2, 4)]
    spread = (max(qs) - min(qs)) / min(qs)
    verdict(acceptance_log, 8, spread <= 0.05, time.perf_counter() - t0, 60,
            f"quotient spread {spread:.2e} across lambda in {{1/2, 1, 2, 4}} (<= 5%)")


def test_criterion_9_nonlinear_solver(acceptance_log):
    t0 = time.perf_counter()
    cfg = load_config("solve", CONFIGS / "solve.toml")
    assert (cfg.n, cfg.alpha, cfg.sign) == (1, 2.0, 1) and cfg.constant is None
    triple = ex.ExponentTriple.parse(cfg.triple)
    f = build_initial(cfg.grid, cfg.initial)
    problem = nls.NlsProblem(f, cfg.alpha, cfg.sign, cfg.horizon, cfg.steps)

    report, u = nls.wellposedness_report(problem, triple, max_iter=cfg.max_iter, tol=cfg.tol)
    run = nls.NlsProblem(f, cfg.alpha, cfg.sign, report.horizon, 256)
    ss = nls.split_step_solve(run)
    mass = nls.l2_series(ss)
    drift = float(np.max(np.abs(mass - mass[0])) / mass[0])
    diff = float(nls.l2_series(Trajectory(u.grid, u.times, u.values - ss.values)).max())

    g = GridSpec(1, 64, 16.0)
    psi = np.exp(-(g.coords**2) / 2 + 0.5j * g.coords)
    linear = nls.NlsProblem(BipartiteField(g, np.outer(psi, psi.conj())), 2.0, 0, 1.0, 32)
    v, _ = nls.picard_solve(linear, triple)
    prod = 0.0
    for k, t in enumerate(v.times):
        psi_t = np.fft.ifft(np.exp(-1j * t * g.wavenumbers**2) * np.fft.fft(psi))
        err = v.values[k] - np.outer(psi_t, psi_t.conj())
        prod = max(prod, float(np.sqrt(g.factor_weight**2 * np.sum(np.abs(err) ** 2))))

    parts = [
        (drift <= 1e-10, f"(i) mass drift {drift:.1e}"),
        (report.contraction_factor <= 0.5,
         f"(ii) contraction ratio {report.contraction_factor:.2e} at T={report.horizon:.4f} with C={report.constant:.3f}"),
        (diff <= 1e-4, f"(iii) Picard vs split-step {diff:.1e}"),
        (prod <= 1e-10, f"(iv) product reduction {prod:.1e}"),
    ]
    verdict(acceptance_log, 9, all(p[0] for p in parts), time.perf_counter() - t0, 120,
            "; ".join(p[1] for p in parts))


def _valid_dual_pool(bound=12):
    pool = []
    grid = ex.rational_grid(bound)
    for n in (2, 3, 4):
        for alpha in (Fr(1, 4), Fr(1, 3), Fr(1, 2), Fr(2, 3), Fr(1), Fr(3, 2)):
            for i1 in grid:
                for i2 in grid:
                    iq = ex.admissible_q(n, i1, i2)
                    if iq < 0:
                        continue
                    t = ex.ExponentTriple(iq, i1, i2)
                    if ex.is_admissible(n, t) and ex.time_gap(n, alpha) > 0:
                        pool.append((n, alpha, t))
    return pool


def test_criterion_10_dual_and_res(acceptance_log):
    t0 = time.perf_counter()
    rnd = random.Random(10)
    pool = _valid_dual_pool()
    checked, bad = 0, []
    while checked < 50:
        n, alpha, t = rnd.choice(pool)
        try:
            out = ex.dual_triple(n, alpha, t)
        except ex.ExponentError:
            continue
        checked += 1
        if not ((1 - out.dual.inv_q) - t.inv_q == (2 + alpha - n * alpha) / 2 == out.gap):
            bad.append((n, alpha, str(t)))
    agree = []
    for alpha in (Fr(1, 4), Fr(1, 3), Fr(1, 2)):
        ok, _ = ex.res_feasible(3, alpha)
        hits = ex.res_scan(3, alpha, 60)
        agree.append((alpha, ok, len(hits), ok == bool(hits)))
    good = not bad and all(a[3] for a in agree)
    verdict(acceptance_log, 10, good, time.perf_counter() - t0, 5,
            f"gap identity exact on {checked} dual triples; res feasibility vs bound-60 scan "
            + ", ".join(f"alpha={a}: {ok}/{h} hits" for a, ok, h, _ in agree))
