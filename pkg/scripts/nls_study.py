"""Split-step convergence order and Picard contraction against the horizon.

    python scripts/nls_study.py [--out results/nls_study] [--amplitude 0.1]

Writes convergence.csv (dt, error vs a 4x finer run, local order) and
contraction.csv (horizon / proposed horizon, measured contraction factor,
iterations, or the error class when Picard fails), plus an SVG of each.
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from lvnlab import exponents as ex
from lvnlab import nls
from lvnlab.lattice import GridSpec
from lvnlab.norms import Trajectory, sobolev_y_norm
from lvnlab.svgplot import Figure


def sup_l2_diff(u, v):
    return float(nls.l2_series(Trajectory(u.grid, u.times, u.values - v.values)).max())


def convergence(f, alpha, sign, horizon, steps_list):
    rows = []
    for steps in steps_list:
        p = nls.NlsProblem(f, alpha, sign, horizon, steps)
        fine = nls.split_step_solve(p, 4 * steps)
        coarse = nls.split_step_solve(p)
        err = sup_l2_diff(coarse, Trajectory(fine.grid, fine.times[::4], fine.values[::4]))
        rows.append([horizon / steps, err])
    for k in range(len(rows)):
        rows[k].append(np.log2(rows[k - 1][1] / rows[k][1]) if k else float("nan"))
    return rows


def contraction(f, alpha, sign, triple, C, multiples, steps):
    T0, _ = nls.propose_horizon(sobolev_y_norm(f, 2, 1, r1=2), C, alpha, f.grid.n)
    rows = []
    for m in multiples:
        p = nls.NlsProblem(f, alpha, sign, m * T0, steps)
        try:
            _, ledger = nls.picard_solve(p, triple, max_iter=80)
            rows.append([m, m * T0, nls.contraction_factor(ledger, 1e-10), len(ledger), ""])
        except (nls.NonContractionError, nls.ConvergenceError) as exc:
            rows.append([m, m * T0, getattr(exc, "factor", float("nan")), "", type(exc).__name__])
    return rows


def write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("results/nls_study"))
    p.add_argument("--amplitude", type=float, default=0.1)
    p.add_argument("--sign", type=int, default=1)
    p.add_argument("--points", type=int, default=64)
    args = p.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    grid = GridSpec(1, args.points, 8.0)
    f = nls.gaussian_family(grid, (1.0,))[0] * args.amplitude
    triple = ex.ExponentTriple.parse(["1/6", "1/3", "1/3"])
    C = nls.calibrate_constant(f, triple)

    conv = convergence(f * 10, 2.0, args.sign, 0.5, [32, 64, 128, 256])
    write(args.out / "convergence.csv", ["dt", "error", "order"], conv)
    Figure("split-step self-convergence", "dt", "sup_t L2 error", logx=True, logy=True) \
        .add("error", [r[0] for r in conv], [r[1] for r in conv], style="both") \
        .save(args.out / "convergence.svg")

    multiples = [0.25, 0.5, 1, 2, 4, 8, 16, 32]
    con = contraction(f, 2.0, args.sign, triple, C, multiples, 128)
    write(args.out / "contraction.csv", ["multiple", "horizon", "factor", "iterations", "error"], con)
    Figure("Picard contraction against horizon", "T / proposed T", "contraction factor", logx=True, logy=True) \
        .add("factor", [r[0] for r in con], [r[2] for r in con], style="both") \
        .save(args.out / "contraction.svg")

    print(f"C = {C:.4f}")
    for r in conv:
        print(f"dt={r[0]:.5f} err={r[1]:.3e} order={r[2]:.3f}")
    for r in con:
        print(f"T/T0={r[0]:g} factor={r[2]:.3e} {r[4] or f'{r[3]} iterations'}")


if __name__ == "__main__":
    main()
