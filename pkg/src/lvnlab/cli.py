"""Command-line experiment runner.

Each subcommand reads a TOML (or JSON) config, writes CSV/JSON/SVG outputs
into ``--out`` and always finishes with ``manifest.json``, also on failure.

Exit codes: 0 success, 2 config error, 3 numerical guard tripped,
4 non-contraction, 1 anything else.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from contextlib import contextmanager
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from . import __version__
from . import exponents as ex
from . import nls, verify
from .config import ConfigError, build_initial, config_echo, load_config
from .lattice import write_field
from .norms import MixedNormSpec, mixed_norm_series, write_norms_csv
from .propagator import propagate, propagate_kernel, rescale
from .svgplot import Figure

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_GUARD, EXIT_CONTRACTION = 0, 1, 2, 3, 4


def _plain(obj):
    """JSON-safe copy: fractions and infinities become strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Run:
    """Output directory bookkeeping: file registry and phase timings."""

    def __init__(self, out: Path):
        self.out = out
        self.files: list[str] = []
        self.timings: dict[str, float] = {}
        self.summary: dict = {}

    @contextmanager
    def phase(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = round(time.perf_counter() - start, 6)

    def path(self, name: str) -> Path:
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        if name not in self.files:
            self.files.append(name)
        return p

    def write_json(self, name: str, obj) -> None:
        with open(self.path(name), "w") as fh:
            json.dump(_plain(obj), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csv(self, name: str, header, rows) -> None:
        with open(self.path(name), "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(v if isinstance(v, str) else f"{v:.10g}" for v in row) + "\n")

    def digests(self) -> dict[str, str]:
        return {name: _sha256(self.out / name) for name in sorted(self.files) if (self.out / name).exists()}


def cmd_propagate(cfg, run: Run, seed: int) -> None:
    grid = cfg.grid
    with run.phase("setup"):
        f = build_initial(grid, cfg.initial, seed)
        write_field(run.path("field_input.bpw"), f)
    norm0 = f.norm()
    rows, drifts, agreements = [], [], []
    with run.phase("propagate"):
        for k, t in enumerate(cfg.times):
            u = propagate(f, t)
            write_field(run.path(f"field_t{k:03d}.bpw"), u)
            drift = abs(u.norm() - norm0) / norm0 if norm0 > 0 else 0.0
            drifts.append(drift)
            row = [t, u.norm(), drift]
            if cfg.kernel_oracle:
                if t == 0:
                    agree = 0.0
                else:
                    uk = propagate_kernel(f, t)
                    scale = np.abs(u.values).max()
                    agree = float(np.abs(u.values - uk.values).max() / scale) if scale > 0 else 0.0
                agreements.append(agree)
                row.append(agree)
            rows.append(row)
    header = ["t", "norm", "drift"] + (["kernel_agreement"] if cfg.kernel_oracle else [])
    run.write_csv("propagate.csv", header, rows)
    run.summary = {"max_norm_drift": max(drifts)}
    if cfg.kernel_oracle:
        run.summary["max_kernel_disagreement"] = max(agreements)


def cmd_decay(cfg, run: Run, seed: int) -> None:
    f = build_initial(cfg.grid, cfg.initial, seed)
    spec = MixedNormSpec(cfg.r1, cfg.r2)
    with run.phase("fit"):
        report = verify.decay_fit(f, spec, tuple(cfg.window), cfg.samples, cfg.guard)
    data = report.to_dict()
    data["grid"] = cfg.grid.as_dict()
    run.write_json("decay.json", data)
    write_norms_csv(run.path("decay.csv"), report.times, report.norms, spec)
    t = np.asarray(report.times)
    fit = np.exp(np.polyfit(np.log(t), np.log(report.norms), 1)[1]) * t**report.exponent_fitted
    fig = Figure(f"decay in {spec.label}", "t", "norm", logx=True, logy=True)
    fig.add("measured", t, report.norms, style="both").add(f"slope {report.exponent_fitted:.3f}", t, fit)
    fig.save(run.path("decay.svg"))
    run.summary = {"slope": report.exponent_fitted, "target": float(report.exponent_target),
                   "truncated": report.truncated}


def cmd_region(cfg, run: Run, seed: int) -> None:
    with run.phase("scan"):
        rows = ex.region_scan(cfg.n, cfg.bound)
    ex.write_region_csv(run.path("region.csv"), rows)
    ok = [r for r in rows if r.admissible]
    excluded = [r for r in rows if r.reason == "excluded endpoint"]
    diagonal = [r for r in ok if r.inv_r1 == r.inv_r2]
    fig = Figure(f"admissible (1/r1, 1/r2), n={cfg.n}", "1/r1", "1/r2")
    fig.add("admissible", [r.inv_r1 for r in ok], [r.inv_r2 for r in ok], style="points")
    if excluded:
        fig.add("excluded", [r.inv_r1 for r in excluded], [r.inv_r2 for r in excluded], style="points", color="#d62728")
    fig.save(run.path("region.svg"))
    summary = {
        "n": cfg.n, "bound": cfg.bound, "points": len(rows), "admissible": len(ok),
        "excluded": [{"inv_q": r.inv_q, "inv_r1": r.inv_r1, "inv_r2": r.inv_r2} for r in excluded],
        "diagonal_admissible": len(diagonal),
    }
    if cfg.alpha is not None:
        alpha = ex.as_fraction(cfg.alpha)
        with run.phase("res"):
            feasible, vertices = ex.res_feasible(cfg.n, alpha)
            hits = ex.res_scan(cfg.n, alpha, cfg.bound)
        run.write_csv("res.csv", ["inv_q", "inv_r1", "inv_r2"],
                      [[str(t.inv_q), str(t.inv_r1), str(t.inv_r2)] for t in hits])
        summary["res"] = {"alpha": alpha, "feasible": feasible, "grid_hits": len(hits),
                          "vertices": [list(v.reciprocals()) for v in vertices]}
    run.write_json("region.json", summary)
    run.summary = {k: summary[k] for k in ("points", "admissible")}


def cmd_whitney(cfg, run: Run, seed: int) -> None:
    with run.phase("decompose"):
        squares = verify.whitney_decompose(tuple(cfg.window), tuple(cfg.j_range))
        checks = verify.whitney_checks(squares, tuple(cfg.window), cfg.j_range[0])
    run.write_csv("whitney_squares.csv", ["j", "s0", "s1", "t0", "t1", "dist_over_side"],
                  [[q.j, *q.I, *q.J, q.distance / q.side] for q in squares])
    phi = build_initial(cfg.grid, cfg.initial, seed)
    with run.phase("tj_scan"):
        scan = verify.tj_decay_scan(phi, phi, cfg.scan_js, cfg.nodes, cfg.inv_a, cfg.inv_a_tilde,
                                    cfg.inv_r2, cfg.method)
    run.write_json("whitney.json", {"checks": checks, "scan": scan.to_dict(), "grid": cfg.grid.as_dict()})
    js = np.asarray(scan.js, dtype=float)
    y = np.log2(scan.ratios)
    b, a = np.polyfit(js, y, 1)
    fig = Figure("bilinear pieces", "j", "log2 |T_j| / norms")
    fig.add("measured", js, y, style="both").add(f"slope {b:.3f}", js, a + b * js)
    fig.save(run.path("whitney.svg"))
    run.summary = {"squares": len(squares), "checks_ok": bool(checks["ratios_ok"] and not checks["overlap"]
                                                              and checks["coverage_ok"]),
                   "slope": scan.slope, "target_slope": scan.target_slope}


def cmd_strichartz(cfg, run: Run, seed: int) -> None:
    triple = ex.ExponentTriple.parse(cfg.triple)
    f = build_initial(cfg.grid, cfg.initial, seed)
    rows = []
    with run.phase("quotients"):
        for lam in cfg.lambdas:
            T = cfg.horizon / lam**2
            rows.append([lam, T, verify.strichartz_ratio(rescale(f, lam), triple, T, cfg.steps)])
    qs = [r[2] for r in rows]
    spread = (max(qs) - min(qs)) / min(qs)
    run.write_csv("strichartz.csv", ["lambda", "horizon", "quotient"], rows)
    run.write_json("strichartz.json", {"triple": cfg.triple, "lambdas": cfg.lambdas, "quotients": qs,
                                       "spread": spread, "grid": cfg.grid.as_dict()})
    run.summary = {"spread": spread}


def cmd_solve(cfg, run: Run, seed: int) -> None:
    triple = ex.ExponentTriple.parse(cfg.triple)
    f = build_initial(cfg.grid, cfg.initial, seed)
    problem = nls.NlsProblem(f, cfg.alpha, cfg.sign, cfg.horizon, cfg.steps)
    with run.phase("picard"):
        report, u = nls.wellposedness_report(problem, triple, C=cfg.constant, max_iter=cfg.max_iter, tol=cfg.tol)
    data = report.to_dict()
    data["grid"] = cfg.grid.as_dict()
    if u is None:
        run.write_json("solve.json", data)
        run.summary = {"in_regime": False}
        return
    keep = sorted(set(range(0, len(u), cfg.save_every)) | {len(u) - 1})
    data["saved_fields"] = []
    for k in keep:
        name = f"trajectory/u_{k:04d}.bpw"
        write_field(run.path(name), u[k])
        data["saved_fields"].append({"index": k, "t": float(u.times[k]), "file": name})
    l2 = nls.l2_series(u)
    mixed = mixed_norm_series(u, MixedNormSpec(triple.r1, triple.r2))
    header, cols = ["t", "l2", "mixed"], [u.times, l2, mixed]
    if cfg.cross_check:
        with run.phase("split_step"):
            ss = nls.split_step_solve(replace(problem, horizon=report.horizon))
        diff = nls.l2_series(type(u)(u.grid, u.times, u.values - ss.values))
        header.append("split_step_diff")
        cols.append(diff)
        data["split_step_sup_l2_diff"] = float(diff.max())
    data["times"] = u.times.tolist()
    data["l2"] = l2.tolist()
    run.write_csv("solve.csv", header, zip(*cols))
    run.write_json("solve.json", data)
    ks = np.arange(1, len(report.distances) + 1)
    fig = Figure("Picard distances", "iteration", "d(u_k, u_k-1)", logy=True)
    fig.add("distance", ks, report.distances, style="both")
    fig.save(run.path("ledger.svg"))
    run.summary = {"in_regime": True, "horizon": report.horizon, "contraction_factor": report.contraction_factor,
                   "iterations": report.iterations}


COMMANDS = {
    "propagate": cmd_propagate,
    "decay": cmd_decay,
    "region": cmd_region,
    "whitney": cmd_whitney,
    "strichartz": cmd_strichartz,
    "solve": cmd_solve,
}

HELP = {
    "propagate": "evolve initial data freely, check unitarity and optionally the kernel oracle",
    "decay": "fit the dispersive decay exponent of a mixed norm",
    "region": "label rational exponent triples as admissible or not",
    "whitney": "Whitney decomposition checks and bilinear-piece decay scan",
    "strichartz": "Strichartz quotient across a scaling family",
    "solve": "local nonlinear solution by Picard iteration with a split-step cross-check",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML or JSON config file")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    common.add_argument("--seed", type=int, default=0, help="seed for random data families")
    common.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key; dotted keys reach nested tables")
    parser = argparse.ArgumentParser(prog="lvnlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name], description=HELP[name])
    return parser


def _load(command: str, path: Path | None, overrides):
    if path is not None and path.suffix == ".json":
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        items = [f"{k}={json.dumps(v)}" for k, v in data.items() if not isinstance(v, dict)]
        for k, v in data.items():
            if isinstance(v, dict):
                items += [f"{k}.{kk}={json.dumps(vv)}" for kk, vv in v.items()]
        return load_config(command, None, items + list(overrides))
    return load_config(command, path, overrides)


def run_command(args) -> int:
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    run = Run(out)
    manifest = {"tool": "lvnlab", "version": __version__, "command": args.command, "seed": args.seed,
                "threads": args.threads}
    code = EXIT_OK
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = _load(args.command, args.config, args.set)
        manifest["config"] = config_echo(cfg)
        if hasattr(cfg, "grid"):
            manifest["grid"] = cfg.grid.as_dict()
        run.write_json("config.json", manifest["config"])
        with sfft.set_workers(args.threads):
            COMMANDS[args.command](cfg, run, args.seed)
    except (ConfigError, ex.ExponentError) as exc:
        code = EXIT_CONFIG
        manifest["error"] = {"class": type(exc).__name__, "message": str(exc)}
    except (verify.WrapAroundError, nls.BlowupError) as exc:
        code = EXIT_GUARD
        manifest["error"] = {"class": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, nls.BlowupError):
            manifest["error"]["last_time"] = exc.last_time
    except (nls.NonContractionError, nls.ConvergenceError) as exc:
        code = EXIT_CONTRACTION
        manifest["error"] = {"class": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, nls.NonContractionError):
            manifest["error"]["factor"] = exc.factor
    except Exception as exc:  # still leave a manifest behind
        code = EXIT_FAIL
        manifest["error"] = {"class": type(exc).__name__, "message": str(exc)}
    manifest["status"] = "ok" if code == EXIT_OK else "error"
    manifest["exit_code"] = code
    manifest["summary"] = run.summary
    manifest["timings"] = run.timings
    manifest["outputs"] = run.digests()
    with open(out / "manifest.json", "w") as fh:
        json.dump(_plain(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if code != EXIT_OK:
        print(f"lvnlab {args.command}: {manifest['error']['class']}: {manifest['error']['message']}", file=sys.stderr)
    else:
        print(json.dumps(_plain(run.summary), sort_keys=True))
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run_command(args)


if __name__ == "__main__":
    sys.exit(main())
