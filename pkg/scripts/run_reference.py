"""Run every shipped config through the CLI and print one summary line each.

    python scripts/run_reference.py [--out results] [--only decay_a solve]

Each config gets its own output directory named after the file stem.
"""
import argparse
import json
import sys
from pathlib import Path

from lvnlab.cli import main as lvnlab

ROOT = Path(__file__).resolve().parent.parent


def command_for(stem: str) -> str:
    head = stem.split("_")[0]
    return "region" if head == "res" else head


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=ROOT / "results")
    p.add_argument("--only", nargs="*", help="config stems to run (default: all)")
    args = p.parse_args(argv)

    configs = sorted((ROOT / "configs").glob("*.toml"))
    if args.only:
        configs = [c for c in configs if c.stem in args.only]
    worst = 0
    for cfg in configs:
        out = args.out / cfg.stem
        code = lvnlab([command_for(cfg.stem), "--config", str(cfg), "--out", str(out)])
        summary = json.loads((out / "manifest.json").read_text()).get("summary", {})
        print(f"{cfg.stem:<12} exit={code} {json.dumps(summary, sort_keys=True)}", file=sys.stderr)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
