"""Seed sweep over a scenario, printing one line per seed.

    python3 scripts/seed_sweep.py example1 --n-seeds 10 --workers 1
"""

import argparse
import json
from pathlib import Path

from optcons.cli import sweep
from optcons.scenario import resolve_source


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("scenario", help="shipped name or path to a scenario JSON")
    parser.add_argument("--n-seeds", type=int, default=10)
    parser.add_argument("--first-seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", type=Path, default=None)
    args = parser.parse_args()

    doc = resolve_source(args.scenario)
    summary = sweep(doc, range(args.first_seed, args.first_seed + args.n_seeds), args.out, args.workers)
    for run in summary["runs"]:
        if run["diverged"]:
            print(f"seed {run['seed']:3d}  diverged: {run['error']}")
        else:
            theta = ", ".join(f"{t:.3g}" for t in run["theta_final"])
            print(f"seed {run['seed']:3d}  max error {run['max_final_error']:.2e}  theta(T) [{theta}]  ok={run['semistable']}")
    print(f"{summary['n_semistable']}/{summary['n_seeds']} semistable")
    if args.out is not None:
        (args.out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")


if __name__ == "__main__":
    main()
