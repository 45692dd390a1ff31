"""Command line front end.

Exit codes: 0 success, 1 divergence or non-convergence, 2 assumption or
validation failure, 3 I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Sequence

from .artifacts import write_report_json, write_trajectory_csv
from .costs import global_optimum
from .errors import DivergenceError, OptConsError, ScenarioParseError
from .generator import check_gains, select_gains
from .graph import Digraph, build_laplacian
from .scenario import apply_overrides, build_agents, build_scenario, resolve_source
from .sim import run_closed_loop

log = logging.getLogger("optcons")

EXIT_OK, EXIT_RUNTIME, EXIT_ASSUMPTION, EXIT_IO = 0, 1, 2, 3


def _load(args: argparse.Namespace) -> dict:
    return apply_overrides(resolve_source(args.scenario), args.set)


def _seed(args: argparse.Namespace, doc: dict) -> int:
    return int(args.seed) if args.seed is not None else int(doc.get("seed", 0))


def _out_dir(args: argparse.Namespace) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ScenarioParseError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _emit(obj: dict, out: Path | None, filename: str) -> None:
    if out is not None:
        (out / filename).write_text(json.dumps(obj, indent=2) + "\n")


def cmd_spectrum(args: argparse.Namespace) -> int:
    doc = _load(args)
    try:
        graph = Digraph.from_json(doc["graph"])
    except KeyError as exc:
        raise ScenarioParseError("scenario has no 'graph' entry") from exc
    rep = build_laplacian(graph)
    print(f"lambda2 = {rep.lambda2:.12g}")
    print(f"lambdaN = {rep.lambdaN:.12g}")
    print(f"weight_balanced = {str(rep.weight_balanced).lower()}")
    print(f"strongly_connected = {str(rep.strongly_connected).lower()}")
    _emit(rep.to_json(), _out_dir(args), "spectrum.json")
    if not rep.satisfies_assumption:
        print("graph must be weight-balanced and strongly connected", file=sys.stderr)
        return EXIT_ASSUMPTION
    return EXIT_OK


def cmd_gains(args: argparse.Namespace) -> int:
    doc = _load(args)
    graph, _, _, costs = build_agents(doc, _seed(args, doc))
    rep = build_laplacian(graph)
    auto = select_gains(costs.l_lower, costs.l_upper, rep.lambda2, rep.lambdaN)
    if args.alpha is None and args.beta is None:
        gains = auto
    else:
        alpha = auto.alpha if args.alpha is None else args.alpha
        beta = auto.beta if args.beta is None else args.beta
        gains = check_gains(alpha, beta, costs.l_lower, costs.l_upper, rep.lambda2, rep.lambdaN)
    print(f"alpha = {gains.alpha:.12g}")
    print(f"beta = {gains.beta:.12g}")
    out = gains.to_json()
    out["bounds"] = {"alpha": auto.alpha, "beta": auto.beta}
    out["l_lower"], out["l_upper"] = costs.l_lower, costs.l_upper
    if gains.below_bound:
        msg = f"warning: gains below the sufficient bound (alpha >= {auto.alpha:g}, beta >= {auto.beta:g})"
        print(msg)
        out["warning"] = msg
    _emit(out, _out_dir(args), "gains.json")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    doc = _load(args)
    _, _, _, costs = build_agents(doc, _seed(args, doc))
    y_star = global_optimum(costs, tol=args.tol)
    print(f"y_star = {y_star:.12g}")
    _emit({"y_star": y_star, "tol": args.tol}, _out_dir(args), "oracle.json")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    doc = _load(args)
    sc = build_scenario(doc, _seed(args, doc))
    out = _out_dir(args)
    started = time.perf_counter()
    traj, report = run_closed_loop(sc)
    log.info("run %s seed=%s finished in %.2fs", sc.name, sc.seed, time.perf_counter() - started)
    if out is not None:
        write_trajectory_csv(traj, out / "trajectory.csv")
        write_report_json(report, out / "report.json")
    for w in report.warnings:
        print(f"warning: {w}")
    print(f"y_star = {report.y_star:.12g}")
    print("final |y_i - y_star| = " + ", ".join(f"{e:.3e}" for e in report.final_output_errors))
    print("theta(T) = " + ", ".join(f"{th:.4g}" for th in report.theta_final))
    print(f"semistable = {str(report.semistable).lower()}")
    return EXIT_OK if report.semistable else EXIT_RUNTIME


def _sweep_one(job: tuple[dict, int, str | None]) -> dict[str, Any]:
    doc, seed, out = job
    try:
        sc = build_scenario(doc, seed)
        traj, report = run_closed_loop(sc)
    except DivergenceError as exc:
        return {"seed": seed, "semistable": False, "diverged": True, "error": str(exc)}
    if out is not None:
        run_dir = Path(out) / f"seed_{seed}"
        run_dir.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(traj, run_dir / "trajectory.csv")
        write_report_json(report, run_dir / "report.json")
    return {
        "seed": seed,
        "semistable": report.semistable,
        "diverged": False,
        "max_final_error": max(report.final_output_errors),
        "theta_final": list(report.theta_final),
    }


def sweep(doc: dict, seeds: Sequence[int], out: Path | None = None, workers: int = 1) -> dict[str, Any]:
    """Run one scenario over several seeds; each run writes to its own directory."""
    jobs = [(doc, int(s), None if out is None else str(out)) for s in seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_sweep_one, jobs))
    else:
        runs = [_sweep_one(j) for j in jobs]
    failing = [r["seed"] for r in runs if not r["semistable"]]
    return {
        "scenario": doc.get("name", "scenario"),
        "n_seeds": len(runs),
        "n_semistable": len(runs) - len(failing),
        "failing_seeds": failing,
        "runs": runs,
    }


def cmd_sweep(args: argparse.Namespace) -> int:
    doc = _load(args)
    if args.n_seeds < 0:
        raise ScenarioParseError("--n-seeds must be non-negative")
    base = _seed(args, doc)
    # validate once up front so configuration errors surface as exit 2, not per seed
    if args.n_seeds:
        build_scenario(doc, base)
    out = _out_dir(args)
    summary = sweep(doc, range(base, base + args.n_seeds), out, args.workers)
    print(json.dumps({k: v for k, v in summary.items() if k != "runs"}))
    _emit(summary, out, "summary.json")
    return EXIT_OK if not summary["failing_seeds"] else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optcons", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--scenario", required=True, help="scenario JSON path or a shipped name (example1, example2, ...)")
        p.add_argument("--out", default=None, help="output directory for JSON/CSV artifacts")
        p.add_argument("--seed", type=int, default=None, help="run seed (defaults to the scenario's)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="dotted-path override, repeatable")

    p = sub.add_parser("spectrum", help="Laplacian spectrum and graph checks")
    common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("gains", help="generator gains from the sufficient bounds")
    common(p)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.set_defaults(func=cmd_gains)

    p = sub.add_parser("oracle", help="centralized optimum of the summed costs")
    common(p)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("run", help="simulate the closed loop")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run over consecutive seeds")
    common(p)
    p.add_argument("--n-seeds", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except OptConsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
