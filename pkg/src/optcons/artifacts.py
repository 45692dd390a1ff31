"""Writers for run artifacts: trajectory CSV and report JSON."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .sim import RunReport, Trajectory


def trajectory_header(n: int) -> list[str]:
    cols = ["t"]
    for prefix in ("y", "r", "u", "theta", "v"):
        cols += [f"{prefix}_{i + 1}" for i in range(n)]
    return cols


def write_trajectory_csv(traj: Trajectory, path: str | Path) -> Path:
    """One row per logged instant; ``repr`` keeps full double precision."""
    path = Path(path)
    n = traj.outputs.shape[1]
    blocks = [traj.outputs, traj.r, traj.inputs, traj.theta, traj.v]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trajectory_header(n))
        for k, t in enumerate(traj.times):
            row = [repr(float(t))]
            for block in blocks:
                row.extend(repr(float(x)) for x in block[k])
            writer.writerow(row)
    return path


def read_trajectory_csv(path: str | Path) -> tuple[list[str], list[list[float]]]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [[float(x) for x in row] for row in reader]


def write_report_json(report: RunReport, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(report.to_json(), indent=2) + "\n")
    return path
