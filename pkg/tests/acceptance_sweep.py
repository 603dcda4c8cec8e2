"""Experiment-scale sweep behind the acceptance criteria.

Run directly to produce the reports: ``python3 tests/acceptance_sweep.py OUTDIR``.
The replication count can be lowered for a quick look with
``ZONALSCHED_ACCEPT_REPS``; the criteria are stated for 20.
"""
from __future__ import annotations

import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from zonalsched.harness import ExperimentConfig, iter_cells, read_csv, write_reports

REPS = int(os.environ.get("ZONALSCHED_ACCEPT_REPS", "20"))
ALL = "baseline,shortest,minimum,deterministic"

# (name, overrides); each block only runs the cells some criterion reads
BLOCKS = [
    ("wired_low", {"experiment.topologies": "tree,basic_mesh,cross_zone_mesh,centralized_mesh",
                   "experiment.schemes": "baseline", "experiment.load_points": "5..25:5"}),
    ("wired_45", {"experiment.topologies": "tree,basic_mesh,cross_zone_mesh,centralized_mesh",
                  "experiment.schemes": ALL, "experiment.load_points": "45"}),
    ("central_50", {"experiment.topologies": "centralized_mesh",
                    "experiment.schemes": "deterministic", "experiment.load_points": "50"}),
    ("cross_sweep", {"experiment.topologies": "cross_zone_mesh", "experiment.media": "wired,hybrid",
                     "experiment.schemes": ALL, "experiment.load_points": "5..60:5"}),
    ("central_hybrid_det", {"experiment.topologies": "centralized_mesh", "experiment.media": "hybrid",
                            "experiment.schemes": "deterministic", "experiment.load_points": "5..60:5"}),
    ("central_hybrid_usage", {"experiment.topologies": "centralized_mesh", "experiment.media": "hybrid",
                              "experiment.schemes": "baseline,shortest,minimum",
                              "experiment.load_points": "40..60:5"}),
]


def run(out: Path, reps: int = REPS, log=print) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    for name, overrides in BLOCKS:
        target = out / name
        if (target / "aggregate.csv").exists():
            continue
        cfg = ExperimentConfig.from_mapping({**overrides, "experiment.replications": str(reps),
                                             "output.per_task": "false"})
        t0 = time.time()
        reports = []
        for rep in iter_cells(cfg):
            rep.evaluated = None
            reports.append(rep)
        target.mkdir(exist_ok=True)
        write_reports(reports, target, per_task=False)
        log(f"{name}: {len(reports)} runs in {time.time() - t0:.0f} s")
    return out


def load_aggregate(out: Path) -> dict:
    """(scheme, topology, medium, N) -> aggregate row with float values."""
    table = {}
    for name, _ in BLOCKS:
        for row in read_csv(out / name / "aggregate.csv"):
            key = (row["scheme"], row["topology"], row["medium"], int(row["n_tasks"]))
            table[key] = {k: float(v) for k, v in row.items()
                          if k not in ("scheme", "topology", "medium")}
    return table


if __name__ == "__main__":
    run(Path(sys.argv[1]))
