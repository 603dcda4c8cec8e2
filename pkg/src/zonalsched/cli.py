"""Command line entry point: ``zonalsched run|validate-config|oracle-check|defaults``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from .harness import ConfigError, ExperimentConfig, OutputDirError, default_config_text, run_experiment
from .scheduling import NetworkModel, SchedulerKind
from .topology import TopologyKind

log = logging.getLogger("zonalsched")


def _load(path) -> ExperimentConfig:
    return ExperimentConfig.from_file(path) if path else ExperimentConfig.from_mapping({})


def cmd_run(args) -> int:
    try:
        cfg = _load(args.config)
        changes = {}
        if args.seed is not None:
            changes["base_seed"] = args.seed
        if args.scheme:
            changes["schemes"] = tuple(SchedulerKind(s) for s in args.scheme)
        if args.topology:
            changes["topologies"] = tuple(TopologyKind(t) for t in args.topology)
        if args.tasks:
            changes["load_points"] = tuple(int(x) for x in args.tasks.split(","))
        if args.replications is not None:
            changes["replications"] = args.replications
        cfg = replace(cfg, **changes)
    except (ConfigError, ValueError) as e:
        print(f"invalid config: {e}", file=sys.stderr)
        return 1

    def progress(rep):
        log.info("%s %s %s N=%d seed=%d sat=%.3f", rep.topology.value, rep.medium.value,
                 rep.scheme.value, rep.n_tasks, rep.seed, rep.satisfaction_ratio)

    try:
        reports = run_experiment(cfg, args.out, progress=progress)
    except OutputDirError as e:
        print(str(e), file=sys.stderr)
        return 2
    print(f"{len(reports)} runs written to {args.out or cfg.out_dir}")
    return 0


def cmd_validate(args) -> int:
    try:
        cfg = _load(args.config)
    except ConfigError as e:
        print(f"invalid config: {e}", file=sys.stderr)
        return 1
    cells = len(cfg.topologies) * len(cfg.media) * len(cfg.load_points) * len(cfg.schemes)
    print(f"ok: {cells} cells x {cfg.replications} replications")
    return 0


def cmd_oracle_check(args) -> int:
    """Compare GA and exhaustive optima on small random instances."""
    from .channel import ChannelConfig
    from .oracle import BudgetExceeded, NoFeasibleSchedule, brute_force_solve
    from .solver import GaParams, Problem, solve
    from .topology import TopologyParams, build_topology
    from .workload import WorkloadConfig, generate_tasks

    rng = np.random.default_rng(args.seed)
    frozen = ChannelConfig(fading="frozen")
    checked = matched = 0
    attempts = 0
    while checked < args.instances and attempts < 50 * args.instances:
        attempts += 1
        kind = TopologyKind(rng.choice([k.value for k in TopologyKind]))
        medium = rng.choice(["wired", "hybrid"])
        n = int(rng.integers(1, args.max_tasks + 1))
        s = int(rng.integers(2**31))
        top = build_topology(kind, medium_mode=medium, params=TopologyParams(seed=s))
        tasks = generate_tasks(WorkloadConfig(n_tasks=n), top, seed=s)
        scheme = SchedulerKind(rng.choice(["deterministic", "minimum", "shortest"]))
        prob = Problem(tasks, top, model=NetworkModel(top, frozen, channel_seed=s))
        try:
            best = brute_force_solve(tasks, top, scheme, problem=prob)
        except (BudgetExceeded, NoFeasibleSchedule):
            continue
        res = solve(tasks, top, scheme, GaParams(seed=s), problem=prob)
        checked += 1
        tol = 1e-9 * max(1.0, abs(best.objective))
        if res.objective < best.objective - tol:
            print(f"GA beat the oracle on instance {checked}: {res.objective} < {best.objective}")
            return 3
        matched += res.feasible and abs(res.objective - best.objective) <= tol
    if checked == 0:
        print("no enumerable instance found")
        return 1
    print(f"GA matched the oracle on {matched}/{checked} instances")
    return 0


def cmd_defaults(args) -> int:
    sys.stdout.write(default_config_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zonalsched", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment sweep and write CSV reports")
    r.add_argument("--config")
    r.add_argument("--out")
    r.add_argument("--seed", type=int, help="base seed")
    r.add_argument("--scheme", action="append", choices=[s.value for s in SchedulerKind])
    r.add_argument("--topology", action="append", choices=[t.value for t in TopologyKind])
    r.add_argument("--tasks", help="comma separated load points")
    r.add_argument("--replications", type=int)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate-config", help="parse a config and report the sweep size")
    v.add_argument("config", nargs="?")
    v.add_argument("--config", dest="config_opt")
    v.set_defaults(func=cmd_validate)

    o = sub.add_parser("oracle-check", help="check the GA against exhaustive search")
    o.add_argument("--max-tasks", type=int, default=3)
    o.add_argument("--instances", type=int, default=20)
    o.add_argument("--seed", type=int, default=0)
    o.set_defaults(func=cmd_oracle_check)

    d = sub.add_parser("defaults", help="print every config key with its default")
    d.set_defaults(func=cmd_defaults)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "config_opt", None):
        args.config = args.config_opt
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
