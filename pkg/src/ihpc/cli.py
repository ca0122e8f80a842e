"""Command-line surface tying the stack together.

Subcommands::

    ihpc launch <prog> -n <cores> --where local|grid|background
    ihpc status <job_id>
    ihpc collect <job_id>
    ihpc abort <job_id>
    ihpc simulate --workload <file> --policy ondemand|batch
    ihpc compare --workload <file>
    ihpc roi --ledger <file>
    ihpc classify <seconds>

Exit codes: 0 ok, 1 runtime error, 2 usage error, 3 admission held,
4 results not ready.  ``--json`` switches every subcommand to
machine-readable output.

Configuration is discovered in order: ``--config`` flag, the
``IHPC_CONFIG`` environment variable, then ``./ihpc.toml``.
"""

import argparse
import json
import os
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import roi as roi_mod
from . import sched
from .errors import (ArgumentError, CapacityError, IhpcError, NotFoundError,
                     NotReadyError)
from .launcher import JobManager, JobSpec, Location

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_NOT_READY = 4


def load_config(explicit_path=None):
    """Resolve and parse the config file; missing config yields defaults."""
    path = explicit_path or os.environ.get("IHPC_CONFIG")
    if path is None and os.path.exists("ihpc.toml"):
        path = "ihpc.toml"
    cfg = {}
    if path is not None:
        if not os.path.exists(path):
            raise NotFoundError(f"config file not found: {path}")
        with open(path, "rb") as f:
            cfg = tomllib.load(f)
    policy_cfg = cfg.get("policy", {})
    policy = sched.PolicyConfig(
        total_cores=policy_cfg.get("total_cores", 128),
        cap_fraction=policy_cfg.get("cap_fraction", 1.0 / 8.0),
        latency_base_s=policy_cfg.get("latency_base_s", 5.0),
        latency_per_rank_s=policy_cfg.get("latency_per_rank_s", 0.025),
    )
    roi_cfg = cfg.get("roi", {})
    return {
        "root": cfg.get("root", os.path.join(os.getcwd(), "ihpc_data")),
        "policy": policy,
        "staff_rate": roi_cfg.get("staff_rate", 100.0),
        "efficiency": roi_cfg.get("efficiency", roi_mod.DEFAULT_EFFICIENCY),
    }


def build_parser():
    parser = argparse.ArgumentParser(prog="ihpc", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", help="path to a TOML config file")
    parser.add_argument("--json", action="store_true",
                        help="emit machine-readable JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("launch", help="launch a program on n cores")
    p.add_argument("program")
    p.add_argument("args", nargs="*")
    p.add_argument("-n", "--ncores", type=int, required=True)
    p.add_argument("--where", choices=["local", "grid", "background"],
                   default="grid")
    p.add_argument("--user", default=os.environ.get("USER", "user"))

    for name in ("status", "collect", "abort"):
        p = sub.add_parser(name)
        p.add_argument("job_id")

    p = sub.add_parser("simulate", help="run one scheduling discipline")
    p.add_argument("--workload", required=True)
    p.add_argument("--policy", choices=["ondemand", "batch"], required=True)
    p.add_argument("--trace", help="write the event trace to this file")

    p = sub.add_parser("compare", help="on-demand vs batch FIFO on one workload")
    p.add_argument("--workload", required=True)

    p = sub.add_parser("roi", help="compute ROI from a ledger file")
    p.add_argument("--ledger", required=True)

    p = sub.add_parser("classify", help="computing regime of a runtime")
    p.add_argument("seconds", type=float)
    return parser


def _outcome_dict(outcome):
    return {
        "discipline": outcome.discipline.value,
        "makespan": outcome.makespan,
        "mean_wait": outcome.mean_wait,
        "median_wait": outcome.median_wait,
        "p95_wait": outcome.p95_wait,
        "mean_utilization": outcome.mean_utilization,
        "max_utilization": outcome.max_utilization,
        "regime_histogram": outcome.regime_histogram,
        "jobs": [
            {"job_id": o.job.job_id, "user": o.job.user, "cores": o.job.cores,
             "arrival": o.job.arrival_time, "start": o.start,
             "wait": o.wait_time, "launch_latency": o.launch_latency,
             "end": o.end}
            for o in outcome.jobs
        ],
    }


def _emit(payload, as_json, lines):
    if as_json:
        print(json.dumps(payload, indent=2))
    else:
        for line in lines:
            print(line)


def _record_dict(record):
    return record.to_dict()


def cmd_launch(cfg, args):
    manager = JobManager(cfg["root"], policy=cfg["policy"])
    spec = JobSpec(program=args.program, args=tuple(args.args),
                   ncores=args.ncores, location=Location(args.where),
                   user=args.user)
    record = manager.launch(spec)
    lines = list(record.echo_lines)
    lines.append(f"job {record.job_id}: {record.state.value}")
    if record.state.value == "Done":
        results = manager.collect(record.job_id)["results"]
        for name, path in results.items():
            lines.append(f"result: {name} -> {path}")
    _emit(_record_dict(record), args.json, lines)
    return EXIT_OK


def cmd_status(cfg, args):
    manager = JobManager(cfg["root"], policy=None)
    record = manager.status(args.job_id)
    _emit(_record_dict(record), args.json,
          [f"job {record.job_id}: {record.state.value}",
           f"rank exits: {record.rank_exits}"])
    return EXIT_OK


def cmd_collect(cfg, args):
    manager = JobManager(cfg["root"], policy=None)
    out = manager.collect(args.job_id)
    lines = [f"job {out['job_id']}: {out['state']}"]
    lines += [f"result: {n} -> {p}" for n, p in out["results"].items()]
    lines += [f"log rank {r}: {p}" for r, p in out["logs"].items()]
    _emit({**out, "logs": {str(r): p for r, p in out["logs"].items()}},
          args.json, lines)
    return EXIT_OK


def cmd_abort(cfg, args):
    manager = JobManager(cfg["root"], policy=None)
    record = manager.abort(args.job_id)
    _emit(_record_dict(record), args.json,
          [f"job {record.job_id}: {record.state.value}"])
    return EXIT_OK


def cmd_simulate(cfg, args):
    jobs = sched.load_workload(args.workload)
    discipline = {"ondemand": sched.Discipline.ON_DEMAND,
                  "batch": sched.Discipline.BATCH_FIFO}[args.policy]
    outcome = sched.simulate(cfg["policy"], jobs, discipline)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as f:
            f.write(outcome.trace_text())
    d = _outcome_dict(outcome)
    _emit(d, args.json, [
        f"discipline: {d['discipline']}",
        f"jobs: {len(d['jobs'])}  makespan: {d['makespan']:.1f}s",
        f"mean wait: {d['mean_wait']:.2f}s  median: {d['median_wait']:.2f}s  "
        f"p95: {d['p95_wait']:.2f}s",
        f"mean utilization: {d['mean_utilization']:.3f}  "
        f"max: {d['max_utilization']:.3f}",
        f"regimes: {d['regime_histogram']}",
    ])
    return EXIT_OK


def cmd_compare(cfg, args):
    jobs = sched.load_workload(args.workload)
    cmp = sched.compare_policies(cfg["policy"], jobs)
    d = {
        "on_demand": _outcome_dict(cmp.on_demand),
        "batch_fifo": _outcome_dict(cmp.batch_fifo),
        "mean_wait_delta": cmp.mean_wait_delta,
        "mean_utilization_delta": cmp.mean_utilization_delta,
    }
    _emit(d, args.json, [
        f"on-demand   mean wait {cmp.on_demand.mean_wait:8.2f}s  "
        f"utilization {cmp.on_demand.mean_utilization:.3f}",
        f"batch FIFO  mean wait {cmp.batch_fifo.mean_wait:8.2f}s  "
        f"utilization {cmp.batch_fifo.mean_utilization:.3f}",
        f"wait delta (on-demand - batch): {cmp.mean_wait_delta:.2f}s",
    ])
    return EXIT_OK


def cmd_roi(cfg, args):
    if not os.path.exists(args.ledger):
        raise NotFoundError(f"ledger file not found: {args.ledger}")
    ledger = roi_mod.RoiLedger.load(args.ledger)
    result = roi_mod.compute_roi(ledger)
    lines = [f"{'category':<24}{'currency':>14}"]
    for k, v in result.breakdown.items():
        lines.append(f"{k:<24}{v:>14.2f}")
    lines.append(f"{'total cost':<24}{result.cost_currency:>14.2f}")
    lines.append(f"{'benefit':<24}{result.benefit_currency:>14.2f}")
    lines.append(f"ROI: {result.roi:.3f}")
    _emit(result.to_dict(), args.json, lines)
    return EXIT_OK


def cmd_classify(cfg, args):
    regime = sched.classify_regime(args.seconds)
    _emit({"seconds": args.seconds, "regime": regime.value}, args.json,
          [regime.value])
    return EXIT_OK


COMMANDS = {
    "launch": cmd_launch,
    "status": cmd_status,
    "collect": cmd_collect,
    "abort": cmd_abort,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "roi": cmd_roi,
    "classify": cmd_classify,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except CapacityError as exc:
        print(f"held: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except NotReadyError as exc:
        print(f"not ready: {exc}", file=sys.stderr)
        return EXIT_NOT_READY
    except ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IhpcError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
