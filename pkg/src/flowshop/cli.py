"""Command-line surface for datasets, solvers, training, and sweeps.

Subcommands: generate, solve, train, eval, sweep-sigma, sweep-machines,
export, emit-mip, brute-force. A JSON file passed via --config supplies
defaults for any long option (dashes become underscores); explicit flags
win. Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import gap_percent
from .errors import DataError, FlowshopError, NumericError, ValidationError
from .exact import brute_force, emit_mip
from .harness import (
    HEURISTIC_METHODS,
    ExperimentConfig,
    evaluate_policy_rows,
    export_report,
    report_from_json,
    report_to_json,
    solve_dataset,
    sweep_machines,
    sweep_sigma,
)
from .instances import DatasetSpec, generate, load_dataset, save_dataset
from .policy import PolicyConfig
from .training import TrainConfig, train

__all__ = ["main"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 instead of argparse's default 2
        raise UsageError(message)


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="base RNG seed")
    parser.add_argument("--config", default=None, help="JSON file with option defaults")
    parser.add_argument("--out", default=None, help="output path")
    parser.add_argument("--parallel", action="store_true", default=None,
                        help="run instances concurrently (timings lose comparability)")


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill options still at None from the --config JSON file."""
    if not getattr(args, "config", None):
        return args
    try:
        payload = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid config JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise DataError("config file must hold a JSON object")
    for key, value in payload.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, value)
    return args


def _require(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required (flag or config file)")


def _load_instances(path: str):
    try:
        return load_dataset(path)
    except FileNotFoundError as exc:
        raise DataError(f"dataset not found: {path}") from exc


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


# --- subcommand handlers ------------------------------------------------------


def _cmd_generate(args) -> int:
    _require(args, "out", "count", "jobs", "machines")
    spec = DatasetSpec(
        count=args.count,
        jobs=args.jobs,
        machines=args.machines,
        dist=args.dist or "gamma",
        k=args.k if args.k is not None else 1.0,
        theta=args.theta if args.theta is not None else 2.0,
        mu=args.mu if args.mu is not None else 6.0,
        sigma=args.sigma if args.sigma is not None else 6.0,
        seed=args.seed if args.seed is not None else 0,
    )
    save_dataset(args.out, generate(spec), spec)
    print(f"wrote {spec.count} instances to {args.out}")
    return 0


def _cmd_solve(args) -> int:
    _require(args, "dataset")
    methods = tuple(m.strip() for m in (args.methods or "neh,ig,ils,rs").split(",") if m.strip())
    for name in methods:
        if name not in HEURISTIC_METHODS:
            raise UsageError(f"unknown method {name!r}; choose from {', '.join(HEURISTIC_METHODS)}")
    expert = args.expert or "neh"
    if expert not in HEURISTIC_METHODS:
        raise UsageError(f"unknown expert {expert!r}")
    config = ExperimentConfig(
        methods=methods,
        seeds=args.seeds if args.seeds is not None else 3,
        seed=args.seed if args.seed is not None else 0,
        expert=expert,
        method_params=args.method_params or {},
        parallel=bool(args.parallel),
    )
    report = solve_dataset(_load_instances(args.dataset), config)
    _write(args.out, report_to_json(report))
    for row in report.rows:
        print(f"{row.method:>6}: makespan {row.mean_makespan:.2f}  gap {row.mean_gap_pct:+.2f}%  time {row.time_s:.2f}s")
    return 0


def _cmd_train(args) -> int:
    _require(args, "dataset", "out")
    instances = _load_instances(args.dataset)
    if args.traces:
        from .env import load_traces

        traces = load_traces(args.traces, instances)
    else:
        from .env import record_expert_traces

        traces = record_expert_traces(instances)
    machines = instances[0].m
    policy = PolicyConfig(
        machines=machines,
        hidden_dim=args.hidden_dim if args.hidden_dim is not None else 128,
        layers=args.layers if args.layers is not None else 3,
        heads=args.heads if args.heads is not None else 8,
        neighbor_fraction=args.neighbor_fraction if args.neighbor_fraction is not None else 0.2,
        aggregation=args.aggregation or "mean",
        normalization=args.normalization or "batch",
    )
    config = TrainConfig(
        policy=policy,
        epochs=args.epochs if args.epochs is not None else 20,
        batch_size=args.batch_size if args.batch_size is not None else 128,
        learning_rate=args.lr if args.lr is not None else 1e-4,
        lr_decay=args.lr_decay if args.lr_decay is not None else 0.96,
        seed=args.seed if args.seed is not None else 0,
        checkpoint_path=args.out,
        checkpoint_every=args.checkpoint_every if args.checkpoint_every is not None else 0,
        log_path=args.log,
        traces_path=args.traces,
        dataset_path=args.dataset,
        val_dataset_path=args.val_dataset,
    )
    val_instances = _load_instances(args.val_dataset) if args.val_dataset else None
    _, history = train(config, traces, val_instances)
    last = history[-1]
    gap = "n/a" if last["val_gap"] is None else f"{last['val_gap']:.2f}%"
    print(f"trained {config.epochs} epochs: loss {last['train_loss']:.4f}, val gap {gap}; checkpoint at {args.out}")
    return 0


def _cmd_eval(args) -> int:
    _require(args, "checkpoint", "dataset")
    instances = _load_instances(args.dataset)
    report = evaluate_policy_rows(args.checkpoint, instances)
    _write(args.out, report_to_json(report))
    row = report.rows[0]
    print(f"policy: makespan {row.mean_makespan:.2f}  gap {row.mean_gap_pct:+.2f}%  time {row.time_s:.2f}s")
    return 0


def _parse_float_list(text: str, flag: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"{flag} expects a comma-separated number list") from exc


def _cmd_sweep_sigma(args) -> int:
    _require(args, "method_a", "method_b")
    sigmas = _parse_float_list(args.sigmas or "0,2,4,6", "--sigmas")
    report = sweep_sigma(
        sigmas,
        args.method_a,
        args.method_b,
        count=args.count if args.count is not None else 50,
        jobs=args.jobs if args.jobs is not None else 20,
        machines=args.machines if args.machines is not None else 5,
        mu=args.mu if args.mu is not None else 6.0,
        seed=args.seed if args.seed is not None else 0,
    )
    _write(args.out, report_to_json(report))
    for row in report.rows:
        print(f"sigma={row.extra['sigma']:g} {row.method:>12}: gap {row.mean_gap_pct:+.3f}%")
    return 0


def _cmd_sweep_machines(args) -> int:
    _require(args, "method_a", "method_b")
    machine_counts = [int(v) for v in _parse_float_list(args.machines_list or "5,10", "--machines-list")]
    report = sweep_machines(
        machine_counts,
        args.method_a,
        args.method_b,
        count=args.count if args.count is not None else 50,
        jobs=args.jobs if args.jobs is not None else 20,
        seed=args.seed if args.seed is not None else 0,
    )
    _write(args.out, report_to_json(report))
    for row in report.rows:
        print(f"m={row.extra['machines']} {row.method:>12}: gap {row.mean_gap_pct:+.3f}%")
    return 0


def _cmd_export(args) -> int:
    _require(args, "report")
    fmt = args.format or "csv"
    if fmt not in ("csv", "json"):
        raise UsageError(f"unknown export format {fmt!r}")
    try:
        text = Path(args.report).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read report: {exc}") from exc
    report = report_from_json(text)
    _write(args.out, export_report(report, fmt))
    return 0


def _cmd_emit_mip(args) -> int:
    _require(args, "dataset")
    instances = _load_instances(args.dataset)
    index = args.index if args.index is not None else 0
    if not 0 <= index < len(instances):
        raise DataError(f"instance index {index} out of range [0, {len(instances)})")
    inst = instances[index]
    text = emit_mip(inst)
    out = args.out
    if out is None:
        out = f"{inst.name or f'instance-{index}'}.lp"
    elif Path(out).is_dir():
        out = str(Path(out) / f"{inst.name or f'instance-{index}'}.lp")
    Path(out).write_text(text, encoding="utf-8", newline="\n")
    print(f"wrote {out}")
    return 0


def _cmd_brute_force(args) -> int:
    _require(args, "dataset")
    instances = _load_instances(args.dataset)
    index = args.index if args.index is not None else 0
    if not 0 <= index < len(instances):
        raise DataError(f"instance index {index} out of range [0, {len(instances)})")
    inst = instances[index]
    perm, value = brute_force(inst)
    payload = {"instance": inst.name, "permutation": [int(v) for v in perm], "makespan": value}
    if args.neh_gap:
        from .heuristics import neh

        payload["neh_makespan"] = neh(inst)[1]
        payload["neh_gap_pct"] = gap_percent(payload["neh_makespan"], value)
    _write(args.out, json.dumps(payload, indent=2))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="flowshop", description="Permutation flow-shop scheduling toolkit")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("generate", parents=[], help="generate a dataset file")
    _common_flags(p)
    p.add_argument("--dist", choices=["gamma", "normal"], default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--machines", type=int, default=None)
    p.add_argument("--k", type=float, default=None, help="gamma shape")
    p.add_argument("--theta", type=float, default=None, help="gamma scale")
    p.add_argument("--mu", type=float, default=None, help="normal mean")
    p.add_argument("--sigma", type=float, default=None, help="normal std (clamped at 0)")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("solve", help="run heuristics over a dataset")
    _common_flags(p)
    p.add_argument("--dataset", default=None)
    p.add_argument("--methods", default=None, help="comma list from: rs,ils,ig,neh")
    p.add_argument("--seeds", type=int, default=None, help="number of trials (default 3)")
    p.add_argument("--expert", default=None, help="gap reference method (default neh)")
    p.add_argument("--method-params", type=json.loads, default=None,
                   help='JSON dict of per-method overrides, e.g. {"rs": {"iterations": 1000}}')
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("train", help="behavior-clone the expert from traces")
    _common_flags(p)
    p.add_argument("--traces", default=None, help="trace file; omitted = record NEH traces now")
    p.add_argument("--dataset", default=None, help="instances backing the traces")
    p.add_argument("--val-dataset", default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--lr-decay", type=float, default=None)
    p.add_argument("--hidden-dim", type=int, default=None)
    p.add_argument("--layers", type=int, default=None)
    p.add_argument("--heads", type=int, default=None)
    p.add_argument("--neighbor-fraction", type=float, default=None)
    p.add_argument("--aggregation", choices=["mean", "sum", "max"], default=None)
    p.add_argument("--normalization", choices=["batch", "layer", "none"], default=None)
    p.add_argument("--checkpoint-every", type=int, default=None)
    p.add_argument("--log", default=None, help="JSONL training log path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    _common_flags(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--dataset", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep-sigma", help="job-difference sweep at fixed mu")
    _common_flags(p)
    p.add_argument("--sigmas", default=None, help="comma list, default 0,2,4,6")
    p.add_argument("--method-a", default=None, help="heuristic name or policy:<checkpoint>")
    p.add_argument("--method-b", default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--machines", type=int, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.set_defaults(func=_cmd_sweep_sigma)

    p = sub.add_parser("sweep-machines", help="machine-count sweep on Gamma data")
    _common_flags(p)
    p.add_argument("--machines-list", default=None, help="comma list, default 5,10")
    p.add_argument("--method-a", default=None)
    p.add_argument("--method-b", default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=_cmd_sweep_machines)

    p = sub.add_parser("export", help="convert a report to csv or json")
    _common_flags(p)
    p.add_argument("--report", default=None)
    p.add_argument("--format", choices=["csv", "json"], default=None)
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("emit-mip", help="write the LP-format model of one instance")
    _common_flags(p)
    p.add_argument("--dataset", default=None)
    p.add_argument("--index", type=int, default=None)
    p.set_defaults(func=_cmd_emit_mip)

    p = sub.add_parser("brute-force", help="exact optimum of one small instance")
    _common_flags(p)
    p.add_argument("--dataset", default=None)
    p.add_argument("--index", type=int, default=None)
    p.add_argument("--neh-gap", action="store_true", help="also report the NEH gap")
    p.set_defaults(func=_cmd_brute_force)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            raise UsageError("a subcommand is required (see --help)")
        args = _merge_config(args)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ValidationError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except FlowshopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
