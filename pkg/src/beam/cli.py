"""Command-line front door for the full campaign workflow.

Every subcommand is a thin shim over one library call; the interesting
behavior (and all of its validation) lives in the library modules.  Output
is either human-oriented text (``--format plain``) or a single JSON object
(``--format machine``) so scripts never scrape the plain layout.

Exit codes: 0 success, 2 usage, 3 file/storage trouble, 4 campaign-state
refusals (budget exhausted, not pending), 5 validation failures (off-grid
values, malformed seed data, bad arguments that parse but do not validate).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import simulator
from .acquisition import POLICIES
from .campaign import Campaign, CampaignSettings, resolve_config
from .errors import (
    BeamError,
    ConstraintError,
    SpaceError,
    StateError,
    StorageError,
    ValidationError,
)
from .space import (
    AxisSpec,
    ConstraintSet,
    Exclusion,
    IntervalBound,
    PairRatio,
    ParameterSpace,
)
from .storage import FILE_SUFFIX, load_campaign, read_seed_rows, save_campaign

__all__ = ["main"]

ENV_CAMPAIGN = "BEAM_CAMPAIGN"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_STORAGE = 3
EXIT_STATE = 4
EXIT_VALIDATION = 5


# ----------------------------------------------------------------------
# flag parsing helpers
# ----------------------------------------------------------------------


def _parse_axis(text: str) -> AxisSpec:
    parts = text.split(":")
    if len(parts) != 4:
        raise ValidationError(
            f"axis {text!r} must look like name:low:high:step (e.g. feed:0.01:1.0:0.01)"
        )
    name, low, high, step = parts
    try:
        return AxisSpec(name, float(low), float(high), float(step))
    except ValueError as exc:
        raise ValidationError(f"axis {text!r}: {exc}") from exc


def _parse_fixed(items: list[str]) -> dict[str, float]:
    out: dict[str, float] = {}
    for item in items:
        name, sep, raw = item.partition("=")
        if not sep:
            raise ValidationError(f"fixed setting {item!r} must look like name=value")
        try:
            out[name] = float(raw)
        except ValueError as exc:
            raise ValidationError(f"fixed setting {item!r}: {exc}") from exc
    return out


def _opt_float(raw: str, what: str) -> float | None:
    if raw == "":
        return None
    try:
        return float(raw)
    except ValueError as exc:
        raise ValidationError(f"{what}: {raw!r} is not a number") from exc


def _parse_constraints(args: argparse.Namespace) -> ConstraintSet:
    constraints = []
    for text in args.bound or ():
        parts = text.split(":")
        if len(parts) != 3:
            raise ValidationError(
                f"bound {text!r} must look like axis:min:max (either side may be empty)"
            )
        constraints.append(
            IntervalBound(
                parts[0],
                min=_opt_float(parts[1], f"bound {text!r} min"),
                max=_opt_float(parts[2], f"bound {text!r} max"),
            )
        )
    for text in args.exclude or ():
        name, sep, raw = text.partition(":")
        if not sep:
            raise ValidationError(f"exclude {text!r} must look like axis:v1,v2,...")
        try:
            values = tuple(float(v) for v in raw.split(","))
        except ValueError as exc:
            raise ValidationError(f"exclude {text!r}: {exc}") from exc
        constraints.append(Exclusion(name, values))
    for text in args.ratio or ():
        parts = text.split(":")
        if len(parts) != 3 or "/" not in parts[0]:
            raise ValidationError(
                f"ratio {text!r} must look like numerator/denominator:min:max"
            )
        num, _, den = parts[0].partition("/")
        constraints.append(
            PairRatio(
                num,
                den,
                min_ratio=_opt_float(parts[1], f"ratio {text!r} min"),
                max_ratio=_opt_float(parts[2], f"ratio {text!r} max"),
            )
        )
    return ConstraintSet(tuple(constraints))


def _parse_values(raw: str) -> list[float]:
    try:
        return [float(v) for v in raw.split(",")]
    except ValueError as exc:
        raise ValidationError(f"values {raw!r}: {exc}") from exc


def _campaign_path(args: argparse.Namespace) -> Path:
    path = args.campaign or os.environ.get(ENV_CAMPAIGN)
    if not path:
        raise ValidationError(
            f"no campaign file given; pass --campaign or set {ENV_CAMPAIGN}"
        )
    return Path(path)


def _emit(args: argparse.Namespace, payload: dict, plain: str) -> None:
    if args.format == "machine":
        print(json.dumps(payload, indent=2))
    else:
        print(plain)


# ----------------------------------------------------------------------
# renderers
# ----------------------------------------------------------------------


def _metrics_lines(campaign: Campaign) -> str:
    m = campaign.metrics()
    rows = [
        ("budget", f"{m.experiments_used} / {m.budget} experiments used"),
        ("pending", str(len(campaign.pending))),
        ("seed observations", str(m.seed_observations)),
        ("discovery rate", f"{m.discovery_rate} within budget"),
        ("total successes", str(m.total_successes)),
        ("space size", f"{m.space_cardinality:,}"),
        ("fraction explored", f"{m.fraction_explored:.3e}"),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def _batch_lines(campaign: Campaign) -> str:
    names = campaign.space.axis_names
    width = max(len(n) for n in names)
    blocks = []
    for i, s in enumerate(campaign.pending, start=1):
        head = (
            f"suggestion {i} of {len(campaign.pending)}  "
            f"(index {s.config.index}, p {s.p:.4f}, score {s.alpha:.4f})"
        )
        body = "\n".join(
            f"  {name:<{width}}  {value:g}"
            for name, value in zip(names, s.config.values)
        )
        blocks.append(head + "\n" + body)
    return "\n".join(blocks)


def _status_payload(campaign: Campaign) -> dict:
    m = campaign.metrics()
    return {
        "state_version": campaign.state_version,
        "metrics": {
            "budget": m.budget,
            "experiments_used": m.experiments_used,
            "budget_remaining": m.budget_remaining,
            "seed_observations": m.seed_observations,
            "discovery_rate": m.discovery_rate,
            "total_successes": m.total_successes,
            "space_cardinality": m.space_cardinality,
            "fraction_explored": m.fraction_explored,
        },
        "pending": [
            {"index": s.config.index, "values": list(s.config.values)}
            for s in campaign.pending
        ],
    }


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------


def _cmd_init(args: argparse.Namespace) -> int:
    path = _campaign_path(args)
    if path.exists() and not args.force:
        raise StorageError(f"campaign file {path} already exists (use --force)")
    space = ParameterSpace(
        axes=tuple(_parse_axis(a) for a in args.axis),
        fixed_context=_parse_fixed(args.fixed or []),
    )
    constraints = _parse_constraints(args)
    campaign = Campaign(
        space,
        constraints,
        CampaignSettings(
            budget=args.budget,
            batch_size=args.batch_size,
            policy=args.policy,
            k=args.k,
            gamma=args.gamma,
            pool_cap=args.pool_cap,
            rng_seed=args.seed,
        ),
    )
    save_campaign(campaign, path)
    _emit(
        args,
        {"campaign": str(path), "space_cardinality": space.cardinality},
        f"created {path}\nspace size {space.cardinality:,}",
    )
    return EXIT_OK


def _cmd_import(args: argparse.Namespace) -> int:
    path = _campaign_path(args)
    campaign = load_campaign(path)
    try:
        text = Path(args.file).read_text(encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot read seed file {args.file}: {exc}") from exc
    rows = read_seed_rows(text, campaign.space)
    imported = campaign.import_seed(rows)
    save_campaign(campaign, path)
    _emit(
        args,
        {"imported": imported, "state_version": campaign.state_version},
        f"imported {imported} seed observations",
    )
    return EXIT_OK


def _cmd_suggest(args: argparse.Namespace) -> int:
    path = _campaign_path(args)
    campaign = load_campaign(path)
    campaign.suggest()
    save_campaign(campaign, path)
    _emit(
        args,
        {
            "state_version": campaign.state_version,
            "suggestions": [
                {
                    "index": s.config.index,
                    "values": list(s.config.values),
                    "p": s.p,
                    "beta": s.beta,
                    "alpha": s.alpha,
                }
                for s in campaign.pending
            ],
        },
        _batch_lines(campaign),
    )
    return EXIT_OK


def _cmd_record(args: argparse.Namespace) -> int:
    if (args.index is None) == (args.values is None):
        raise ValidationError("pass exactly one of --index or --values")
    path = _campaign_path(args)
    campaign = load_campaign(path)
    config = resolve_config(
        campaign.space,
        index=args.index,
        values=_parse_values(args.values) if args.values is not None else None,
    )
    obs = campaign.record(config, args.outcome, manual=args.manual)
    save_campaign(campaign, path)
    _emit(
        args,
        {
            "recorded": {
                "index": obs.config.index,
                "values": list(obs.config.values),
                "outcome": obs.outcome,
                "origin": obs.origin,
            },
            "state_version": campaign.state_version,
        },
        f"recorded outcome {obs.outcome} for configuration {obs.config.index} "
        f"({obs.origin})",
    )
    return EXIT_OK


def _cmd_status(args: argparse.Namespace) -> int:
    campaign = load_campaign(_campaign_path(args))
    _emit(args, _status_payload(campaign), _metrics_lines(campaign))
    return EXIT_OK


def _cmd_slice(args: argparse.Namespace) -> int:
    campaign = load_campaign(_campaign_path(args))
    pinned = {}
    for item in args.pin or ():
        name, sep, raw = item.partition("=")
        if not sep:
            raise ValidationError(f"pin {item!r} must look like axis=value")
        pinned[name] = float(raw)
    result = campaign.posterior_slice(args.x, args.y, pinned)
    if args.out:
        Path(args.out).write_text(
            json.dumps(result, indent=2) + "\n", encoding="utf-8"
        )
    flat = [v for row in result["matrix"] for v in row]
    summary = (
        f"slice {args.x} x {args.y}: {len(result['y_values'])} rows x "
        f"{len(result['x_values'])} cols\n"
        f"p range [{min(flat):.4f}, {max(flat):.4f}], "
        f"{len(result['observations'])} observations on the slice"
        + (f"\nwrote {args.out}" if args.out else "")
    )
    _emit(args, result, summary)
    return EXIT_OK


def _cmd_extend(args: argparse.Namespace) -> int:
    path = _campaign_path(args)
    campaign = load_campaign(path)
    budget = campaign.extend_budget(args.by)
    save_campaign(campaign, path)
    _emit(
        args,
        {"budget": budget, "state_version": campaign.state_version},
        f"budget extended to {budget} experiments",
    )
    return EXIT_OK


def _sim_space(args: argparse.Namespace) -> ParameterSpace:
    if args.axis:
        return ParameterSpace(axes=tuple(_parse_axis(a) for a in args.axis))
    if args.campaign or os.environ.get(ENV_CAMPAIGN):
        return load_campaign(_campaign_path(args)).space
    raise ValidationError("pass --axis specs or --campaign to define the grid")


def _cmd_simulate(args: argparse.Namespace) -> int:
    space = _sim_space(args)
    oracle = simulator.make_oracle(
        space,
        simulator.OracleSpec(
            kind=args.kind,
            feasible_fraction=args.fraction,
            cluster_count=args.clusters,
            seed=args.oracle_seed,
        ),
    )
    trace = simulator.run_simulated_campaign(
        space,
        oracle,
        args.strategy,
        args.budget,
        args.batch_size,
        args.seed,
        pool_cap=args.pool_cap,
    )
    plain = (
        f"strategy {trace.strategy} on {trace.oracle_kind} oracle: "
        f"{trace.discoveries} discoveries in {trace.experiments} experiments "
        f"({trace.wall_ms:.0f} ms)\ncumulative: {trace.cumulative()}"
    )
    _emit(
        args,
        {
            "strategy": trace.strategy,
            "oracle_kind": trace.oracle_kind,
            "discoveries": trace.discoveries,
            "experiments": trace.experiments,
            "outcomes": list(trace.outcomes),
            "wall_ms": round(trace.wall_ms, 3),
        },
        plain,
    )
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace) -> int:
    space = _sim_space(args)
    specs = [
        simulator.OracleSpec(
            kind=kind,
            feasible_fraction=args.fraction,
            cluster_count=args.clusters,
            seed=args.oracle_seed,
        )
        for kind in args.kinds.split(",")
    ]
    strategies = args.strategies.split(",")
    report = simulator.bench(
        space,
        specs,
        strategies,
        T=args.budget,
        B=args.batch_size,
        repetitions=args.reps,
        seed=args.seed,
        seed_lhs=args.seed_lhs,
        seed_failures=args.seed_failures,
        pool_cap=args.pool_cap,
    )
    paths = simulator.write_report(report, args.out_dir)
    lines = [
        f"{a['strategy']:<8} {a['oracle_kind']:<10} "
        f"mean {a['mean_discoveries']:.2f}  sd {a['stddev_discoveries']:.2f}  "
        f"runs {a['runs']}"
        for a in report.aggregates()
    ]
    lines.append("wrote " + ", ".join(sorted(paths.values())))
    _emit(
        args,
        {"aggregates": report.aggregates(), "files": paths},
        "\n".join(lines),
    )
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    frontend = args.frontend
    if frontend is None:
        default_bundle = Path("frontend/dist")
        frontend = default_bundle if default_bundle.is_dir() else None
    app = create_app(_campaign_path(args), frontend_dir=frontend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------


def _add_shared(parser: argparse.ArgumentParser, *, top: bool) -> None:
    # shared flags are accepted both before and after the subcommand; the
    # subparser copies use SUPPRESS so they never clobber a global value
    parser.add_argument(
        "--campaign",
        "-c",
        default=None if top else argparse.SUPPRESS,
        help=f"campaign file path (default: ${ENV_CAMPAIGN}; suffix {FILE_SUFFIX})",
    )
    parser.add_argument(
        "--format",
        choices=("plain", "machine"),
        default="plain" if top else argparse.SUPPRESS,
        help="plain text for humans, one JSON object for scripts",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beam",
        description="budget-aware experimental design over discrete grids",
    )
    _add_shared(parser, top=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a new campaign file")
    p.add_argument("--axis", action="append", required=True,
                   help="axis as name:low:high:step (repeatable)")
    p.add_argument("--fixed", action="append",
                   help="held-constant setting as name=value (repeatable)")
    p.add_argument("--bound", action="append",
                   help="interval constraint axis:min:max (either side empty)")
    p.add_argument("--exclude", action="append",
                   help="exclusion constraint axis:v1,v2,...")
    p.add_argument("--ratio", action="append",
                   help="ratio constraint num/den:min:max")
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--batch-size", type=int, default=2)
    p.add_argument("--policy", choices=POLICIES, default="beam")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--pool-cap", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true",
                   help="overwrite an existing campaign file")
    p.set_defaults(func=_cmd_init)

    p = sub.add_parser("import", help="import historical outcomes (budget-free)")
    p.add_argument("file", help="delimited text: axis-name header plus outcome")
    p.set_defaults(func=_cmd_import)

    p = sub.add_parser("suggest", help="show (or compute) the pending batch")
    p.set_defaults(func=_cmd_suggest)

    p = sub.add_parser("record", help="record one experiment outcome")
    p.add_argument("--index", type=int, help="configuration index")
    p.add_argument("--values", help="comma-separated axis values")
    p.add_argument("--outcome", type=int, required=True, choices=(0, 1))
    p.add_argument("--manual", action="store_true",
                   help="allow a configuration outside the pending batch")
    p.set_defaults(func=_cmd_record)

    p = sub.add_parser("status", help="campaign metrics")
    p.set_defaults(func=_cmd_status)

    p = sub.add_parser("slice", help="posterior over two axes, others pinned")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--pin", action="append", help="axis=value (repeatable)")
    p.add_argument("--out", help="write the full slice JSON to this file")
    p.set_defaults(func=_cmd_slice)

    p = sub.add_parser("extend", help="grow the experiment budget")
    p.add_argument("--by", type=int, required=True)
    p.set_defaults(func=_cmd_extend)

    def add_sim_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--axis", action="append",
                       help="axis as name:low:high:step (repeatable); "
                            "defaults to the campaign's space")
        p.add_argument("--fraction", type=float, default=0.005)
        p.add_argument("--clusters", type=int, default=1)
        p.add_argument("--oracle-seed", type=int, default=0)
        p.add_argument("--budget", "-T", type=int, default=50)
        p.add_argument("--batch-size", "-B", type=int, default=2)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--pool-cap", type=int, default=100_000)

    p = sub.add_parser("simulate", help="one synthetic campaign run")
    add_sim_args(p)
    p.add_argument("--kind", choices=simulator.ORACLE_KINDS, default="clustered")
    p.add_argument("--strategy", choices=POLICIES, default="beam")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("bench", help="seeded strategy comparison")
    add_sim_args(p)
    p.add_argument("--kinds", default="clustered",
                   help="comma-separated oracle kinds")
    p.add_argument("--strategies", default="beam,greedy,random")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--seed-lhs", type=int, default=0)
    p.add_argument("--seed-failures", type=int, default=0)
    p.add_argument("--out-dir", default="bench-out")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--frontend",
                   help="directory with the built dashboard bundle "
                        "(default: frontend/dist when present)")
    p.set_defaults(func=_cmd_serve)

    for subparser in sub.choices.values():
        _add_shared(subparser, top=False)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StorageError as exc:
        print(f"error (storage): {exc}", file=sys.stderr)
        return EXIT_STORAGE
    except StateError as exc:
        # budget exhaustion and not-pending refusals land here
        print(f"error (state): {exc}", file=sys.stderr)
        return EXIT_STATE
    except (ValidationError, ConstraintError, SpaceError) as exc:
        print(f"error (validation): {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except BeamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
