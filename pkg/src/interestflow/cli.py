"""Command line entry point: ``interestflow <command> [flags]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, InterestflowError
from .pipeline import STAGES, RunConfig, coerce_field, prepare_output, read_config_file, run_pipeline
from .synth import PlantedBot, SynthSpec, default_catalog, generate_corpus, random_plants, user_name, write_corpus

# flag dest -> RunConfig field
_FIELD_FOR = {
    "comments": "comments", "posts": "posts", "catalog": "catalog",
    "window_from": "window_from", "window_to": "window_to",
    "bin_size": "bin_size", "threshold_deg": "threshold_deg", "min_comments": "min_comments",
    "per_subreddit": "per_subreddit", "gini_mode": "gini_mode", "seed": "seed",
    "null_repetitions": "null_repetitions", "percentile": "bot_percentile",
    "min_comments_for_entropy": "min_comments_for_entropy", "exclude_bots": "exclude_bots",
    "output": "output", "threads": "threads", "force": "force",
}


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global")
    g.add_argument("--config", type=Path, help="key = value file; flags override it")
    g.add_argument("--seed", type=int)
    g.add_argument("--threads", type=int)
    g.add_argument("--output", type=Path, help="output directory")
    g.add_argument("--exclude-bots", dest="exclude_bots", action="store_const", const=True)
    g.add_argument("--force", action="store_const", const=True, help="overwrite a non-empty output directory")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def _input_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("input")
    g.add_argument("--comments", nargs="+", type=Path)
    g.add_argument("--posts", nargs="*", type=Path)
    g.add_argument("--catalog", type=Path)
    g.add_argument("--from", dest="window_from", help="ISO date, inclusive")
    g.add_argument("--to", dest="window_to", help="ISO date, inclusive")
    return p


def _gini_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", dest="gini_mode", choices=["corrected", "paper-literal"])
    p.add_argument("--null-repetitions", type=int)


def _interest_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bin-size", type=int)
    p.add_argument("--threshold-deg", type=float)
    p.add_argument("--min-comments", type=int)
    p.add_argument("--per-user-total", dest="per_subreddit", action="store_const", const=False,
                   help="select users on total comments instead of per-subreddit comments")


def _bot_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--percentile", type=float)
    p.add_argument("--min-comments-for-entropy", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="interestflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = [_global_flags(), _input_flags()]

    sub.add_parser("ingest", parents=common, help="parse and index dumps; write the manifest")
    sub.add_parser("stats", parents=common, help="activity and lifetime distributions with fits")
    _gini_flags(sub.add_parser("gini", parents=common, help="Gini concentration vs activity"))
    _interest_flags(sub.add_parser("interest", parents=common, help="drift/shift events and transition matrices"))
    _bot_flags(sub.add_parser("bots", parents=common, help="entropy-based bot flags"))
    run = sub.add_parser("run", parents=common, help="all stages")
    _gini_flags(run)
    _interest_flags(run)
    _bot_flags(run)

    synth = sub.add_parser("synth", parents=[_global_flags()], help="write a seeded synthetic corpus")
    synth.add_argument("--n-users", type=int, default=1000)
    synth.add_argument("--n-subreddits", type=int, default=60)
    synth.add_argument("--activity-exponent", type=float, default=2.0)
    synth.add_argument("--max-comments", type=int, default=5000)
    synth.add_argument("--planted-users", type=int, default=100, help="users given planted drifts/shifts")
    synth.add_argument("--plant-bins", type=int, default=12)
    synth.add_argument("--bots", type=int, default=2, help="number of fixed-length bots")
    synth.add_argument("--bot-comments", type=int, default=20000)
    synth.add_argument("--bot-length", type=int, default=100)
    synth.add_argument("--bin-size", type=int, default=20)
    synth.add_argument("--compress", action="store_true", help="write .ndjson.zst dumps")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    for dest, name in _FIELD_FOR.items():
        value = getattr(args, dest, None)
        if value is not None:
            values[name] = coerce_field(name, value)
    if values.get("gini_mode") == "paper-literal":
        values["gini_mode"] = "paper_literal"
    return RunConfig(**values)


def run_synth(args: argparse.Namespace) -> Path:
    seed = args.seed or 0
    out = args.output or Path("synthetic-corpus")
    prepare_output(out, bool(args.force))
    catalog = default_catalog(args.n_subreddits)
    n_plant = min(args.planted_users, args.n_users)
    plants = random_plants([user_name(i) for i in range(n_plant)], catalog,
                           np.random.default_rng([seed, 1]), n_bins=args.plant_bins)
    bots = [PlantedBot(f"autobot_{k:02d}", args.bot_length, args.bot_comments) for k in range(args.bots)]
    spec = SynthSpec(
        n_users=args.n_users, n_subreddits=args.n_subreddits, activity_exponent=args.activity_exponent,
        topic_map=catalog, planted_events=plants, planted_bots=bots, seed=seed,
        bin_size=args.bin_size, max_comments=args.max_comments,
    )
    write_corpus(generate_corpus(spec), out, compress=args.compress)
    return out


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            print(run_synth(args))
            return 0
        config = config_from_args(args)
        stages = () if args.command == "ingest" else STAGES if args.command == "run" else (args.command,)
        state = run_pipeline(config, stages)
    except ConfigError as exc:
        print(f"interestflow: configuration error: {exc}", file=sys.stderr)
        return 2
    except InterestflowError as exc:
        print(f"interestflow: {exc}", file=sys.stderr)
        return 1
    print(state.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
