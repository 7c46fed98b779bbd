"""Command-line harness.

Subcommands cover the whole pipeline: ``generate`` a synthetic cohort,
``aggregate`` a dataset under one model, ``bias-report`` / ``debias`` a
dataset against expert truth, ``evaluate`` a consensus against truth, and
the batch drivers ``experiment`` and ``bias-sweep``.

Every subcommand accepts ``--seed``, ``--config`` and ``--out``. All
configuration flows through flags and JSON config files; no environment
variables are consulted. Exit codes: 0 success, 1 validation failure,
2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import io
from .bias import DebiasStrategy, compute_reports
from .engine import combine_overall
from .experiment import (
    ConfigError,
    ExperimentConfig,
    config_from_dict,
    format_metrics_table,
    format_run_head,
    format_sweep_table,
    run_bias_sweep,
    run_experiment,
    run_model,
)
from .io import FormatError
from .metrics import OVERALL_SCOPE, pooled_metrics
from .model import Dataset, InvalidDatasetError, require_valid
from .synth import generate

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2


def _load_config(path: Path | None, seed: int | None) -> ExperimentConfig:
    doc = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
    config = config_from_dict(doc)
    if seed is not None:
        if seed < 0:
            raise ConfigError("seed must be nonnegative")
        config = replace(
            config, base_seed=seed, synth=replace(config.synth, seed=seed)
        )
        config.validate()
    return config


def _read_dataset(path: Path) -> Dataset:
    try:
        return io.load_dataset(path)
    except FileNotFoundError as exc:
        raise ConfigError(f"dataset file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidDatasetError(f"dataset file {path} is not valid JSON: {exc}") from exc
    except (FormatError, ValueError) as exc:
        raise InvalidDatasetError(f"dataset file {path}: {exc}") from exc


def _strategy(name: str) -> DebiasStrategy:
    try:
        return DebiasStrategy(name)
    except ValueError as exc:
        raise ConfigError(f"unknown debias strategy {name!r}") from exc


def _cmd_generate(args: argparse.Namespace) -> int:
    config = _load_config(args.config, args.seed)
    dataset, profile = generate(config.synth)
    out = Path(args.out)
    io.save_dataset(dataset, out / "dataset.json")
    io.save_profile(
        profile,
        out / "profile.json",
        meta={"synth": {k: v for k, v in sorted(vars(config.synth).items())}},
    )
    print(f"wrote {out / 'dataset.json'}")
    print(f"wrote {out / 'profile.json'}")
    return EXIT_OK


def _cmd_aggregate(args: argparse.Namespace) -> int:
    config = _load_config(args.config, args.seed)
    dataset = _read_dataset(args.dataset)
    result = run_model(
        dataset,
        args.model,
        engine=config.engine,
        debias_strategy=config.debias_strategy,
        n_min=config.n_min,
    )
    out = Path(args.out)
    io.save_consensus(result, out / "consensus.json")
    print(f"wrote {out / 'consensus.json'} ({args.model}, {len(result.overall)} submissions)")
    return EXIT_OK


def _cmd_bias_report(args: argparse.Namespace) -> int:
    config = _load_config(args.config, args.seed)
    n_min = args.n_min if args.n_min is not None else config.n_min
    dataset = _read_dataset(args.dataset)
    require_valid(dataset)
    reports = compute_reports(dataset, n_min=n_min)
    rows = io.bias_table_rows(reports, config.debias_strategy)
    out = Path(args.out)
    io.write_table(out / "bias_reports.csv", io.BIAS_TABLE_FIELDS, rows)
    flagged = sum(1 for r in reports if r.pattern.value in ("positive", "negative"))
    print(f"wrote {out / 'bias_reports.csv'} ({len(reports)} pairs, {flagged} flagged)")
    return EXIT_OK


def _cmd_debias(args: argparse.Namespace) -> int:
    from .bias import debias_grades

    config = _load_config(args.config, args.seed)
    strategy = _strategy(args.strategy) if args.strategy else config.debias_strategy
    n_min = args.n_min if args.n_min is not None else config.n_min
    dataset = _read_dataset(args.dataset)
    require_valid(dataset)
    reports = compute_reports(dataset, n_min=n_min)
    cleaned = debias_grades(dataset, reports, strategy)
    out = Path(args.out)
    io.save_dataset(cleaned, out / "debiased_dataset.json")
    print(f"wrote {out / 'debiased_dataset.json'} (strategy {strategy.value})")
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace) -> int:
    _load_config(args.config, args.seed)  # accepted for uniformity; validated only
    dataset = _read_dataset(args.dataset)
    try:
        consensus = io.load_consensus(args.consensus)
    except FileNotFoundError as exc:
        raise ConfigError(f"consensus file not found: {args.consensus}") from exc
    except (json.JSONDecodeError, FormatError, ValueError) as exc:
        raise InvalidDatasetError(f"consensus file {args.consensus}: {exc}") from exc
    if dataset.truth is None:
        raise InvalidDatasetError("truth required for evaluation")

    label = args.model_label
    reports = []
    for spec in dataset.views:
        pairs = [
            (t, consensus.view_grades[(s, spec.view_id)].value)
            for s in sorted(dataset.graph.submissions)
            if (t := dataset.truth.get(s, spec.view_id)) is not None
            and (s, spec.view_id) in consensus.view_grades
        ]
        truth_vec = tuple(t for t, _ in pairs)
        est_vec = tuple(e for _, e in pairs)
        reports.append(
            pooled_metrics([(truth_vec, est_vec)], scope=spec.view_id, model=label)
        )
    overall_pairs = []
    for s in sorted(dataset.graph.submissions):
        truths = {v: dataset.truth.get(s, v) for v in dataset.view_ids}
        if any(t is None for t in truths.values()) or s not in consensus.overall:
            continue
        overall_pairs.append(
            (combine_overall(truths, dataset.views), consensus.overall[s])
        )
    if overall_pairs:
        truth_vec = tuple(t for t, _ in overall_pairs)
        est_vec = tuple(e for _, e in overall_pairs)
        reports.append(
            pooled_metrics([(truth_vec, est_vec)], scope=OVERALL_SCOPE, model=label)
        )

    out = Path(args.out)
    io.write_table(
        out / "metrics.csv",
        io.METRICS_TABLE_FIELDS,
        io.metrics_table_rows(reports, k=float("nan"), n_runs=1),
    )
    for r in reports:
        print(
            f"{r.model:<10} {r.scope:<10} rho={r.rho:.4f} sigma={r.sigma:.4f} "
            f"rmse={r.rmse:.4f} n={r.n}"
        )
    print(f"wrote {out / 'metrics.csv'}")
    return EXIT_OK


def _cmd_experiment(args: argparse.Namespace) -> int:
    config = _load_config(args.config, args.seed)
    overrides = {}
    if args.runs is not None:
        overrides["n_runs"] = args.runs
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.out is not None:
        overrides["output_dir"] = str(args.out)
    if overrides:
        config = replace(config, **overrides)
        config.validate()
    result = run_experiment(config)
    print(format_metrics_table(result))
    if args.head:
        print()
        print(format_run_head(result, args.head))
    if config.output_dir is not None:
        print(f"\nartifacts written to {config.output_dir}")
    return EXIT_OK


def _parse_counts(text: str, flag: str) -> tuple[int, ...]:
    try:
        counts = tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError as exc:
        raise ConfigError(f"{flag} must be a comma-separated list of integers") from exc
    if not counts:
        raise ConfigError(f"{flag} must name at least one count")
    return counts


def _cmd_bias_sweep(args: argparse.Namespace) -> int:
    config = _load_config(args.config, args.seed)
    overrides = {}
    if args.runs is not None:
        overrides["n_runs"] = args.runs
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.out is not None:
        overrides["output_dir"] = str(args.out)
    if overrides:
        config = replace(config, **overrides)
        config.validate()
    counts1 = _parse_counts(args.counts_view1, "--counts-view1")
    counts2 = _parse_counts(args.counts_view2, "--counts-view2")
    sweep = run_bias_sweep(config, counts1, counts2)
    print(format_sweep_table(sweep))
    if config.output_dir is not None:
        print(f"\nartifacts written to {config.output_dir}")
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser, default_out: str | None = ".") -> None:
    parser.add_argument(
        "--config", type=Path, default=None, help="JSON config file (defaults apply)"
    )
    parser.add_argument(
        "--seed", type=int, default=None, help="override the master seed"
    )
    if default_out is None:
        parser.add_argument(
            "--out", type=Path, default=None, help="directory for output artifacts"
        )
    else:
        parser.add_argument(
            "--out", type=Path, default=Path(default_out), help="output directory"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="viewgrade",
        description="Multi-view consensus grading: generation, aggregation, "
        "bias analysis, and reproducible studies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic dataset + profile")
    _add_common(p)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("aggregate", help="compute consensus for one model")
    _add_common(p)
    p.add_argument("--dataset", type=Path, required=True, help="dataset JSON file")
    p.add_argument("--model", choices=("AVG", "DM1", "DM2"), default="DM1")
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("bias-report", help="detect bias patterns against truth")
    _add_common(p)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--n-min", type=int, default=None, help="minimum diffs per pair")
    p.set_defaults(func=_cmd_bias_report)

    p = sub.add_parser("debias", help="write a de-biased copy of a dataset")
    _add_common(p)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument(
        "--strategy",
        choices=[s.value for s in DebiasStrategy],
        default=None,
        help="correction statistic (default from config: min_diff)",
    )
    p.add_argument("--n-min", type=int, default=None)
    p.set_defaults(func=_cmd_debias)

    p = sub.add_parser("evaluate", help="score a consensus against truth")
    _add_common(p)
    p.add_argument("--consensus", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True, help="dataset with truth")
    p.add_argument("--model-label", default="model", help="label for the output rows")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("experiment", help="run the full multi-run study")
    _add_common(p, default_out=None)
    p.add_argument("--runs", type=int, default=None, help="override n_runs")
    p.add_argument("--workers", type=int, default=None, help="parallel run workers")
    p.add_argument(
        "--head", type=int, default=0, help="display per-run metrics for the first N runs"
    )
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("bias-sweep", help="sweep biased-grader counts (DM1 vs DM2)")
    _add_common(p, default_out=None)
    p.add_argument("--counts-view1", default="9,24", help="comma-separated counts")
    p.add_argument("--counts-view2", default="12,28", help="comma-separated counts")
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=_cmd_bias_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidDatasetError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
