"""End-to-end study harness.

Pipeline per run: generate a seeded cohort, run every requested model on
the identical dataset (paired comparison), score each view and the overall
grades against truth. Across runs, per-view metrics are averaged and
overall metrics are pooled. The bias sweep repeats the experiment over a
grid of biased-grader counts and reports the de-biasing improvement.

Run r always uses seed ``base_seed + r`` so any single run can be re-done
in isolation. Runs may execute in parallel; results are collected in run
order, so output is deterministic regardless of scheduling.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from functools import partial
from pathlib import Path
from typing import Any, Mapping, Sequence

from .bias import (
    DEFAULT_MIN_SAMPLES,
    BiasReport,
    DebiasStrategy,
    compute_reports,
    debias_grades,
)
from .engine import (
    ConsensusResult,
    EngineConfig,
    average_baseline,
    combine_overall,
    vancouver_views,
)
from .io import (
    BIAS_TABLE_FIELDS,
    METRICS_TABLE_FIELDS,
    bias_table_rows,
    metrics_table_rows,
    write_table,
)
from .metrics import (
    OVERALL_SCOPE,
    MetricsReport,
    error_sigma,
    pearson,
    pooled_metrics,
    rmse,
)
from .model import Dataset, InvalidDatasetError
from .synth import SynthConfig, generate

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentResult",
    "MODELS",
    "RunMetric",
    "SweepResult",
    "SweepRow",
    "config_from_dict",
    "config_to_dict",
    "run_bias_sweep",
    "run_experiment",
    "run_model",
    "write_experiment_artifacts",
    "write_sweep_artifacts",
]

MODELS = ("AVG", "DM1", "DM2")


class ConfigError(ValueError):
    """A configuration document or parameter set is unusable."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Full parameterization of a study.

    ``output_dir`` and ``workers`` are execution details: they are excluded
    from artifact provenance headers so byte-identical outputs do not
    depend on where results are written or how many processes ran.
    """

    synth: SynthConfig = SynthConfig()
    engine: EngineConfig = EngineConfig()
    models: tuple[str, ...] = MODELS
    debias_strategy: DebiasStrategy = DebiasStrategy.MIN_DIFF
    n_min: int = DEFAULT_MIN_SAMPLES
    n_runs: int = 100
    base_seed: int = 0
    output_dir: str | None = None
    emit_plot_data: bool = True
    workers: int = 1

    def validate(self) -> None:
        if self.n_runs < 1:
            raise ConfigError("n_runs must be >= 1")
        if not self.models:
            raise ConfigError("at least one model is required")
        for model in self.models:
            if model not in MODELS:
                raise ConfigError(f"unknown model {model!r}; expected one of {MODELS}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.base_seed < 0:
            raise ConfigError("base_seed must be nonnegative")
        if self.n_min < 1:
            raise ConfigError("n_min must be >= 1")
        try:
            self.synth.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def config_to_dict(config: ExperimentConfig) -> dict[str, Any]:
    """Canonical provenance form (excludes output_dir and workers)."""
    synth = {f.name: getattr(config.synth, f.name) for f in fields(config.synth)}
    synth["view_weights"] = list(config.synth.view_weights)
    synth["bias_counts"] = list(config.synth.bias_counts)
    return {
        "synth": synth,
        "engine": {
            "iterations": config.engine.iterations,
            "variance_floor": config.engine.variance_floor,
        },
        "models": list(config.models),
        "debias_strategy": config.debias_strategy.value,
        "n_min": config.n_min,
        "n_runs": config.n_runs,
        "base_seed": config.base_seed,
        "emit_plot_data": config.emit_plot_data,
    }


def _build_section(section: Mapping[str, Any], cls, name: str):
    known = {f.name for f in fields(cls)}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown {name} fields: {sorted(unknown)}")
    kwargs = dict(section)
    for key in ("view_weights", "bias_counts"):
        if key in kwargs and kwargs[key] is not None:
            kwargs[key] = tuple(kwargs[key])
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name} config: {exc}") from exc


def config_from_dict(doc: Mapping[str, Any]) -> ExperimentConfig:
    """Parse a config document; unspecified fields take the defaults."""
    known = {
        "synth",
        "engine",
        "models",
        "debias_strategy",
        "n_min",
        "n_runs",
        "base_seed",
        "output_dir",
        "emit_plot_data",
        "workers",
    }
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")

    synth = _build_section(doc.get("synth", {}), SynthConfig, "synth")
    engine = _build_section(doc.get("engine", {}), EngineConfig, "engine")
    strategy_name = doc.get("debias_strategy", DebiasStrategy.MIN_DIFF.value)
    try:
        strategy = DebiasStrategy(strategy_name)
    except ValueError as exc:
        raise ConfigError(f"unknown debias strategy {strategy_name!r}") from exc
    config = ExperimentConfig(
        synth=synth,
        engine=engine,
        models=tuple(doc.get("models", MODELS)),
        debias_strategy=strategy,
        n_min=int(doc.get("n_min", DEFAULT_MIN_SAMPLES)),
        n_runs=int(doc.get("n_runs", 100)),
        base_seed=int(doc.get("base_seed", 0)),
        output_dir=doc.get("output_dir"),
        emit_plot_data=bool(doc.get("emit_plot_data", True)),
        workers=int(doc.get("workers", 1)),
    )
    config.validate()
    return config


def _dm2_pipeline(
    dataset: Dataset,
    engine: EngineConfig,
    strategy: DebiasStrategy,
    n_min: int,
) -> tuple[list[BiasReport], ConsensusResult]:
    if dataset.truth is None:
        raise InvalidDatasetError("DM2 requires expert truth for calibration")
    reports = compute_reports(dataset, n_min=n_min)
    cleaned = debias_grades(dataset, reports, strategy)
    return reports, vancouver_views(cleaned, engine)


def run_model(
    dataset: Dataset,
    model: str,
    engine: EngineConfig | None = None,
    debias_strategy: DebiasStrategy = DebiasStrategy.MIN_DIFF,
    n_min: int = DEFAULT_MIN_SAMPLES,
) -> ConsensusResult:
    """Execute one model: AVG (plain mean), DM1 (per-view consensus without
    de-biasing), or DM2 (detect, de-bias, then per-view consensus)."""
    engine = engine or EngineConfig()
    if model == "AVG":
        return average_baseline(dataset, variance_floor=engine.variance_floor)
    if model == "DM1":
        return vancouver_views(dataset, engine)
    if model == "DM2":
        _, result = _dm2_pipeline(dataset, engine, debias_strategy, n_min)
        return result
    raise ConfigError(f"unknown model {model!r}; expected one of {MODELS}")


@dataclass(frozen=True)
class RunMetric:
    """One per-run metric value (tidy plot-data row)."""

    run: int
    model: str
    scope: str
    metric: str
    value: float


@dataclass(frozen=True)
class _RunOutcome:
    run: int
    samples: dict[tuple[str, str], tuple[tuple[float, ...], tuple[float, ...]]]
    metric_rows: tuple[RunMetric, ...]
    bias_reports: tuple[BiasReport, ...]


def _execute_run(config: ExperimentConfig, run_index: int) -> _RunOutcome:
    seed = config.base_seed + run_index
    try:
        dataset, _ = generate(replace(config.synth, seed=seed))
        truth = dataset.truth
        submissions = sorted(dataset.graph.submissions)
        view_ids = dataset.view_ids
        view_truth = {
            v: tuple(truth.get(s, v) for s in submissions) for v in view_ids
        }
        overall_truth = tuple(
            combine_overall(
                {v: truth.get(s, v) for v in view_ids}, dataset.views
            )
            for s in submissions
        )

        samples: dict[tuple[str, str], tuple[tuple[float, ...], tuple[float, ...]]] = {}
        metric_rows: list[RunMetric] = []
        bias_reports: tuple[BiasReport, ...] = ()
        for model in config.models:
            if model == "DM2":
                reports, result = _dm2_pipeline(
                    dataset, config.engine, config.debias_strategy, config.n_min
                )
                bias_reports = tuple(reports)
            else:
                result = run_model(dataset, model, config.engine)
            for v in view_ids:
                est = tuple(result.view_grades[(s, v)].value for s in submissions)
                samples[(model, v)] = (view_truth[v], est)
            est_overall = tuple(result.overall[s] for s in submissions)
            samples[(model, OVERALL_SCOPE)] = (overall_truth, est_overall)
            for scope in (*view_ids, OVERALL_SCOPE):
                t, e = samples[(model, scope)]
                metric_rows.append(RunMetric(run_index, model, scope, "rho", pearson(t, e)))
                metric_rows.append(RunMetric(run_index, model, scope, "sigma", error_sigma(t, e)))
                metric_rows.append(RunMetric(run_index, model, scope, "rmse", rmse(t, e)))
        return _RunOutcome(run_index, samples, tuple(metric_rows), bias_reports)
    except Exception as exc:
        raise type(exc)(f"run {run_index} (seed {seed}): {exc}") from exc


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    metrics: tuple[MetricsReport, ...]
    run_metrics: tuple[RunMetric, ...]
    bias_reports: tuple[tuple[int, BiasReport], ...]

    def metric(self, model: str, scope: str) -> MetricsReport:
        for report in self.metrics:
            if report.model == model and report.scope == scope:
                return report
        raise KeyError(f"no metrics for model {model!r}, scope {scope!r}")


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every model over n_runs seeded cohorts and summarize.

    Deterministic in the config: the same config gives byte-identical
    artifacts regardless of the worker count.
    """
    config.validate()
    indices = range(config.n_runs)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(partial(_execute_run, config), indices))
    else:
        outcomes = [_execute_run(config, r) for r in indices]
    outcomes.sort(key=lambda o: o.run)

    scopes = (*_view_ids(config.synth), OVERALL_SCOPE)
    summary = tuple(
        pooled_metrics(
            [o.samples[(model, scope)] for o in outcomes], scope=scope, model=model
        )
        for model in config.models
        for scope in scopes
    )
    run_metrics = tuple(row for o in outcomes for row in o.metric_rows)
    bias_reports = tuple(
        (o.run, report) for o in outcomes for report in o.bias_reports
    )
    result = ExperimentResult(
        config=config,
        metrics=summary,
        run_metrics=run_metrics,
        bias_reports=bias_reports,
    )
    if config.output_dir is not None:
        write_experiment_artifacts(result, Path(config.output_dir))
    return result


def _view_ids(synth: SynthConfig) -> tuple[str, ...]:
    return tuple(f"v{k + 1}" for k in range(synth.n_views))


def _provenance(config: ExperimentConfig) -> dict[str, Any]:
    last = config.base_seed + config.n_runs - 1
    return {
        "config": config_to_dict(config),
        "seeds": f"{config.base_seed}..{last} (run r uses base_seed + r)",
    }


def write_experiment_artifacts(result: ExperimentResult, out_dir: Path) -> list[Path]:
    """metrics.csv, runs.csv (plot data), bias_reports.csv under out_dir."""
    config = result.config
    meta = _provenance(config)
    out_dir = Path(out_dir)
    paths = []

    metrics_path = out_dir / "metrics.csv"
    write_table(
        metrics_path,
        METRICS_TABLE_FIELDS,
        metrics_table_rows(result.metrics, k=config.synth.gamma_shape, n_runs=config.n_runs),
        meta={"artifact": "experiment metrics summary", **meta},
    )
    paths.append(metrics_path)

    if config.emit_plot_data:
        runs_path = out_dir / "runs.csv"
        write_table(
            runs_path,
            ("run", "model", "scope", "metric", "value"),
            (
                {
                    "run": m.run,
                    "model": m.model,
                    "scope": m.scope,
                    "metric": m.metric,
                    "value": m.value,
                }
                for m in result.run_metrics
            ),
            meta={"artifact": "per-run metric values", **meta},
        )
        paths.append(runs_path)

    if result.bias_reports:
        bias_path = out_dir / "bias_reports.csv"
        rows = []
        for run_index, report in result.bias_reports:
            for row in bias_table_rows([report], config.debias_strategy):
                rows.append({"run": run_index, **row})
        write_table(
            bias_path,
            ("run", *BIAS_TABLE_FIELDS),
            rows,
            meta={"artifact": "per-run bias reports", **meta},
        )
        paths.append(bias_path)
    return paths


@dataclass(frozen=True)
class SweepRow:
    """De-biasing gain for one view at one biased-grader count."""

    setting: int
    view: str
    biased_count: int
    dm1_rho: float
    dm1_sigma: float
    dm1_rmse: float
    dm2_rho: float
    dm2_sigma: float
    dm2_rmse: float
    rho_improvement_pct: float
    sigma_improvement_pct: float
    rmse_improvement_pct: float


@dataclass(frozen=True)
class SweepResult:
    config: ExperimentConfig
    counts_view1: tuple[int, ...]
    counts_view2: tuple[int, ...]
    rows: tuple[SweepRow, ...]
    results: tuple[ExperimentResult, ...]


def run_bias_sweep(
    config: ExperimentConfig,
    counts_view1: Sequence[int],
    counts_view2: Sequence[int],
) -> SweepResult:
    """Rerun the experiment per paired biased-grader count and compare
    DM2 against DM1 per view. Improvements are computed from unrounded
    values; rounding happens only at display."""
    if len(counts_view1) != len(counts_view2):
        raise ConfigError("count lists must have equal length")
    if not counts_view1:
        raise ConfigError("at least one count setting is required")
    if config.synth.n_views != 2:
        raise ConfigError("the bias sweep is defined for two-view cohorts")

    rows: list[SweepRow] = []
    results: list[ExperimentResult] = []
    for setting, (c1, c2) in enumerate(zip(counts_view1, counts_view2)):
        sub_config = replace(
            config,
            synth=replace(config.synth, bias_counts=(int(c1), int(c2))),
            models=("DM1", "DM2"),
            output_dir=None,
        )
        result = run_experiment(sub_config)
        results.append(result)
        for view, count in zip(_view_ids(config.synth), (int(c1), int(c2))):
            dm1 = result.metric("DM1", view)
            dm2 = result.metric("DM2", view)
            rows.append(
                SweepRow(
                    setting=setting,
                    view=view,
                    biased_count=count,
                    dm1_rho=dm1.rho,
                    dm1_sigma=dm1.sigma,
                    dm1_rmse=dm1.rmse,
                    dm2_rho=dm2.rho,
                    dm2_sigma=dm2.sigma,
                    dm2_rmse=dm2.rmse,
                    rho_improvement_pct=(dm2.rho - dm1.rho) / dm1.rho * 100.0,
                    sigma_improvement_pct=(dm1.sigma - dm2.sigma) / dm1.sigma * 100.0,
                    rmse_improvement_pct=(dm1.rmse - dm2.rmse) / dm1.rmse * 100.0,
                )
            )
    sweep = SweepResult(
        config=config,
        counts_view1=tuple(int(c) for c in counts_view1),
        counts_view2=tuple(int(c) for c in counts_view2),
        rows=tuple(rows),
        results=tuple(results),
    )
    if config.output_dir is not None:
        write_sweep_artifacts(sweep, Path(config.output_dir))
    return sweep


SWEEP_TABLE_FIELDS = (
    "setting",
    "view",
    "biased_count",
    "dm1_rho",
    "dm1_sigma",
    "dm1_rmse",
    "dm2_rho",
    "dm2_sigma",
    "dm2_rmse",
    "rho_improvement_pct",
    "sigma_improvement_pct",
    "rmse_improvement_pct",
)


def write_sweep_artifacts(sweep: SweepResult, out_dir: Path) -> list[Path]:
    meta = {
        "artifact": "bias sweep summary",
        **_provenance(sweep.config),
        "counts_view1": list(sweep.counts_view1),
        "counts_view2": list(sweep.counts_view2),
    }
    path = Path(out_dir) / "sweep.csv"
    write_table(
        path,
        SWEEP_TABLE_FIELDS,
        ({field: getattr(row, field) for field in SWEEP_TABLE_FIELDS} for row in sweep.rows),
        meta=meta,
    )
    return [path]


def format_metrics_table(result: ExperimentResult) -> str:
    """Fixed-width console rendering of the summary metrics."""
    lines = [f"{'model':<6} {'scope':<10} {'rho':>8} {'sigma':>8} {'rmse':>8} {'n':>7}"]
    for report in result.metrics:
        lines.append(
            f"{report.model:<6} {report.scope:<10} "
            f"{report.rho:>8.3f} {report.sigma:>8.3f} {report.rmse:>8.3f} {report.n:>7d}"
        )
    return "\n".join(lines)


def format_run_head(result: ExperimentResult, head: int) -> str:
    """Per-run metric lines for the first ``head`` runs."""
    lines = [f"{'run':>4} {'model':<6} {'scope':<10} {'metric':<6} {'value':>12}"]
    for m in result.run_metrics:
        if m.run >= head:
            continue
        lines.append(
            f"{m.run:>4d} {m.model:<6} {m.scope:<10} {m.metric:<6} {m.value:>12.6f}"
        )
    return "\n".join(lines)


def format_sweep_table(sweep: SweepResult) -> str:
    """Fixed-width console rendering; improvements rounded to two decimals."""
    lines = [
        f"{'view':<6} {'count':>5} {'model':<6} {'rho':>8} {'sigma':>8} {'rmse':>8} "
        f"{'impr_rho%':>10} {'impr_sigma%':>12} {'impr_rmse%':>11}"
    ]
    for row in sweep.rows:
        lines.append(
            f"{row.view:<6} {row.biased_count:>5d} {'DM1':<6} "
            f"{row.dm1_rho:>8.3f} {row.dm1_sigma:>8.3f} {row.dm1_rmse:>8.3f} "
            f"{'':>10} {'':>12} {'':>11}"
        )
        lines.append(
            f"{row.view:<6} {row.biased_count:>5d} {'DM2':<6} "
            f"{row.dm2_rho:>8.3f} {row.dm2_sigma:>8.3f} {row.dm2_rmse:>8.3f} "
            f"{row.rho_improvement_pct:>10.2f} {row.sigma_improvement_pct:>12.2f} "
            f"{row.rmse_improvement_pct:>11.2f}"
        )
    return "\n".join(lines)
