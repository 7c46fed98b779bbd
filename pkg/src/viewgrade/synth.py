"""Seeded synthetic grading cohorts.

True grades are Gaussian per view, each grader has a Gamma-distributed
noise variance per view, review assignment is balanced and random, and a
configurable number of graders per view carry a constant injected offset
(the bias the detection stage is supposed to find).

Every random concern (assignment, truths, variances, noise, bias
selection) draws from its own stream derived from the master seed by a
fixed label, so toggling bias injection never perturbs the other draws and
model comparisons stay paired.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .model import Dataset, GradeRecord, ReviewGraph, TruthTable, ViewSpec

__all__ = ["GroundTruthProfile", "SynthConfig", "assign_reviews", "generate"]

_STREAM_ASSIGNMENT = 0
_STREAM_TRUTH = 1
_STREAM_VARIANCE = 2
_STREAM_NOISE = 3
_STREAM_BIAS = 4


def _stream(seed: int, label: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, label, *extra)))


@dataclass(frozen=True)
class SynthConfig:
    """Cohort parameters.

    Defaults follow the reference study: 50 graders, 50 submissions, 6
    reviews per grader, 2 unit-weight views, unit-variance Gaussian truths,
    Gamma(shape 2, scale 0.4) grader variances, and (9, 12) biased graders
    per view.

    Injected offsets have magnitude Uniform(bias_offset_low,
    bias_offset_high), held constant across a grader's grades on that view.
    The offset distribution is a free parameter of the cohort: magnitudes
    of roughly 1–5 are sensible on a unit-variance truth scale (around 1
    the offset hides inside typical grader noise; around 3–5 it dominates
    the noise, degrades plain averaging visibly, and is detected
    near-certainly), and ``bias_sign`` picks the sign distribution —
    "random" (each biased grader ±1 with equal probability), "positive"
    (systematic leniency), or "negative" (systematic severity).
    """

    n_graders: int = 50
    n_submissions: int = 50
    reviews_per_grader: int = 6
    n_views: int = 2
    view_weights: tuple[float, ...] = (1.0, 1.0)
    truth_mean: float = 0.0
    truth_sd: float = 1.0
    gamma_shape: float = 2.0
    gamma_scale: float = 0.4
    bias_counts: tuple[int, ...] = (9, 12)
    bias_offset_low: float = 1.0
    bias_offset_high: float = 2.0
    bias_sign: str = "random"
    seed: int = 0

    def validate(self) -> None:
        if self.n_graders < 1 or self.n_submissions < 1:
            raise ValueError("need at least one grader and one submission")
        if self.n_views < 1:
            raise ValueError("need at least one view")
        if len(self.view_weights) != self.n_views:
            raise ValueError("view_weights length must equal n_views")
        if any(w < 0 for w in self.view_weights):
            raise ValueError("view weights must be nonnegative")
        if len(self.bias_counts) != self.n_views:
            raise ValueError("bias_counts length must equal n_views")
        if any(not 0 <= c <= self.n_graders for c in self.bias_counts):
            raise ValueError("bias counts must lie in [0, n_graders]")
        if self.truth_sd < 0:
            raise ValueError("truth_sd must be >= 0")
        if not (self.gamma_shape > 0 and self.gamma_scale > 0):
            raise ValueError("gamma shape and scale must be > 0")
        if not 0 < self.bias_offset_low <= self.bias_offset_high:
            raise ValueError("need 0 < bias_offset_low <= bias_offset_high")
        if self.bias_sign not in ("random", "positive", "negative"):
            raise ValueError("bias_sign must be 'random', 'positive' or 'negative'")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        _check_assignment_feasible(
            self.n_submissions, self.n_graders, self.reviews_per_grader
        )


def _check_assignment_feasible(n_submissions: int, n_graders: int, r: int) -> None:
    if r < 2:
        raise ValueError(
            "cannot satisfy degree >= 2: each grader needs at least 2 reviews"
        )
    if r > n_submissions:
        raise ValueError(
            "cannot satisfy degree >= 2: more reviews per grader than submissions"
        )
    if n_graders * r < 2 * n_submissions:
        raise ValueError(
            "cannot satisfy degree >= 2: "
            f"{n_graders} graders x {r} reviews < 2 x {n_submissions} submissions"
        )


def _node_ids(prefix: str, count: int) -> list[str]:
    width = max(1, len(str(count - 1)))
    return [f"{prefix}{i:0{width}d}" for i in range(count)]


def assign_reviews(
    n_submissions: int, n_graders: int, reviews_per_grader: int, seed: int
) -> ReviewGraph:
    """Balanced random assignment: every grader reviews exactly
    ``reviews_per_grader`` distinct submissions and submission in-degrees
    differ by at most one. Deterministic in the seed."""
    _check_assignment_feasible(n_submissions, n_graders, reviews_per_grader)
    rng = _stream(seed, _STREAM_ASSIGNMENT)
    r = reviews_per_grader
    total = n_graders * r
    base, extra = divmod(total, n_submissions)

    for rows in _assignment_attempts(rng, n_submissions, n_graders, r, base, extra):
        if _repair_duplicates(rows, rng, n_graders, r):
            break

    submissions = _node_ids("s", n_submissions)
    graders = _node_ids("g", n_graders)
    edges = {
        (submissions[s], graders[g]) for g, row in enumerate(rows) for s in row
    }
    assert len(edges) == total
    return ReviewGraph.from_edges(edges)


def _assignment_attempts(
    rng: np.random.Generator,
    n_submissions: int,
    n_graders: int,
    r: int,
    base: int,
    extra: int,
) -> Iterator[list[list[int]]]:
    """Endless stream of fresh balanced-but-possibly-duplicated dealings."""
    while True:
        quota = np.full(n_submissions, base, dtype=np.int64)
        if extra:
            quota[rng.choice(n_submissions, size=extra, replace=False)] += 1
        pool = np.repeat(np.arange(n_submissions), quota)
        rng.shuffle(pool)
        yield [list(pool[g * r : (g + 1) * r]) for g in range(n_graders)]


def _repair_duplicates(
    rows: list[list[int]], rng: np.random.Generator, n_graders: int, r: int
) -> bool:
    """Swap away duplicate submissions within grader rows.

    Each accepted swap strictly reduces the duplicate count, so this
    terminates; returns False to request a fresh dealing if the random
    probing stalls (rare, pathological configurations).
    """
    for _ in range(10000):
        dup = None
        for g, row in enumerate(rows):
            seen = set()
            for p, s in enumerate(row):
                if s in seen:
                    dup = (g, p, s)
                    break
                seen.add(s)
            if dup:
                break
        if dup is None:
            return True
        g, p, s = dup
        row_set = set(rows[g])
        for _ in range(1000):
            g2 = int(rng.integers(n_graders))
            if g2 == g:
                continue
            p2 = int(rng.integers(r))
            s2 = rows[g2][p2]
            if s2 == s or s2 in row_set or s in rows[g2]:
                continue
            rows[g][p], rows[g2][p2] = s2, s
            break
        else:
            return False
    return False


@dataclass(frozen=True)
class GroundTruthProfile:
    """What the generator actually injected, keyed by (grader_id, view_id):
    the grader's true noise variance and their constant offset (0 when
    unbiased)."""

    true_variances: dict[tuple[str, str], float] = field(default_factory=dict)
    injected_offsets: dict[tuple[str, str], float] = field(default_factory=dict)


def generate(config: SynthConfig) -> tuple[Dataset, GroundTruthProfile]:
    """Draw a full synthetic dataset plus the profile of what was injected.

    Observed grade = true grade + Normal(0, v_j) noise + the grader's
    injected offset on that view (0 for unbiased graders). The truth table
    is complete. Bit-for-bit deterministic in the config.
    """
    config.validate()
    graph = assign_reviews(
        config.n_submissions, config.n_graders, config.reviews_per_grader, config.seed
    )
    submissions = sorted(graph.submissions)
    graders = sorted(graph.graders)
    edges = sorted(graph.edges)
    sub_index = {s: i for i, s in enumerate(submissions)}
    grader_index = {g: j for j, g in enumerate(graders)}

    half_span = 10.0 * (config.truth_sd + 1.0)
    views = tuple(
        ViewSpec(
            view_id=f"v{k + 1}",
            label=f"view {k + 1}",
            scale_min=config.truth_mean - half_span,
            scale_max=config.truth_mean + half_span,
            weight=config.view_weights[k],
        )
        for k in range(config.n_views)
    )

    grades: list[GradeRecord] = []
    truth_entries: dict[tuple[str, str], float] = {}
    true_variances: dict[tuple[str, str], float] = {}
    injected_offsets: dict[tuple[str, str], float] = {}

    for k, spec in enumerate(views):
        truths = _stream(config.seed, _STREAM_TRUTH, k).normal(
            config.truth_mean, config.truth_sd, size=config.n_submissions
        )
        variances = _stream(config.seed, _STREAM_VARIANCE, k).gamma(
            config.gamma_shape, scale=config.gamma_scale, size=config.n_graders
        )
        noise = _stream(config.seed, _STREAM_NOISE, k).standard_normal(len(edges))

        offsets = np.zeros(config.n_graders)
        count = config.bias_counts[k]
        if count:
            rng_bias = _stream(config.seed, _STREAM_BIAS, k)
            chosen = rng_bias.choice(config.n_graders, size=count, replace=False)
            magnitude = rng_bias.uniform(
                config.bias_offset_low, config.bias_offset_high, size=count
            )
            # sign draws happen under every policy so switching bias_sign
            # never perturbs the selection or magnitude stream
            coin = rng_bias.integers(0, 2, size=count)
            if config.bias_sign == "positive":
                sign = np.ones(count)
            elif config.bias_sign == "negative":
                sign = -np.ones(count)
            else:
                sign = np.where(coin == 1, 1.0, -1.0)
            offsets[chosen] = magnitude * sign

        for e, (s, g) in enumerate(edges):
            j = grader_index[g]
            value = (
                truths[sub_index[s]]
                + math.sqrt(variances[j]) * noise[e]
                + offsets[j]
            )
            grades.append(
                GradeRecord(
                    grader_id=g,
                    submission_id=s,
                    view_id=spec.view_id,
                    grade=float(value),
                )
            )
        for s in submissions:
            truth_entries[(s, spec.view_id)] = float(truths[sub_index[s]])
        for g in graders:
            j = grader_index[g]
            true_variances[(g, spec.view_id)] = float(variances[j])
            injected_offsets[(g, spec.view_id)] = float(offsets[j])

    # canonical record order, so written files round-trip to equal datasets
    grades.sort(key=lambda r: (r.submission_id, r.grader_id, r.view_id))
    dataset = Dataset(
        views=views,
        graph=graph,
        grades=tuple(grades),
        truth=TruthTable(truth_entries),
    )
    profile = GroundTruthProfile(
        true_variances=true_variances, injected_offsets=injected_offsets
    )
    return dataset, profile
