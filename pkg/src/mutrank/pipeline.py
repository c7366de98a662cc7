"""End-to-end orchestration: store building, ranking with decisions,
surfacing under caps, feedback-ratio replay, grid tuning, and the
evaluation statistics (Kendall tau-b, chi-square).

Tuning replays score every configuration by the negative feedback ratio it
would have achieved on held-out labeled mutants after suppression. The
ratio uses probability-weighted (expected) retention for probabilistic
policies, which removes seed variance from model selection. Surfacing caps
do not apply during tuning; they bind only in production surfacing.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .diffs import MutantRecord
from .labels import (
    KilledStatus,
    PerceivedFeedback,
    TemplateStats,
    aggregate,
    derive_killed_status,
    derive_perceived_feedback,
)
from .langs import ProfileRegistry
from .scoring import (
    FeedbackScore,
    GlobalStats,
    KillScore,
    RankingConfig,
    ScoredCandidate,
    rank,
)
from .store import TemplateStore, new_store
from .suppression import (
    SeededDraws,
    SuppressionDecision,
    SuppressionPolicy,
    decide,
    suppress_probability,
)
from .templates import (
    Abstraction,
    GRID_CONTEXT_SIZES,
    GRID_VOCABULARY_SIZES,
    TemplateBuilder,
    TemplateConfig,
    TemplateKey,
    Vocabulary,
    build_vocabulary,
)

NEGATIVE_LABELS = frozenset(
    {PerceivedFeedback.PERCEIVED_NOT_USEFUL, PerceivedFeedback.MIXED_FEEDBACK}
)
FEEDBACK_LABELS = frozenset(
    {
        PerceivedFeedback.PERCEIVED_USEFUL,
        PerceivedFeedback.PERCEIVED_NOT_USEFUL,
        PerceivedFeedback.MIXED_FEEDBACK,
    }
)


@dataclass(frozen=True, slots=True)
class SurfacingCaps:
    per_file: int = 3
    per_changelist: int = 10

    def __post_init__(self) -> None:
        if self.per_file < 1 or self.per_changelist < 1:
            raise ValueError("caps must be >= 1")
        if self.per_file > self.per_changelist:
            raise ValueError("per_file cap cannot exceed per_changelist cap")


@dataclass(frozen=True, slots=True)
class RunConfig:
    template: TemplateConfig
    ranking: RankingConfig
    suppression: SuppressionPolicy

    def describe(self) -> str:
        return (
            f"{self.template.describe()} {self.ranking.describe()}"
            f" suppression={self.suppression.value}"
        )


DEFAULT_RUN_CONFIG = RunConfig(
    template=TemplateConfig(),
    ranking=RankingConfig(),
    suppression=SuppressionPolicy.PROBABILISTIC,
)

def full_grid() -> list[RunConfig]:
    """Every tunable combination: 3 x 4 x 2 x 4 x 3 = 288 configurations."""
    rankings = tuple(
        RankingConfig(feedback_score=f, kill_score=k)
        for f in (FeedbackScore.USEFULNESS, FeedbackScore.BAYES_USEFULNESS)
        for k in (KillScore.KILL_RATIO, KillScore.KILL_COUNTER)
    )
    grid: list[RunConfig] = []
    for abstraction in (Abstraction.ORIGINAL_CODE, Abstraction.TYPED, Abstraction.INDEXED_TYPED):
        for vocab_size in GRID_VOCABULARY_SIZES:
            for context_size in GRID_CONTEXT_SIZES:
                template = TemplateConfig(abstraction, context_size, vocab_size)
                for ranking in rankings:
                    for policy in (
                        SuppressionPolicy.NONE,
                        SuppressionPolicy.AVERAGE_THRESHOLD,
                        SuppressionPolicy.PROBABILISTIC,
                    ):
                        grid.append(RunConfig(template, ranking, policy))
    return grid


def perceived_label(record: MutantRecord) -> PerceivedFeedback:
    return derive_perceived_feedback(record.pos_feed_list, record.neg_feed_list)


def killed_label(record: MutantRecord) -> KilledStatus:
    return derive_killed_status(record.killed_list)


def build_store(
    records: Sequence[MutantRecord],
    config: TemplateConfig,
    profiles: ProfileRegistry | None = None,
    vocabulary: Vocabulary | None = None,
    builder: TemplateBuilder | None = None,
    built_at: str | None = None,
) -> TemplateStore:
    """Template generation end to end: vocabulary, templates, aggregation."""
    if builder is None:
        builder = TemplateBuilder(profiles)
    if vocabulary is None:
        vocabulary = build_vocabulary(records, config.vocabulary_size, builder=builder)
    labeled = (
        (builder.build(r, config, vocabulary), perceived_label(r), killed_label(r))
        for r in records
    )
    return new_store(aggregate(labeled), vocabulary, config, built_at=built_at)


@dataclass(slots=True)
class RankedMutant:
    record: MutantRecord
    key: TemplateKey
    rank: int
    feedback_score: float
    kill_vector: tuple[float, ...]
    breakdown: object
    decision: SuppressionDecision

    @property
    def mutant_id(self) -> str:
        return self.record.mutant_id

    @property
    def changelist_id(self) -> str:
        return self.record.changelist_id

    @property
    def filename(self) -> str:
        return self.record.filename

    @property
    def suppressed(self) -> bool:
        return self.decision.suppressed


def rank_and_decide(
    records: Sequence[MutantRecord],
    store: TemplateStore,
    ranking: RankingConfig | None = None,
    policy: SuppressionPolicy = SuppressionPolicy.PROBABILISTIC,
    seed: int = 0,
    profiles: ProfileRegistry | None = None,
    builder: TemplateBuilder | None = None,
) -> list[RankedMutant]:
    """Rank records against the store and attach suppression decisions."""
    if builder is None:
        builder = TemplateBuilder(profiles)
    by_id = {r.mutant_id: r for r in records}
    if len(by_id) != len(records):
        raise ValueError("duplicate mutant_id in ranking input")
    keys = {r.mutant_id: builder.build(r, store.config, store.vocabulary) for r in records}
    scored = rank(
        ((r.mutant_id, keys[r.mutant_id]) for r in records),
        store.entries,
        store.global_stats,
        ranking,
    )
    draws = SeededDraws(seed)
    out: list[RankedMutant] = []
    for position, candidate in enumerate(scored, start=1):
        record = by_id[candidate.mutant_id]
        decision = decide(
            store.lookup(candidate.key),
            store.global_stats,
            policy,
            draws,
            candidate.mutant_id,
        )
        out.append(
            RankedMutant(
                record=record,
                key=candidate.key,
                rank=position,
                feedback_score=candidate.feedback_score,
                kill_vector=candidate.kill_vector,
                breakdown=candidate.breakdown,
                decision=decision,
            )
        )
    return out


def surface(ranked: Iterable, caps: SurfacingCaps) -> list:
    """Walk in rank order, skip suppressed mutants, enforce caps.

    Items need ``suppressed``, ``changelist_id`` and ``filename`` attributes;
    per-file counts are scoped within their changelist.
    """
    admitted: list = []
    per_changelist: Counter[str] = Counter()
    per_file: Counter[tuple[str, str]] = Counter()
    for item in ranked:
        if item.suppressed:
            continue
        cl = item.changelist_id
        file_key = (cl, item.filename)
        if per_changelist[cl] >= caps.per_changelist:
            continue
        if per_file[file_key] >= caps.per_file:
            continue
        per_changelist[cl] += 1
        per_file[file_key] += 1
        admitted.append(item)
    return admitted


def negative_feedback_ratio(
    labels: Iterable[PerceivedFeedback],
    denominator: str = "feedback",
) -> Fraction | None:
    """Share of surfaced mutants whose feedback was negative.

    ``denominator="feedback"`` divides by mutants with any feedback (the
    reporting definition); ``denominator="surfaced"`` divides by all
    surfaced mutants including silent ones (the tuning definition). Returns
    None when the denominator is empty.
    """
    if denominator not in ("feedback", "surfaced"):
        raise ValueError(f"unknown denominator {denominator!r}")
    negative = 0
    with_feedback = 0
    total = 0
    for label in labels:
        total += 1
        if label in FEEDBACK_LABELS:
            with_feedback += 1
        if label in NEGATIVE_LABELS:
            negative += 1
    denom = with_feedback if denominator == "feedback" else total
    if denom == 0:
        return None
    return Fraction(negative, denom)


@dataclass(frozen=True, slots=True)
class ReplayResult:
    ratio: Fraction | float | None
    retained_total: Fraction | float
    retained_with_feedback: Fraction | float
    mode: str


def replay_nfr(
    eval_records: Sequence[MutantRecord],
    store: TemplateStore,
    policy: SuppressionPolicy,
    seed: int = 0,
    mode: str = "expected",
    denominator: str = "surfaced",
    profiles: ProfileRegistry | None = None,
    builder: TemplateBuilder | None = None,
) -> ReplayResult:
    """Hypothetical negative feedback ratio after suppressing eval records.

    ``mode="expected"`` weights each record by its retention probability;
    ``mode="sampled"`` takes seeded draws. With only deterministic
    suppression outcomes the arithmetic stays exact rational.
    """
    if mode not in ("expected", "sampled"):
        raise ValueError(f"unknown replay mode {mode!r}")
    if builder is None:
        builder = TemplateBuilder(profiles)
    draws = SeededDraws(seed)
    weights: list[float] = []
    flags: list[PerceivedFeedback] = []
    for record in eval_records:
        key = builder.build(record, store.config, store.vocabulary)
        stats = store.lookup(key)
        if mode == "expected":
            weight = 1.0 - suppress_probability(stats, store.global_stats, policy)
        else:
            decision = decide(stats, store.global_stats, policy, draws, record.mutant_id)
            weight = 0.0 if decision.suppressed else 1.0
        weights.append(weight)
        flags.append(perceived_label(record))
    exact = all(w in (0.0, 1.0) for w in weights)
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    negative = zero
    with_feedback = zero
    total = zero
    for weight, label in zip(weights, flags):
        w = (one * int(weight)) if exact else weight
        total += w
        if label in FEEDBACK_LABELS:
            with_feedback += w
        if label in NEGATIVE_LABELS:
            negative += w
    denom = with_feedback if denominator == "feedback" else total
    ratio = None if denom == 0 else negative / denom
    return ReplayResult(
        ratio=ratio,
        retained_total=total,
        retained_with_feedback=with_feedback,
        mode=mode,
    )


@dataclass(frozen=True, slots=True)
class TuningRow:
    config: RunConfig
    ratio: Fraction | float | None
    retained_total: Fraction | float
    retained_with_feedback: Fraction | float


@dataclass(frozen=True, slots=True)
class TuningReport:
    rows: tuple[TuningRow, ...]
    best_index: int

    @property
    def best(self) -> RunConfig:
        return self.rows[self.best_index].config


def tune(
    train: Sequence[MutantRecord],
    eval_records: Sequence[MutantRecord],
    grid: Sequence[RunConfig],
    seed: int = 0,
    profiles: ProfileRegistry | None = None,
) -> TuningReport:
    """Replay every grid configuration and pick the lowest-ratio one.

    The store is built from ``train`` once per distinct template
    configuration; ties on the ratio break by more retained feedback, then
    by grid order. Configurations with an undefined ratio rank last.
    """
    if not grid:
        raise ValueError("empty tuning grid")
    train = list(train)
    eval_records = list(eval_records)
    overlap = {r.mutant_id for r in train} & {r.mutant_id for r in eval_records}
    if overlap:
        raise ValueError(f"train/eval overlap on {len(overlap)} mutant ids")
    builder = TemplateBuilder(profiles)
    vocabularies: dict[int, Vocabulary] = {}
    stores: dict[TemplateConfig, TemplateStore] = {}
    replays: dict[tuple[TemplateConfig, SuppressionPolicy], ReplayResult] = {}
    rows: list[TuningRow] = []
    for config in grid:
        template_config = config.template
        store = stores.get(template_config)
        if store is None:
            size = template_config.vocabulary_size
            vocabulary = vocabularies.get(size)
            if vocabulary is None:
                vocabulary = build_vocabulary(train, size, builder=builder)
                vocabularies[size] = vocabulary
            store = build_store(
                train, template_config, vocabulary=vocabulary, builder=builder
            )
            stores[template_config] = store
        replay_key = (template_config, config.suppression)
        result = replays.get(replay_key)
        if result is None:
            result = replay_nfr(
                eval_records, store, config.suppression, seed=seed, builder=builder
            )
            replays[replay_key] = result
        rows.append(
            TuningRow(
                config=config,
                ratio=result.ratio,
                retained_total=result.retained_total,
                retained_with_feedback=result.retained_with_feedback,
            )
        )

    def sort_key(indexed: tuple[int, TuningRow]):
        index, row = indexed
        ratio = row.ratio if row.ratio is not None else math.inf
        return (ratio, -row.retained_with_feedback, index)

    best_index = min(enumerate(rows), key=sort_key)[0]
    return TuningReport(rows=tuple(rows), best_index=best_index)


def expected_suppression_counts(
    records: Sequence[MutantRecord],
    store: TemplateStore,
    policy: SuppressionPolicy,
    profiles: ProfileRegistry | None = None,
    builder: TemplateBuilder | None = None,
) -> dict[PerceivedFeedback, float]:
    """Expected number of suppressed mutants per feedback label."""
    if builder is None:
        builder = TemplateBuilder(profiles)
    out = {label: 0.0 for label in PerceivedFeedback}
    for record in records:
        key = builder.build(record, store.config, store.vocabulary)
        sp = suppress_probability(store.lookup(key), store.global_stats, policy)
        out[perceived_label(record)] += sp
    return out


# --- evaluation statistics ---------------------------------------------------


def kendall_tau_b(
    scores: Sequence[float],
    outcomes: Sequence[int],
) -> float | None:
    """Tau-b between scores and a dichotomous outcome, with tie correction.

    Computed as (nc - nd) / sqrt((n0 - n1) (n0 - n2)) where n1 and n2 count
    tied pairs within scores and outcomes. Returns None when either factor
    under the root is zero (e.g. constant outcomes).
    """
    n = len(scores)
    if n != len(outcomes):
        raise ValueError("scores and outcomes differ in length")
    if n < 2:
        raise ValueError("need at least two observations")
    normalized: list[int] = []
    for value in outcomes:
        if value in (0, False):
            normalized.append(0)
        elif value in (1, True):
            normalized.append(1)
        else:
            raise ValueError("outcomes must be binary")
    zeros = sorted(s for s, o in zip(scores, normalized) if o == 0)
    ones = [s for s, o in zip(scores, normalized) if o == 1]
    concordant = 0
    discordant = 0
    for s in ones:
        concordant += bisect_left(zeros, s)
        discordant += len(zeros) - bisect_right(zeros, s)
    n0 = n * (n - 1) // 2
    n1 = sum(c * (c - 1) // 2 for c in Counter(scores).values())
    c0, c1 = len(zeros), len(ones)
    n2 = c0 * (c0 - 1) // 2 + c1 * (c1 - 1) // 2
    if n0 - n1 == 0 or n0 - n2 == 0:
        return None
    return (concordant - discordant) / math.sqrt((n0 - n1) * (n0 - n2))


def chi_square_2x2(
    table: Sequence[Sequence[float]],
) -> tuple[float, float]:
    """Pearson chi-square test of independence on a 2x2 table.

    No continuity correction. Returns (statistic, p_value) with one degree
    of freedom; the p-value comes from the exact relation
    p = erfc(sqrt(x/2)).
    """
    if len(table) != 2 or any(len(row) != 2 for row in table):
        raise ValueError("expected a 2x2 table")
    (a, b), (c, d) = table
    if min(a, b, c, d) < 0:
        raise ValueError("cell counts must be non-negative")
    n = a + b + c + d
    row1, row2 = a + b, c + d
    col1, col2 = a + c, b + d
    if min(row1, row2, col1, col2) == 0:
        raise ValueError("zero marginal total")
    statistic = n * (a * d - b * c) ** 2 / (row1 * row2 * col1 * col2)
    p_value = math.erfc(math.sqrt(statistic / 2.0))
    return statistic, p_value
