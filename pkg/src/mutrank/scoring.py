"""Feedback scores, kill scores, controversy, and the combined ranking.

The developer-feedback score orders templates; the kill score only breaks
ties. Templates never seen in the store rank at the corpus average with a
neutral kill score, so new mutant shapes neither jump the queue nor sink.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .labels import TemplateStats
from .templates import TemplateKey


class FeedbackScore(Enum):
    USEFULNESS = "usefulness"
    BAYES_USEFULNESS = "bayes"

    @classmethod
    def parse(cls, name: str) -> "FeedbackScore":
        aliases = {"usefulness": cls.USEFULNESS, "bayes": cls.BAYES_USEFULNESS}
        try:
            return aliases[name.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown feedback score {name!r}") from None


class KillScore(Enum):
    KILL_RATIO = "kill_ratio"
    KILL_COUNTER = "kill_counter"

    @classmethod
    def parse(cls, name: str) -> "KillScore":
        aliases = {
            "kill_ratio": cls.KILL_RATIO,
            "kill-ratio": cls.KILL_RATIO,
            "kill_counter": cls.KILL_COUNTER,
            "kill-counter": cls.KILL_COUNTER,
        }
        try:
            return aliases[name.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown kill score {name!r}") from None


@dataclass(frozen=True, slots=True)
class RankingConfig:
    feedback_score: FeedbackScore = FeedbackScore.BAYES_USEFULNESS
    kill_score: KillScore = KillScore.KILL_COUNTER
    # Whether a higher always-killed fraction wins ties ("high_first") or
    # loses them ("low_first"). Kept configurable because the evidence for
    # either polarity is indirect.
    kill_counter_polarity: str = "high_first"

    def __post_init__(self) -> None:
        if self.kill_counter_polarity not in ("high_first", "low_first"):
            raise ValueError(f"bad kill_counter_polarity {self.kill_counter_polarity!r}")

    def describe(self) -> str:
        return f"feedback_score={self.feedback_score.value} kill_score={self.kill_score.value}"


@dataclass(frozen=True, slots=True)
class GlobalStats:
    """Corpus-level constants over feedback-bearing templates.

    ``m`` is the mean feedback volume (pu+pnu) and ``avg_us``/``std_us`` the
    population mean/std of usefulness scores, all over templates with at
    least one piece of feedback. A store with no feedback at all yields the
    degenerate neutral prior (m=0, avg 0.5, std 0).
    """

    m: float
    avg_us: float
    std_us: float
    template_count: int

    @property
    def degenerate(self) -> bool:
        return self.template_count == 0


DEGENERATE_GLOBAL_STATS = GlobalStats(m=0.0, avg_us=0.5, std_us=0.0, template_count=0)


def usefulness_score(stats: TemplateStats) -> float | None:
    """pu/(pu+pnu); None when the template has no feedback."""
    total = stats.pu + stats.pnu
    if total == 0:
        return None
    return stats.pu / total


def compute_global_stats(all_stats: Iterable[TemplateStats]) -> GlobalStats:
    totals: list[int] = []
    scores: list[float] = []
    for stats in all_stats:
        total = stats.pu + stats.pnu
        if total == 0:
            continue
        totals.append(total)
        scores.append(stats.pu / total)
    if not totals:
        return DEGENERATE_GLOBAL_STATS
    count = len(totals)
    m = sum(totals) / count
    avg = sum(scores) / count
    variance = sum((s - avg) ** 2 for s in scores) / count
    return GlobalStats(m=m, avg_us=avg, std_us=math.sqrt(variance), template_count=count)


def bayes_usefulness_score(stats: TemplateStats, global_stats: GlobalStats) -> float:
    """Shrinkage estimate w*us + (1-w)*avg with w = (pu+pnu)/(pu+pnu+m)."""
    total = stats.pu + stats.pnu
    if total == 0:
        return global_stats.avg_us
    w = total / (total + global_stats.m)
    return w * (stats.pu / total) + (1.0 - w) * global_stats.avg_us


def kill_ratio_score(stats: TemplateStats) -> float:
    if stats.g <= 0:
        raise ValueError("kill ratio undefined for empty template")
    return stats.k / stats.g


def kill_counter_score(stats: TemplateStats) -> tuple[float, float, float, float]:
    """Per-mutant fractions (ak, ek, mk, nk), compared lexicographically."""
    if stats.g <= 0:
        raise ValueError("kill counters undefined for empty template")
    g = stats.g
    return (stats.ak / g, stats.ek / g, stats.mk / g, stats.nk / g)


def controversy(stats: TemplateStats) -> float:
    """us*(1-us)*(pu+pnu): high for heavily and evenly disputed templates."""
    us = usefulness_score(stats)
    if us is None:
        return 0.0
    return us * (1.0 - us) * (stats.pu + stats.pnu)


#: Kill scores assigned to templates absent from the store.
UNSEEN_KILL_RATIO = 0.5
UNSEEN_KILL_TUPLE = (0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True, slots=True)
class ScoreBreakdown:
    us: float | None
    w: float
    bayes_us: float
    kill_ratio: float
    kill_tuple: tuple[float, float, float, float]
    controversy: float
    seen: bool


def score_breakdown(stats: TemplateStats | None, global_stats: GlobalStats) -> ScoreBreakdown:
    if stats is None:
        return ScoreBreakdown(
            us=None,
            w=0.0,
            bayes_us=global_stats.avg_us,
            kill_ratio=UNSEEN_KILL_RATIO,
            kill_tuple=UNSEEN_KILL_TUPLE,
            controversy=0.0,
            seen=False,
        )
    total = stats.pu + stats.pnu
    w = total / (total + global_stats.m) if total + global_stats.m > 0 else 0.0
    return ScoreBreakdown(
        us=usefulness_score(stats),
        w=w,
        bayes_us=bayes_usefulness_score(stats, global_stats),
        kill_ratio=kill_ratio_score(stats),
        kill_tuple=kill_counter_score(stats),
        controversy=controversy(stats),
        seen=True,
    )


@dataclass(frozen=True, slots=True)
class ScoredCandidate:
    mutant_id: str
    key: TemplateKey
    feedback_score: float
    kill_vector: tuple[float, ...]
    breakdown: ScoreBreakdown


def _feedback_value(breakdown: ScoreBreakdown, config: RankingConfig, avg_us: float) -> float:
    if config.feedback_score is FeedbackScore.BAYES_USEFULNESS:
        return breakdown.bayes_us
    # plain usefulness, with the corpus average standing in when undefined
    return breakdown.us if breakdown.us is not None else avg_us


def _kill_vector(breakdown: ScoreBreakdown, config: RankingConfig) -> tuple[float, ...]:
    if config.kill_score is KillScore.KILL_RATIO:
        return (breakdown.kill_ratio,)
    return breakdown.kill_tuple


def rank(
    candidates: Iterable[tuple[str, TemplateKey]],
    entries: Mapping[TemplateKey, TemplateStats],
    global_stats: GlobalStats,
    config: RankingConfig | None = None,
) -> list[ScoredCandidate]:
    """Order candidates by feedback score, breaking ties by kill score.

    Remaining ties order by (template_text, mutant_id) ascending so the
    result is a total deterministic order.
    """
    if config is None:
        config = RankingConfig()
    scored: list[ScoredCandidate] = []
    for mutant_id, key in candidates:
        breakdown = score_breakdown(entries.get(key), global_stats)
        scored.append(
            ScoredCandidate(
                mutant_id=mutant_id,
                key=key,
                feedback_score=_feedback_value(breakdown, config, global_stats.avg_us),
                kill_vector=_kill_vector(breakdown, config),
                breakdown=breakdown,
            )
        )
    flip = -1.0 if config.kill_counter_polarity == "high_first" else 1.0

    def sort_key(c: ScoredCandidate):
        return (
            -c.feedback_score,
            tuple(flip * v for v in c.kill_vector),
            c.key.template_text,
            c.mutant_id,
        )

    scored.sort(key=sort_key)
    return scored
