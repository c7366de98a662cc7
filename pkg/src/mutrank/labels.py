"""Feedback and kill labels, and their per-template aggregation."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .templates import TemplateKey


class PerceivedFeedback(Enum):
    PERCEIVED_USEFUL = "pu"
    PERCEIVED_NOT_USEFUL = "pnu"
    MIXED_FEEDBACK = "mf"
    NO_FEEDBACK = "nf"


class KilledStatus(Enum):
    ALWAYS_KILLED = "ak"
    NEVER_KILLED = "nk"
    EVENTUALLY_KILLED = "ek"
    MIXED_KILLED = "mk"


def derive_perceived_feedback(
    pos: Sequence[bool], neg: Sequence[bool]
) -> PerceivedFeedback:
    """Collapse per-snapshot thumbs up/down lists into one label."""
    if len(pos) != len(neg):
        raise ValueError("pos/neg snapshot lists differ in length")
    if not pos:
        raise ValueError("snapshot lists must be non-empty")
    any_pos = any(pos)
    any_neg = any(neg)
    if any_pos and not any_neg:
        return PerceivedFeedback.PERCEIVED_USEFUL
    if any_neg and not any_pos:
        return PerceivedFeedback.PERCEIVED_NOT_USEFUL
    if any_pos and any_neg:
        return PerceivedFeedback.MIXED_FEEDBACK
    return PerceivedFeedback.NO_FEEDBACK


def derive_killed_status(killed: Sequence[bool]) -> KilledStatus:
    """Classify the per-snapshot kill history.

    EVENTUALLY_KILLED means at least one leading False followed only by
    True: the mutant survived for a while and then was consistently killed.
    """
    if not killed:
        raise ValueError("killed list must be non-empty")
    if all(killed):
        return KilledStatus.ALWAYS_KILLED
    if not any(killed):
        return KilledStatus.NEVER_KILLED
    first_true = killed.index(True)
    if first_true > 0 and all(killed[first_true:]):
        return KilledStatus.EVENTUALLY_KILLED
    return KilledStatus.MIXED_KILLED


@dataclass(slots=True)
class TemplateStats:
    """The eight label counters plus generated and killed totals."""

    pu: int = 0
    pnu: int = 0
    mf: int = 0
    nf: int = 0
    ak: int = 0
    nk: int = 0
    ek: int = 0
    mk: int = 0
    g: int = 0
    k: int = 0

    def add(self, feedback: PerceivedFeedback, killed: KilledStatus) -> None:
        if feedback is PerceivedFeedback.PERCEIVED_USEFUL:
            self.pu += 1
        elif feedback is PerceivedFeedback.PERCEIVED_NOT_USEFUL:
            self.pnu += 1
        elif feedback is PerceivedFeedback.MIXED_FEEDBACK:
            self.mf += 1
        else:
            self.nf += 1
        if killed is KilledStatus.ALWAYS_KILLED:
            self.ak += 1
        elif killed is KilledStatus.NEVER_KILLED:
            self.nk += 1
        elif killed is KilledStatus.EVENTUALLY_KILLED:
            self.ek += 1
        else:
            self.mk += 1
        self.g += 1
        # killed at least once <=> any status except NEVER_KILLED
        if killed is not KilledStatus.NEVER_KILLED:
            self.k += 1

    @property
    def feedback_total(self) -> int:
        return self.pu + self.pnu

    def validate(self) -> None:
        counters = (self.pu, self.pnu, self.mf, self.nf, self.ak, self.nk, self.ek, self.mk, self.g, self.k)
        if any(c < 0 for c in counters):
            raise ValueError("negative counter")
        if self.pu + self.pnu + self.mf + self.nf != self.g:
            raise ValueError("feedback counters do not sum to g")
        if self.ak + self.nk + self.ek + self.mk != self.g:
            raise ValueError("kill counters do not sum to g")
        if self.k > self.g:
            raise ValueError("k exceeds g")

    def copy(self) -> "TemplateStats":
        return TemplateStats(
            self.pu, self.pnu, self.mf, self.nf,
            self.ak, self.nk, self.ek, self.mk, self.g, self.k,
        )


def merge_stats(a: TemplateStats, b: TemplateStats) -> TemplateStats:
    """Component-wise sum; commutative, associative, zero-stats identity."""
    return TemplateStats(
        a.pu + b.pu, a.pnu + b.pnu, a.mf + b.mf, a.nf + b.nf,
        a.ak + b.ak, a.nk + b.nk, a.ek + b.ek, a.mk + b.mk,
        a.g + b.g, a.k + b.k,
    )


def aggregate(
    labeled: Iterable[tuple[TemplateKey, PerceivedFeedback, KilledStatus]],
) -> dict[TemplateKey, TemplateStats]:
    """Count label occurrences per template key."""
    out: dict[TemplateKey, TemplateStats] = {}
    for key, feedback, killed in labeled:
        stats = out.get(key)
        if stats is None:
            stats = TemplateStats()
            out[key] = stats
        stats.add(feedback, killed)
    return out
