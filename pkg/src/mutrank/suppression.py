"""Suppression policies over per-template feedback history.

Two safety properties hold for every policy: a template absent from the
store is never suppressed (new mutant shapes must keep gathering feedback),
and only the pu/pnu counters may drive suppression. The probabilistic
policy standardizes the usefulness score against the corpus distribution
and suppresses below-average templates with probability 1 - cdf(z).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from enum import Enum

from .labels import TemplateStats
from .scoring import GlobalStats


class SuppressionPolicy(Enum):
    NONE = "none"
    AVERAGE_THRESHOLD = "average"
    PROBABILISTIC = "probabilistic"

    @classmethod
    def parse(cls, name: str) -> "SuppressionPolicy":
        aliases = {
            "none": cls.NONE,
            "average": cls.AVERAGE_THRESHOLD,
            "average_threshold": cls.AVERAGE_THRESHOLD,
            "probabilistic": cls.PROBABILISTIC,
        }
        try:
            return aliases[name.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown suppression policy {name!r}") from None


class DecisionReason(Enum):
    POLICY_NONE = "policy_none"
    UNSEEN_TEMPLATE = "unseen_template"
    NO_FEEDBACK = "no_feedback"
    ABOVE_AVERAGE = "above_average"
    BELOW_THRESHOLD = "below_threshold"
    PROBABILISTIC_DRAW_KEEP = "probabilistic_draw_keep"
    PROBABILISTIC_DRAW_SUPPRESS = "probabilistic_draw_suppress"


@dataclass(frozen=True, slots=True)
class SuppressionDecision:
    suppressed: bool
    reason: DecisionReason
    z: float | None = None
    p: float | None = None
    suppress_probability: float | None = None
    draw: float | None = None


def standard_normal_cdf(z: float) -> float:
    """Phi(z) via the error function; abs error well under 1e-7."""
    if math.isnan(z):
        raise ValueError("z must not be NaN")
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


class SeededDraws:
    """Uniform [0,1) draws keyed by (seed, mutant_id) via a stable hash.

    Keying by mutant id makes replays reproducible and independent of the
    order in which mutants are processed.
    """

    def __init__(self, seed: int = 0):
        self.seed = int(seed)

    def draw(self, mutant_id: str) -> float:
        digest = hashlib.sha256(f"{self.seed}:{mutant_id}".encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") / 2.0**64


@dataclass(frozen=True, slots=True)
class _Assessment:
    suppress_probability: float
    reason: DecisionReason | None  # None means a draw decides
    z: float | None
    p: float | None


def _assess(
    stats: TemplateStats | None,
    global_stats: GlobalStats,
    policy: SuppressionPolicy,
) -> _Assessment:
    if stats is None:
        return _Assessment(0.0, DecisionReason.UNSEEN_TEMPLATE, None, None)
    total = stats.pu + stats.pnu
    if total == 0:
        return _Assessment(0.0, DecisionReason.NO_FEEDBACK, None, None)
    if policy is SuppressionPolicy.NONE:
        return _Assessment(0.0, DecisionReason.POLICY_NONE, None, None)
    us = stats.pu / total
    if us >= global_stats.avg_us:
        return _Assessment(0.0, DecisionReason.ABOVE_AVERAGE, None, None)
    if policy is SuppressionPolicy.AVERAGE_THRESHOLD:
        return _Assessment(1.0, DecisionReason.BELOW_THRESHOLD, None, None)
    # probabilistic: standardize and suppress with probability 1 - cdf(z)
    if global_stats.std_us > 0.0:
        z = (us - global_stats.avg_us) / global_stats.std_us
    else:
        z = -math.inf
    p = standard_normal_cdf(z)
    return _Assessment(1.0 - p, None, z, p)


def suppress_probability(
    stats: TemplateStats | None,
    global_stats: GlobalStats,
    policy: SuppressionPolicy,
) -> float:
    """Probability that ``decide`` suppresses, before any draw is taken."""
    return _assess(stats, global_stats, policy).suppress_probability


def decide(
    stats: TemplateStats | None,
    global_stats: GlobalStats,
    policy: SuppressionPolicy,
    draws: SeededDraws,
    mutant_id: str,
    diagnostics: list[str] | None = None,
) -> SuppressionDecision:
    """Suppress-or-keep decision for one mutant.

    Deterministic given (stats, global_stats, policy, seed, mutant_id);
    nothing beyond pu/pnu and the derived usefulness score reaches any
    policy.
    """
    assessment = _assess(stats, global_stats, policy)
    if assessment.reason is not None:
        return SuppressionDecision(
            suppressed=assessment.reason is DecisionReason.BELOW_THRESHOLD,
            reason=assessment.reason,
            suppress_probability=assessment.suppress_probability,
        )
    if assessment.z == -math.inf and diagnostics is not None:
        diagnostics.append(
            f"{mutant_id}: zero usefulness spread in store; "
            "below-average template suppressed unconditionally"
        )
    value = draws.draw(mutant_id)
    suppressed = value < assessment.suppress_probability
    return SuppressionDecision(
        suppressed=suppressed,
        reason=(
            DecisionReason.PROBABILISTIC_DRAW_SUPPRESS
            if suppressed
            else DecisionReason.PROBABILISTIC_DRAW_KEEP
        ),
        z=assessment.z,
        p=assessment.p,
        suppress_probability=assessment.suppress_probability,
        draw=value,
    )
