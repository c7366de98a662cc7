"""Scikit-learn style estimator facade over the ranking pipeline.

``MutantRanker.fit`` learns per-template feedback history from labeled
mutant records; ``predict`` answers keep-or-suppress for new records, and
``transform`` exposes the full score/decision rows. Parameters follow the
sklearn convention (stored verbatim, introspectable via ``get_params``),
so the estimator composes with ``clone`` and friends.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .diffs import MutantRecord, validate_record
from .langs import ProfileRegistry
from .pipeline import RankedMutant, build_store, rank_and_decide
from .scoring import FeedbackScore, KillScore, RankingConfig
from .suppression import SuppressionPolicy
from .templates import Abstraction, TemplateConfig


def check_records(X: Iterable[MutantRecord]) -> list[MutantRecord]:
    """Validate an iterable of mutant records, returning them as a list."""
    records = list(X)
    for position, record in enumerate(records):
        if not isinstance(record, MutantRecord):
            raise TypeError(f"item {position} is not a MutantRecord: {type(record)!r}")
        try:
            validate_record(record)
        except ValueError as exc:
            raise ValueError(f"record {record.mutant_id or position}: {exc}") from exc
    return records


class MutantRanker(BaseEstimator):
    """Rank and suppress mutants from historical developer feedback.

    Parameters mirror the tuned pipeline defaults: indexed typed templates
    with no context and no vocabulary, Bayes feedback score with
    kill-counter tie-breaks, and probabilistic suppression.

    Examples
    --------
    >>> ranker = MutantRanker().fit(history)          # doctest: +SKIP
    >>> keep = ranker.predict(new_records)            # doctest: +SKIP
    """

    def __init__(
        self,
        abstraction: str = "indexed_typed",
        context_size: int = 0,
        vocabulary_size: int = 0,
        feedback_score: str = "bayes",
        kill_score: str = "kill_counter",
        suppression: str = "probabilistic",
        seed: int = 0,
        profiles: ProfileRegistry | None = None,
    ):
        self.abstraction = abstraction
        self.context_size = context_size
        self.vocabulary_size = vocabulary_size
        self.feedback_score = feedback_score
        self.kill_score = kill_score
        self.suppression = suppression
        self.seed = seed
        self.profiles = profiles

    def _template_config(self) -> TemplateConfig:
        return TemplateConfig(
            abstraction=Abstraction.parse(self.abstraction),
            context_size=self.context_size,
            vocabulary_size=self.vocabulary_size,
        )

    def _ranking_config(self) -> RankingConfig:
        return RankingConfig(
            feedback_score=FeedbackScore.parse(self.feedback_score),
            kill_score=KillScore.parse(self.kill_score),
        )

    def _policy(self) -> SuppressionPolicy:
        return SuppressionPolicy.parse(self.suppression)

    def fit(self, X: Iterable[MutantRecord], y=None) -> "MutantRanker":
        """Build the template store from historical labeled records."""
        records = check_records(X)
        self.store_ = build_store(records, self._template_config(), profiles=self.profiles)
        self.n_records_ = len(records)
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "store_"):
            raise NotFittedError("MutantRanker is not fitted; call fit first")

    def rank(self, X: Iterable[MutantRecord]) -> list[RankedMutant]:
        """Records ranked best-first with suppression decisions attached."""
        self._check_fitted()
        records = check_records(X)
        return rank_and_decide(
            records,
            self.store_,
            ranking=self._ranking_config(),
            policy=self._policy(),
            seed=self.seed,
            profiles=self.profiles,
        )

    def predict(self, X: Iterable[MutantRecord]) -> list[bool]:
        """True per input record when it should surface (not suppressed)."""
        records = check_records(X)
        ranked = self.rank(records)
        keep = {r.mutant_id: not r.suppressed for r in ranked}
        return [keep[record.mutant_id] for record in records]

    def transform(self, X: Iterable[MutantRecord]) -> list[dict]:
        """Score/decision rows in input order, one dict per record."""
        records = check_records(X)
        ranked = self.rank(records)
        by_id = {r.mutant_id: r for r in ranked}
        rows = []
        for record in records:
            item = by_id[record.mutant_id]
            rows.append(
                {
                    "mutant_id": item.mutant_id,
                    "rank": item.rank,
                    "feedback_score": item.feedback_score,
                    "kill_vector": item.kill_vector,
                    "suppressed": item.suppressed,
                    "reason": item.decision.reason.value,
                    "suppress_probability": item.decision.suppress_probability,
                }
            )
        return rows

    def fit_transform(self, X: Iterable[MutantRecord], y=None) -> list[dict]:
        return self.fit(X).transform(X)
