"""Rank and suppress code-review mutants from historical developer feedback.

Mutant diffs are abstracted into identifier templates; feedback and kill
outcomes aggregate per template; the aggregates rank new mutants, suppress
reliably not-useful ones, and cap what surfaces during review.
"""

from .diffs import (
    ChangedWindow,
    DiffHunk,
    DiffParseError,
    MutantRecord,
    RecordFormatError,
    dump_mutant_records,
    extract_window,
    load_mutant_records,
    parse_record_line,
    parse_unified_diff,
    serialize_record,
    validate_record,
)
from .labels import (
    KilledStatus,
    PerceivedFeedback,
    TemplateStats,
    aggregate,
    derive_killed_status,
    derive_perceived_feedback,
    merge_stats,
)
from .langs import (
    DEFAULT_PROFILES,
    Language,
    LanguageProfile,
    ProfileConfigError,
    ProfileRegistry,
    Token,
    TokenKind,
    builtin_registry,
    load_profile,
    parse_profile_config,
    strip_comments,
    tokenize,
)
from .mutagen import MutationOperator, generate_mutants
from .pipeline import (
    RankedMutant,
    ReplayResult,
    RunConfig,
    SurfacingCaps,
    TuningReport,
    TuningRow,
    build_store,
    chi_square_2x2,
    expected_suppression_counts,
    full_grid,
    kendall_tau_b,
    negative_feedback_ratio,
    rank_and_decide,
    replay_nfr,
    surface,
    tune,
)
from .scoring import (
    FeedbackScore,
    GlobalStats,
    KillScore,
    RankingConfig,
    ScoreBreakdown,
    bayes_usefulness_score,
    compute_global_stats,
    controversy,
    kill_counter_score,
    kill_ratio_score,
    rank,
    score_breakdown,
    usefulness_score,
)
from .store import StoreFormatError, TemplateStore, load, merge_stores, new_store, save
from .suppression import (
    DecisionReason,
    SeededDraws,
    SuppressionDecision,
    SuppressionPolicy,
    decide,
    standard_normal_cdf,
    suppress_probability,
)
from .templates import (
    Abstraction,
    TemplateBuilder,
    TemplateConfig,
    TemplateKey,
    Vocabulary,
    build_template,
    build_vocabulary,
)

__version__ = "0.1.0"


def __getattr__(name: str):
    # MutantRanker pulls in sklearn; keep that import out of CLI startup.
    if name == "MutantRanker":
        from .estimator import MutantRanker

        return MutantRanker
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
