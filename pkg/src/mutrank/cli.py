"""Command-line interface.

Subcommands cover the whole pipeline: ``build-store`` (template
generation), ``rank`` (scores plus suppression decisions), ``surface``
(per-file/per-changelist caps), ``tune`` (hyperparameter grid replay),
``report`` (controversy and consistently-negative templates), and
``mutate`` (the toy mutant generator).

Exit codes: 0 success, 1 usage error, 2 data validation failure,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import random
import sys
from fractions import Fraction
from pathlib import Path

from .diffs import (
    DiffParseError,
    MutantRecord,
    RecordFormatError,
    load_mutant_records,
    parse_record_line,
    serialize_record,
)
from .langs import ProfileConfigError, ProfileRegistry, builtin_registry, load_profile
from .mutagen import MutationOperator, generate_mutants
from .pipeline import (
    RunConfig,
    SurfacingCaps,
    build_store,
    full_grid,
    rank_and_decide,
    surface,
    tune,
)
from .scoring import FeedbackScore, KillScore, RankingConfig, controversy, usefulness_score
from .store import StoreFormatError, TemplateStore, load as load_store, save as save_store
from .suppression import SuppressionPolicy
from .templates import Abstraction, TemplateBuilder, TemplateConfig

USAGE_ERROR = 1
DATA_ERROR = 2
INTERNAL_ERROR = 3

_DATA_ERRORS = (
    StoreFormatError,
    RecordFormatError,
    DiffParseError,
    ProfileConfigError,
    FileNotFoundError,
    KeyError,
    ValueError,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 on usage problems, not argparse's 2
        raise _UsageError(message)


def _registry(profile_dir: str | None) -> ProfileRegistry:
    registry = builtin_registry()
    if profile_dir:
        for path in sorted(Path(profile_dir).glob("*.profile")):
            registry.register(load_profile(path), replace=True)
    return registry


def _read_records(path: str, registry: ProfileRegistry) -> list[MutantRecord]:
    with open(path, "r", encoding="utf-8") as handle:
        records, diagnostics = load_mutant_records(handle, registry.languages())
    for message in diagnostics:
        print(f"{path}: {message}", file=sys.stderr)
    return records


def _out_stream(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_ranking(text: str) -> RankingConfig:
    feedback, sep, kill = text.partition("+")
    if not sep:
        raise ValueError(f"ranking must look like 'bayes+kill-counter', got {text!r}")
    return RankingConfig(
        feedback_score=FeedbackScore.parse(feedback),
        kill_score=KillScore.parse(kill),
    )


def _template_config(args: argparse.Namespace) -> TemplateConfig:
    return TemplateConfig(
        abstraction=Abstraction.parse(args.template),
        context_size=args.context,
        vocabulary_size=args.vocab,
    )


# --- subcommand implementations ----------------------------------------------


def _cmd_build_store(args: argparse.Namespace) -> int:
    registry = _registry(args.profiles)
    records = _read_records(args.records, registry)
    if not records:
        print("no valid records to build from", file=sys.stderr)
        return DATA_ERROR
    store = build_store(
        records, _template_config(args), profiles=registry, built_at=args.built_at
    )
    save_store(store, args.out)
    print(
        f"built store with {len(store)} templates from {len(records)} records -> {args.out}",
        file=sys.stderr,
    )
    return 0


_RANKED_FIELDS = (
    "mutant_id",
    "changelist_id",
    "filename",
    "rank",
    "feedback_score",
    "kill_score",
    "suppressed",
    "reason",
    "z",
    "p",
    "suppress_probability",
)


def _ranked_line(item) -> str:
    decision = item.decision
    values = {
        "mutant_id": item.mutant_id,
        "changelist_id": item.changelist_id,
        "filename": item.filename,
        "rank": item.rank,
        "feedback_score": item.feedback_score,
        "kill_score": ",".join(repr(v) for v in item.kill_vector),
        "suppressed": decision.suppressed,
        "reason": decision.reason.value,
        "z": decision.z,
        "p": decision.p,
        "suppress_probability": decision.suppress_probability,
    }
    return "\t".join(f"{key}={_fmt(values[key])}" for key in _RANKED_FIELDS)


def _cmd_rank(args: argparse.Namespace) -> int:
    registry = _registry(args.profiles)
    store = load_store(args.store)
    records = _read_records(args.records, registry)
    ranked = rank_and_decide(
        records,
        store,
        ranking=_parse_ranking(args.ranking),
        policy=SuppressionPolicy.parse(args.suppression),
        seed=args.seed,
        profiles=registry,
    )
    stream, close = _out_stream(args.out)
    try:
        for item in ranked:
            stream.write(_ranked_line(item) + "\n")
    finally:
        if close:
            stream.close()
    return 0


class _SurfaceRow:
    __slots__ = ("line", "suppressed", "changelist_id", "filename")

    def __init__(self, line: str):
        fields = dict(chunk.partition("=")[::2] for chunk in line.split("\t"))
        for required in ("suppressed", "changelist_id", "filename"):
            if required not in fields:
                raise RecordFormatError(f"ranked line missing {required!r}")
        self.line = line
        self.suppressed = fields["suppressed"] == "1"
        self.changelist_id = fields["changelist_id"]
        self.filename = fields["filename"]


def _cmd_surface(args: argparse.Namespace) -> int:
    caps = SurfacingCaps(per_file=args.per_file, per_changelist=args.per_changelist)
    rows = []
    with open(args.ranked, "r", encoding="utf-8") as handle:
        for raw in handle:
            line = raw.rstrip("\n")
            if line:
                rows.append(_SurfaceRow(line))
    admitted = surface(rows, caps)
    stream, close = _out_stream(args.out)
    try:
        for row in admitted:
            stream.write(row.line + "\n")
    finally:
        if close:
            stream.close()
    return 0


_GRID_KEYS = ("template", "vocabulary_size", "context_size", "feedback_score", "kill_score", "suppression")


def _parse_grid_file(path: str) -> list[RunConfig]:
    grid: list[RunConfig] = []
    for lineno, raw in enumerate(open(path, "r", encoding="utf-8"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = dict(chunk.partition("=")[::2] for chunk in line.split())
        missing = [key for key in _GRID_KEYS if key not in fields]
        if missing:
            raise ValueError(f"{path}:{lineno}: grid row missing {missing}")
        grid.append(
            RunConfig(
                template=TemplateConfig(
                    abstraction=Abstraction.parse(fields["template"]),
                    context_size=int(fields["context_size"]),
                    vocabulary_size=int(fields["vocabulary_size"]),
                ),
                ranking=RankingConfig(
                    feedback_score=FeedbackScore.parse(fields["feedback_score"]),
                    kill_score=KillScore.parse(fields["kill_score"]),
                ),
                suppression=SuppressionPolicy.parse(fields["suppression"]),
            )
        )
    return grid


def _tuning_row_line(row, is_best: bool) -> str:
    config = row.config
    pairs = [
        ("template", config.template.abstraction.value),
        ("vocabulary_size", config.template.vocabulary_size),
        ("context_size", config.template.context_size),
        ("feedback_score", config.ranking.feedback_score.value),
        ("kill_score", config.ranking.kill_score.value),
        ("suppression", config.suppression.value),
        ("nfr", float(row.ratio) if row.ratio is not None else None),
        ("nfr_exact", row.ratio if isinstance(row.ratio, Fraction) else None),
        ("retained_total", _as_number(row.retained_total)),
        ("retained_with_feedback", _as_number(row.retained_with_feedback)),
        ("best", is_best),
    ]
    return "\t".join(f"{key}={_fmt(value)}" for key, value in pairs)


def _as_number(value):
    if isinstance(value, Fraction) and value.denominator == 1:
        return value.numerator
    if isinstance(value, Fraction):
        return float(value)
    return value


def _cmd_tune(args: argparse.Namespace) -> int:
    registry = _registry(args.profiles)
    train = _read_records(args.train, registry)
    eval_records = _read_records(args.eval, registry)
    grid = full_grid() if args.grid == "full" else _parse_grid_file(args.grid)
    report = tune(train, eval_records, grid, seed=args.seed, profiles=registry)
    stream, close = _out_stream(args.out)
    try:
        for index, row in enumerate(report.rows):
            stream.write(_tuning_row_line(row, index == report.best_index) + "\n")
    finally:
        if close:
            stream.close()
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    store = load_store(args.store)
    stream, close = _out_stream(args.out)
    try:
        if args.top_controversial is not None:
            _report_controversial(store, args.top_controversial, stream)
        else:
            registry = _registry(args.profiles)
            records = _read_records(args.records, registry)
            _report_negative_templates(store, records, args.min_monthly, registry, stream)
    finally:
        if close:
            stream.close()
    return 0


def _report_controversial(store: TemplateStore, top: int, stream) -> None:
    scored = [
        (controversy(stats), key, stats)
        for key, stats in store.entries.items()
    ]
    scored.sort(key=lambda item: (-item[0], item[1].language_id, item[1].template_text))
    for score, key, stats in scored[:top]:
        stream.write(
            f"language={key.language_id}\tcontroversy={_fmt(score)}"
            f"\tpu={stats.pu}\tpnu={stats.pnu}"
            f"\ttemplate={_escaped(key.template_text)}\n"
        )


def _report_negative_templates(
    store: TemplateStore,
    records: list[MutantRecord],
    min_monthly: float,
    registry: ProfileRegistry,
    stream,
) -> None:
    """Templates with purely negative feedback and sustained volume.

    Volume is counted from record timestamps (YYYY-MM buckets); records
    without timestamps are skipped with a note on stderr.
    """
    builder = TemplateBuilder(registry)
    monthly: dict = {}
    skipped = 0
    for record in records:
        if not record.timestamp or len(record.timestamp) < 7:
            skipped += 1
            continue
        key = builder.build(record, store.config, store.vocabulary)
        month = record.timestamp[:7]
        bucket = monthly.setdefault(key, {})
        bucket[month] = bucket.get(month, 0) + 1
    if skipped:
        print(f"skipped {skipped} records without timestamps", file=sys.stderr)
    rows = []
    for key, buckets in monthly.items():
        stats = store.lookup(key)
        if stats is None:
            continue
        us = usefulness_score(stats)
        if us is None or us > 0.0:
            continue
        total = sum(buckets.values())
        average = total / len(buckets)
        if average < min_monthly:
            continue
        rows.append((key, stats, len(buckets), average, total))
    rows.sort(key=lambda r: (-r[3], r[0].language_id, r[0].template_text))
    for key, stats, months, average, total in rows:
        stream.write(
            f"language={key.language_id}\tavg_monthly={_fmt(average)}\tmonths={months}"
            f"\tmutants={total}\tpnu={stats.pnu}\tmf={stats.mf}"
            f"\ttemplate={_escaped(key.template_text)}\n"
        )


def _escaped(text: str) -> str:
    from .diffs import escape_value

    return escape_value(text)


def _parse_changed_lines(spec: str) -> set[int]:
    """1-based line spec like '3,5-7' into zero-based indices."""
    out: set[int] = set()
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, _, hi = part.partition("-")
            out.update(range(int(lo) - 1, int(hi)))
        else:
            out.add(int(part) - 1)
    if not out:
        raise ValueError("empty changed-lines spec")
    return out


def _cmd_mutate(args: argparse.Namespace) -> int:
    registry = _registry(args.profiles)
    profile = registry.get(args.language)
    source = Path(args.source).read_text(encoding="utf-8").split("\n")
    if source and source[-1] == "":
        source.pop()
    operators = tuple(MutationOperator)
    if args.operators:
        operators = tuple(MutationOperator[name.strip().upper()] for name in args.operators.split(","))
    records = generate_mutants(
        source,
        _parse_changed_lines(args.changed_lines),
        profile,
        random.Random(args.seed),
        operators=operators,
        filename=args.filename or args.source,
        changelist_id=args.changelist,
    )
    stream, close = _out_stream(args.out)
    try:
        for record in records:
            stream.write(serialize_record(record) + "\n")
    finally:
        if close:
            stream.close()
    return 0


# --- parser wiring -------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="mutrank", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_profiles(p):
        p.add_argument("--profiles", help="directory of extra *.profile files")

    p = sub.add_parser("build-store", help="aggregate records into a template store")
    p.add_argument("--records", required=True)
    p.add_argument("--template", default="indexed", choices=["original", "typed", "indexed"])
    p.add_argument("--context", type=int, default=0)
    p.add_argument("--vocab", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--built-at", dest="built_at", default=None)
    add_profiles(p)
    p.set_defaults(func=_cmd_build_store)

    p = sub.add_parser("rank", help="rank records and attach suppression decisions")
    p.add_argument("--records", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--ranking", default="bayes+kill-counter")
    p.add_argument(
        "--suppression", default="probabilistic", choices=["none", "average", "probabilistic"]
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    add_profiles(p)
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("surface", help="apply per-file/per-changelist caps to ranked output")
    p.add_argument("--ranked", required=True)
    p.add_argument("--per-file", dest="per_file", type=int, default=3)
    p.add_argument("--per-changelist", dest="per_changelist", type=int, default=10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_surface)

    p = sub.add_parser("tune", help="replay the hyperparameter grid on held-out records")
    p.add_argument("--train", required=True)
    p.add_argument("--eval", required=True)
    p.add_argument("--grid", default="full", help="'full' or a grid file path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    add_profiles(p)
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("report", help="controversy and negative-template reports")
    p.add_argument("--store", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--top-controversial", dest="top_controversial", type=int, default=None)
    group.add_argument("--negative-templates", action="store_true")
    p.add_argument("--records", help="records with timestamps (negative-templates mode)")
    p.add_argument("--min-monthly", dest="min_monthly", type=float, default=50.0)
    p.add_argument("--out", default=None)
    add_profiles(p)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("mutate", help="generate toy mutants from a source file")
    p.add_argument("--source", required=True)
    p.add_argument("--changed-lines", dest="changed_lines", required=True)
    p.add_argument("--language", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--operators", default=None, help="comma list, e.g. SBR,ROR")
    p.add_argument("--filename", default=None)
    p.add_argument("--changelist", default="cl-0")
    p.add_argument("--out", default=None)
    add_profiles(p)
    p.set_defaults(func=_cmd_mutate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    try:
        if args.command == "report" and args.negative_templates and not args.records:
            print("--negative-templates requires --records", file=sys.stderr)
            return USAGE_ERROR
        return args.func(args)
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except Exception as exc:  # invariant violations and bugs
        print(f"internal error: {exc!r}", file=sys.stderr)
        return INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
