"""Line-level unified diffs and mutant records.

Diffs arrive precomputed (one per mutant) and are parsed into hunks:
runs of removed/added lines with the surrounding context lines attached.
Mutant records travel as line-delimited ``key=value`` text, one record per
line, which keeps multi-million-record corpora streamable and diffable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, TextIO


class DiffParseError(ValueError):
    """A diff line does not carry a recognized prefix."""


class RecordFormatError(ValueError):
    """A serialized mutant record is malformed."""


@dataclass(frozen=True, slots=True)
class DiffHunk:
    context_before: tuple[str, ...]
    removed: tuple[str, ...]
    added: tuple[str, ...]
    context_after: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.removed and not self.added:
            raise ValueError("hunk must remove or add at least one line")


@dataclass(frozen=True, slots=True)
class ChangedWindow:
    hunks: tuple[DiffHunk, ...]
    context_size: int


@dataclass(frozen=True, slots=True)
class MutantRecord:
    mutant_id: str
    changelist_id: str
    filename: str
    language: str
    diff_text: str
    pos_feed_list: tuple[bool, ...]
    neg_feed_list: tuple[bool, ...]
    killed_list: tuple[bool, ...]
    operator: str | None = None
    timestamp: str | None = None


def validate_record(record: MutantRecord) -> None:
    """Raise ValueError when a record violates its invariants."""
    if not record.mutant_id:
        raise ValueError("mutant_id must be non-empty")
    lists = (record.pos_feed_list, record.neg_feed_list, record.killed_list)
    lengths = {len(x) for x in lists}
    if len(lengths) != 1:
        raise ValueError("snapshot length mismatch")
    if lengths == {0}:
        raise ValueError("snapshot lists must be non-empty")
    if not has_changed_line(record.diff_text):
        raise ValueError("diff contains no changed line")


def has_changed_line(diff_text: str) -> bool:
    for line in diff_text.split("\n"):
        if _is_header(line):
            continue
        if line.startswith("-") or line.startswith("+"):
            return True
    return False


def _is_header(line: str) -> bool:
    return line.startswith("---") or line.startswith("+++") or line.startswith("@@")


def parse_unified_diff(diff_text: str) -> list[DiffHunk]:
    """Parse prefixed diff lines into hunks.

    Hunk boundaries fall at runs of context between change runs; each hunk
    keeps the full context run on either side, so adjacent hunks share the
    run that separates them. Header lines (``---``, ``+++``, ``@@``) are
    skipped. A completely empty line counts as empty context.
    """
    # runs: alternating ("ctx", lines) / ("chg", removed, added)
    runs: list[tuple] = []
    for lineno, line in enumerate(diff_text.split("\n"), start=1):
        if _is_header(line):
            continue
        if line == "":
            kind, text = " ", ""
        else:
            kind, text = line[0], line[1:]
        if kind == " ":
            if runs and runs[-1][0] == "ctx":
                runs[-1][1].append(text)
            else:
                runs.append(("ctx", [text]))
        elif kind in ("-", "+"):
            if not runs or runs[-1][0] != "chg":
                runs.append(("chg", [], []))
            runs[-1][1 if kind == "-" else 2].append(text)
        else:
            raise DiffParseError(f"line {lineno}: unknown diff prefix {kind!r}")
    hunks: list[DiffHunk] = []
    for i, run in enumerate(runs):
        if run[0] != "chg":
            continue
        before = tuple(runs[i - 1][1]) if i > 0 and runs[i - 1][0] == "ctx" else ()
        after = tuple(runs[i + 1][1]) if i + 1 < len(runs) and runs[i + 1][0] == "ctx" else ()
        hunks.append(DiffHunk(before, tuple(run[1]), tuple(run[2]), after))
    return hunks


def extract_window(hunks: Iterable[DiffHunk], context_size: int) -> ChangedWindow:
    """Trim each hunk to at most ``context_size`` context lines per side."""
    if context_size < 0:
        raise ValueError("context_size must be >= 0")
    trimmed = []
    for hunk in hunks:
        before = hunk.context_before[len(hunk.context_before) - context_size :] if context_size else ()
        after = hunk.context_after[:context_size]
        trimmed.append(replace(hunk, context_before=before, context_after=after))
    return ChangedWindow(tuple(trimmed), context_size)


def render_diff(hunks: Iterable[DiffHunk]) -> str:
    """Prefix-restored text of the given hunks, joined hunk after hunk."""
    lines: list[str] = []
    for hunk in hunks:
        lines.extend(" " + text for text in hunk.context_before)
        lines.extend("-" + text for text in hunk.removed)
        lines.extend("+" + text for text in hunk.added)
        lines.extend(" " + text for text in hunk.context_after)
    return "\n".join(lines)


# --- record serialization ----------------------------------------------------

_REQUIRED_KEYS = (
    "mutant_id",
    "changelist_id",
    "filename",
    "language",
    "diff",
    "pos_feed",
    "neg_feed",
    "killed",
)

_ESCAPES = {"\\": "\\\\", "\n": "\\n", "\t": "\\t"}
_UNESCAPES = {"\\": "\\", "n": "\n", "t": "\t"}


def escape_value(value: str) -> str:
    if "\\" not in value and "\n" not in value and "\t" not in value:
        return value
    return "".join(_ESCAPES.get(ch, ch) for ch in value)


def unescape_value(value: str) -> str:
    if "\\" not in value:
        return value
    out: list[str] = []
    i = 0
    end = len(value)
    while i < end:
        ch = value[i]
        if ch == "\\" and i + 1 < end and value[i + 1] in _UNESCAPES:
            out.append(_UNESCAPES[value[i + 1]])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _bools_to_bits(values: tuple[bool, ...]) -> str:
    return "".join("1" if v else "0" for v in values)


def _bits_to_bools(bits: str, key: str) -> tuple[bool, ...]:
    if not bits or any(ch not in "01" for ch in bits):
        raise RecordFormatError(f"{key} must be a non-empty string of 0/1")
    return tuple(ch == "1" for ch in bits)


def serialize_record(record: MutantRecord) -> str:
    """One-line tab-separated ``key=value`` form; the record wire contract."""
    pairs = [
        ("mutant_id", record.mutant_id),
        ("changelist_id", record.changelist_id),
        ("filename", record.filename),
        ("language", record.language),
        ("diff", record.diff_text),
        ("pos_feed", _bools_to_bits(record.pos_feed_list)),
        ("neg_feed", _bools_to_bits(record.neg_feed_list)),
        ("killed", _bools_to_bits(record.killed_list)),
    ]
    if record.operator is not None:
        pairs.append(("operator", record.operator))
    if record.timestamp is not None:
        pairs.append(("timestamp", record.timestamp))
    return "\t".join(f"{key}={escape_value(value)}" for key, value in pairs)


def parse_record_line(line: str) -> MutantRecord:
    fields: dict[str, str] = {}
    for chunk in line.split("\t"):
        key, sep, value = chunk.partition("=")
        if not sep:
            raise RecordFormatError(f"malformed field (no '='): {chunk!r}")
        if key in fields:
            raise RecordFormatError(f"duplicate key {key!r}")
        fields[key] = unescape_value(value)
    missing = [key for key in _REQUIRED_KEYS if key not in fields]
    if missing:
        raise RecordFormatError(f"missing keys: {', '.join(missing)}")
    record = MutantRecord(
        mutant_id=fields["mutant_id"],
        changelist_id=fields["changelist_id"],
        filename=fields["filename"],
        language=fields["language"],
        diff_text=fields["diff"],
        pos_feed_list=_bits_to_bools(fields["pos_feed"], "pos_feed"),
        neg_feed_list=_bits_to_bools(fields["neg_feed"], "neg_feed"),
        killed_list=_bits_to_bools(fields["killed"], "killed"),
        operator=fields.get("operator"),
        timestamp=fields.get("timestamp"),
    )
    return record


def load_mutant_records(
    stream: Iterable[str] | TextIO,
    known_languages: Iterable[str] | None = None,
) -> tuple[list[MutantRecord], list[str]]:
    """Read records from line-delimited text, skipping invalid ones.

    Returns (records, diagnostics); every rejected line yields one diagnostic
    naming the line number and problem, and never aborts the stream. Blank
    lines and ``#`` comment lines are ignored.
    """
    languages = set(known_languages) if known_languages is not None else None
    records: list[MutantRecord] = []
    diagnostics: list[str] = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        try:
            record = parse_record_line(line)
            validate_record(record)
            if languages is not None and record.language not in languages:
                raise ValueError(f"unknown language {record.language!r}")
            parse_unified_diff(record.diff_text)
        except (RecordFormatError, DiffParseError, ValueError) as exc:
            diagnostics.append(f"line {lineno}: skipped record: {exc}")
            continue
        records.append(record)
    return records, diagnostics


def dump_mutant_records(records: Iterable[MutantRecord], stream: TextIO) -> None:
    for record in records:
        stream.write(serialize_record(record))
        stream.write("\n")
