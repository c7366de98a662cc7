"""Persistent template store: counters, global stats, and vocabulary.

The on-disk format is line-oriented so stores diff cleanly and merge as
streams: a short header, then one line per template holding the language,
the ten counters, and the escaped template text. The vocabulary is written
next to the store as a plain ordered token list (``<store>.vocab``).

Global stats are stored and recomputed on load over entries in canonical
(language, template text) order; any drift between the two fails the load.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .diffs import escape_value, unescape_value
from .labels import TemplateStats, merge_stats
from .scoring import GlobalStats, compute_global_stats
from .templates import Abstraction, TemplateConfig, TemplateKey, Vocabulary

FORMAT_MAGIC = "mutrank-store"
FORMAT_VERSION = "v1"


class StoreFormatError(ValueError):
    """The store file is malformed, truncated, or inconsistent."""


def default_built_at() -> str:
    """Current UTC time, honoring SOURCE_DATE_EPOCH for reproducible builds."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    stamp = int(epoch) if epoch is not None else int(time.time())
    return datetime.fromtimestamp(stamp, tz=timezone.utc).isoformat()


def canonical_entries(
    entries: dict[TemplateKey, TemplateStats],
) -> list[tuple[TemplateKey, TemplateStats]]:
    return sorted(entries.items(), key=lambda kv: (kv[0].language_id, kv[0].template_text))


def global_stats_of(entries: dict[TemplateKey, TemplateStats]) -> GlobalStats:
    """Global stats over entries in canonical order, so results are stable."""
    return compute_global_stats(stats for _, stats in canonical_entries(entries))


@dataclass(slots=True)
class TemplateStore:
    entries: dict[TemplateKey, TemplateStats]
    global_stats: GlobalStats
    vocabulary: Vocabulary
    config: TemplateConfig
    built_at: str = field(default_factory=default_built_at)

    def lookup(self, key: TemplateKey) -> TemplateStats | None:
        return self.entries.get(key)

    def __len__(self) -> int:
        return len(self.entries)


def new_store(
    entries: dict[TemplateKey, TemplateStats],
    vocabulary: Vocabulary,
    config: TemplateConfig,
    built_at: str | None = None,
) -> TemplateStore:
    return TemplateStore(
        entries=entries,
        global_stats=global_stats_of(entries),
        vocabulary=vocabulary,
        config=config,
        built_at=built_at if built_at is not None else default_built_at(),
    )


def _vocab_path(path: Path) -> Path:
    return path.with_name(path.name + ".vocab")


def save(store: TemplateStore, destination: str | Path) -> None:
    """Write the store file and its sibling vocabulary file."""
    path = Path(destination)
    g = store.global_stats
    lines = [
        f"{FORMAT_MAGIC} {FORMAT_VERSION}",
        f"config {store.config.describe()}",
        f"built_at {store.built_at}",
        (
            f"global m={g.m!r} avg_us={g.avg_us!r} std_us={g.std_us!r}"
            f" template_count={g.template_count}"
        ),
        f"vocabulary file={_vocab_path(path).name} size={store.vocabulary.size}"
        f" kept={len(store.vocabulary.kept_tokens)}",
        f"entries {len(store.entries)}",
    ]
    for key, stats in canonical_entries(store.entries):
        counters = " ".join(
            str(v)
            for v in (
                stats.pu, stats.pnu, stats.mf, stats.nf,
                stats.ak, stats.nk, stats.ek, stats.mk, stats.g, stats.k,
            )
        )
        lines.append(f"{key.language_id}\t{counters}\t{escape_value(key.template_text)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    vocab_lines = "".join(token + "\n" for token in store.vocabulary.kept_tokens)
    _vocab_path(path).write_text(vocab_lines, encoding="utf-8")


def _parse_kv(line: str, prefix: str, keys: tuple[str, ...]) -> dict[str, str]:
    if not line.startswith(prefix + " "):
        raise StoreFormatError(f"expected '{prefix}' header line")
    out: dict[str, str] = {}
    for chunk in line[len(prefix) + 1 :].split(" "):
        key, sep, value = chunk.partition("=")
        if not sep or key not in keys:
            raise StoreFormatError(f"bad '{prefix}' field {chunk!r}")
        out[key] = value
    missing = [k for k in keys if k not in out]
    if missing:
        raise StoreFormatError(f"'{prefix}' header missing {missing}")
    return out


def load(source: str | Path) -> TemplateStore:
    """Load and validate a store; never returns a partially loaded one."""
    path = Path(source)
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 6:
        raise StoreFormatError("truncated store file")
    magic = lines[0].split(" ")
    if magic != [FORMAT_MAGIC, FORMAT_VERSION]:
        raise StoreFormatError(f"unsupported store header {lines[0]!r}")
    config_fields = _parse_kv(
        lines[1], "config", ("abstraction", "context_size", "vocabulary_size")
    )
    config = TemplateConfig(
        abstraction=Abstraction.parse(config_fields["abstraction"]),
        context_size=int(config_fields["context_size"]),
        vocabulary_size=int(config_fields["vocabulary_size"]),
    )
    if not lines[2].startswith("built_at "):
        raise StoreFormatError("missing built_at header")
    built_at = lines[2][len("built_at ") :]
    global_fields = _parse_kv(
        lines[3], "global", ("m", "avg_us", "std_us", "template_count")
    )
    stored_global = GlobalStats(
        m=float(global_fields["m"]),
        avg_us=float(global_fields["avg_us"]),
        std_us=float(global_fields["std_us"]),
        template_count=int(global_fields["template_count"]),
    )
    vocab_fields = _parse_kv(lines[4], "vocabulary", ("file", "size", "kept"))
    vocab_file = path.with_name(vocab_fields["file"])
    if not vocab_file.exists():
        raise StoreFormatError(f"missing vocabulary file {vocab_file.name}")
    kept = tuple(
        line for line in vocab_file.read_text(encoding="utf-8").split("\n") if line != ""
    )
    if len(kept) != int(vocab_fields["kept"]):
        raise StoreFormatError("vocabulary file does not match header count")
    vocabulary = Vocabulary(kept, int(vocab_fields["size"]))
    try:
        count = int(lines[5].split(" ")[1])
    except (IndexError, ValueError):
        raise StoreFormatError("bad entries header") from None
    entry_lines = lines[6:]
    if len(entry_lines) != count:
        raise StoreFormatError(
            f"entry count mismatch: header says {count}, file has {len(entry_lines)}"
        )
    entries: dict[TemplateKey, TemplateStats] = {}
    for offset, line in enumerate(entry_lines, start=7):
        parts = line.split("\t")
        if len(parts) != 3:
            raise StoreFormatError(f"line {offset}: expected 3 tab-separated fields")
        language, counter_text, escaped = parts
        try:
            counters = [int(v) for v in counter_text.split(" ")]
        except ValueError:
            raise StoreFormatError(f"line {offset}: non-integer counter") from None
        if len(counters) != 10:
            raise StoreFormatError(f"line {offset}: expected 10 counters")
        stats = TemplateStats(*counters)
        try:
            stats.validate()
        except ValueError as exc:
            raise StoreFormatError(f"line {offset}: {exc}") from None
        key = TemplateKey(language, unescape_value(escaped))
        if key in entries:
            raise StoreFormatError(f"line {offset}: duplicate template key")
        entries[key] = stats
    recomputed = global_stats_of(entries)
    if recomputed != stored_global:
        raise StoreFormatError(
            "global stats drift: header does not match recomputation from entries"
        )
    return TemplateStore(
        entries=entries,
        global_stats=recomputed,
        vocabulary=vocabulary,
        config=config,
        built_at=built_at,
    )


def merge_stores(a: TemplateStore, b: TemplateStore) -> TemplateStore:
    """Entry-wise merge of two shards built under one configuration."""
    if a.config != b.config:
        raise ValueError("cannot merge stores with different template configs")
    if a.vocabulary != b.vocabulary:
        raise ValueError("cannot merge stores with different vocabularies")
    merged = {key: stats.copy() for key, stats in a.entries.items()}
    for key, stats in b.entries.items():
        existing = merged.get(key)
        merged[key] = merge_stats(existing, stats) if existing is not None else stats.copy()
    return TemplateStore(
        entries=merged,
        global_stats=global_stats_of(merged),
        vocabulary=a.vocabulary,
        config=a.config,
        built_at=max(a.built_at, b.built_at),
    )
