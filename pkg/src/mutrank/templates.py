"""Identifier templates: canonical abstractions of a mutant's diff window.

A template renders the changed lines (plus optional context) with literals
and identifiers abstracted away, so that structurally identical mutants in
different code collapse to one key. Three abstraction levels are supported:

* ``ORIGINAL_CODE``: token texts verbatim (whitespace canonicalized).
* ``TYPED``: literals become INT/FLOAT/STRING/CHAR, identifiers IDENTIFIER.
* ``INDEXED_TYPED``: as TYPED, with a per-kind index by first appearance,
  spelled ``<LANG>_IDENTIFIER_<k>``, ``<LANG>_INT_<k>`` and so on, so that
  repeats of the same text share an index.

Booleans and keywords always render verbatim; vocabulary-kept texts are
exempt from abstraction. Lines carry their diff prefix, tokens are joined
by single spaces, and hunks are joined by ``@@`` lines.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .diffs import DiffHunk, MutantRecord, extract_window, parse_unified_diff
from .langs import (
    LITERAL_KINDS,
    TYPE_NAMES,
    LanguageProfile,
    ProfileRegistry,
    Token,
    TokenKind,
    DEFAULT_PROFILES,
    strip_comments,
    tokenize,
)

EMPTY_TEMPLATE_TEXT = "-<EMPTY>"
HUNK_SEPARATOR = "@@"

GRID_CONTEXT_SIZES = (0, 1)
GRID_VOCABULARY_SIZES = (0, 1000, 5000, 10000)


class Abstraction(Enum):
    ORIGINAL_CODE = "original"
    TYPED = "typed"
    INDEXED_TYPED = "indexed_typed"

    @classmethod
    def parse(cls, name: str) -> "Abstraction":
        normalized = name.strip().lower()
        aliases = {
            "original": cls.ORIGINAL_CODE,
            "original_code": cls.ORIGINAL_CODE,
            "typed": cls.TYPED,
            "indexed": cls.INDEXED_TYPED,
            "indexed_typed": cls.INDEXED_TYPED,
        }
        try:
            return aliases[normalized]
        except KeyError:
            raise ValueError(f"unknown abstraction {name!r}") from None


@dataclass(frozen=True, slots=True)
class TemplateConfig:
    abstraction: Abstraction = Abstraction.INDEXED_TYPED
    context_size: int = 0
    vocabulary_size: int = 0

    def __post_init__(self) -> None:
        if self.context_size < 0:
            raise ValueError("context_size must be >= 0")
        if self.vocabulary_size < 0:
            raise ValueError("vocabulary_size must be >= 0")
        if self.context_size not in GRID_CONTEXT_SIZES:
            warnings.warn(f"context_size {self.context_size} is outside the tuned grid")
        if self.vocabulary_size not in GRID_VOCABULARY_SIZES:
            warnings.warn(f"vocabulary_size {self.vocabulary_size} is outside the tuned grid")

    def describe(self) -> str:
        return (
            f"abstraction={self.abstraction.value}"
            f" context_size={self.context_size}"
            f" vocabulary_size={self.vocabulary_size}"
        )


@dataclass(frozen=True)
class Vocabulary:
    """Token texts exempt from abstraction, most frequent first."""

    kept_tokens: tuple[str, ...] = ()
    size: int = 0

    def __post_init__(self) -> None:
        if len(self.kept_tokens) > self.size:
            raise ValueError("kept_tokens exceeds declared size")
        object.__setattr__(self, "_members", frozenset(self.kept_tokens))

    def __contains__(self, text: str) -> bool:
        return text in self._members

    def __len__(self) -> int:
        return len(self.kept_tokens)


EMPTY_VOCABULARY = Vocabulary()


@dataclass(frozen=True, slots=True)
class TemplateKey:
    language_id: str
    template_text: str


class TemplateBuilder:
    """Builds templates, caching per-line tokenization and per-record parses.

    Caching matters when sweeping many configurations over one corpus: the
    diff parse is config-independent and token streams depend only on the
    line text and language.
    """

    def __init__(self, profiles: ProfileRegistry | None = None):
        self.profiles = profiles if profiles is not None else DEFAULT_PROFILES
        self._parsed: dict[tuple[str, str], tuple[DiffHunk, ...]] = {}
        self._tokens: dict[tuple[str, str], tuple[Token, ...]] = {}

    def parsed_hunks(self, record: MutantRecord) -> tuple[DiffHunk, ...]:
        cache_key = (record.language, record.diff_text)
        hunks = self._parsed.get(cache_key)
        if hunks is None:
            hunks = tuple(self._strip_and_parse(record))
            self._parsed[cache_key] = hunks
        return hunks

    def _strip_and_parse(self, record: MutantRecord) -> list[DiffHunk]:
        profile = self.profiles.get(record.language)
        kept: list[str] = []
        prefixes: list[str] = []
        for line in record.diff_text.split("\n"):
            if line.startswith("---") or line.startswith("+++") or line.startswith("@@"):
                continue
            prefixes.append(line[:1] if line else " ")
            kept.append(line[1:] if line else "")
        stripped = strip_comments(kept, profile)
        rebuilt = "\n".join(p + t for p, t in zip(prefixes, stripped))
        return parse_unified_diff(rebuilt)

    def line_tokens(self, language: str, text: str) -> tuple[Token, ...]:
        cache_key = (language, text)
        tokens = self._tokens.get(cache_key)
        if tokens is None:
            tokens = tuple(tokenize(text, self.profiles.get(language)))
            self._tokens[cache_key] = tokens
        return tokens

    def window_lines(
        self, record: MutantRecord, context_size: int
    ) -> list[list[tuple[str, tuple[Token, ...]]]]:
        """Per hunk, the (prefix, tokens) lines of the trimmed window."""
        window = extract_window(self.parsed_hunks(record), context_size)
        out = []
        for hunk in window.hunks:
            lines: list[tuple[str, tuple[Token, ...]]] = []
            for text in hunk.context_before:
                lines.append((" ", self.line_tokens(record.language, text)))
            for text in hunk.removed:
                lines.append(("-", self.line_tokens(record.language, text)))
            for text in hunk.added:
                lines.append(("+", self.line_tokens(record.language, text)))
            for text in hunk.context_after:
                lines.append((" ", self.line_tokens(record.language, text)))
            out.append(lines)
        return out

    def build(
        self,
        record: MutantRecord,
        config: TemplateConfig,
        vocabulary: Vocabulary = EMPTY_VOCABULARY,
    ) -> TemplateKey:
        hunk_lines = self.window_lines(record, config.context_size)
        profile = self.profiles.get(record.language)
        text = _render_window(hunk_lines, config.abstraction, vocabulary, profile)
        return TemplateKey(record.language, text)

    def diff_line_tokens(self, record: MutantRecord) -> Iterable[tuple[Token, ...]]:
        """Token streams of every diff line (full context), each line once."""
        for hunk_index, hunk in enumerate(self.parsed_hunks(record)):
            # context_before repeats the previous hunk's context_after run
            texts: Iterable[str]
            if hunk_index == 0:
                texts = hunk.context_before
            else:
                texts = ()
            for text in texts:
                yield self.line_tokens(record.language, text)
            for text in hunk.removed:
                yield self.line_tokens(record.language, text)
            for text in hunk.added:
                yield self.line_tokens(record.language, text)
            for text in hunk.context_after:
                yield self.line_tokens(record.language, text)


def _render_window(
    hunk_lines: list[list[tuple[str, tuple[Token, ...]]]],
    abstraction: Abstraction,
    vocabulary: Vocabulary,
    profile: LanguageProfile,
) -> str:
    rendered: list[str] = []
    saw_token = False
    indices: dict[tuple[TokenKind, str], int] = {}
    counters: dict[TokenKind, int] = {}
    prefix = profile.placeholder_prefix
    for hunk_index, lines in enumerate(hunk_lines):
        if hunk_index:
            rendered.append(HUNK_SEPARATOR)
        for line_prefix, tokens in lines:
            if tokens:
                saw_token = True
            parts: list[str] = []
            for token in tokens:
                if abstraction is Abstraction.ORIGINAL_CODE:
                    parts.append(token.text)
                    continue
                kind = token.kind
                if kind not in LITERAL_KINDS and kind is not TokenKind.IDENTIFIER:
                    parts.append(token.text)
                    continue
                if token.text in vocabulary:
                    parts.append(token.text)
                    continue
                base = TYPE_NAMES[kind]
                if abstraction is Abstraction.TYPED:
                    parts.append(base)
                    continue
                index_key = (kind, token.text)
                index = indices.get(index_key)
                if index is None:
                    index = counters.get(kind, 0)
                    counters[kind] = index + 1
                    indices[index_key] = index
                parts.append(f"{prefix}_{base}_{index}")
            rendered.append(line_prefix + " ".join(parts))
    if not saw_token:
        return EMPTY_TEMPLATE_TEXT
    return "\n".join(rendered)


def build_template(
    record: MutantRecord,
    config: TemplateConfig,
    vocabulary: Vocabulary = EMPTY_VOCABULARY,
    profiles: ProfileRegistry | None = None,
) -> TemplateKey:
    """One-shot template build; use a TemplateBuilder for corpus sweeps."""
    return TemplateBuilder(profiles).build(record, config, vocabulary)


def build_vocabulary(
    records: Sequence[MutantRecord],
    size: int,
    profiles: ProfileRegistry | None = None,
    builder: TemplateBuilder | None = None,
) -> Vocabulary:
    """The ``size`` most frequent identifier and literal texts in the corpus.

    Frequencies are counted over every diff line (changed and context) after
    comment stripping; ties break lexicographically ascending. Size 0 keeps
    nothing, making every identifier and literal abstract.
    """
    if size < 0:
        raise ValueError("size must be >= 0")
    if size == 0:
        return EMPTY_VOCABULARY
    if builder is None:
        builder = TemplateBuilder(profiles)
    counts: Counter[str] = Counter()
    for record in records:
        for tokens in builder.diff_line_tokens(record):
            for token in tokens:
                if token.kind is TokenKind.IDENTIFIER or token.kind in LITERAL_KINDS:
                    counts[token.text] += 1
    ordered = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    kept = tuple(text for text, _ in ordered[:size])
    return Vocabulary(kept, size)
