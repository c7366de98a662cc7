"""Per-language lexical profiles: comment stripping and line tokenization.

A :class:`LanguageProfile` carries just enough lexical knowledge (keywords,
comment markers, quote delimiters) to classify the tokens that template
abstraction cares about. It is deliberately not a grammar: no parse trees,
no preprocessor, no string interpolation.

Profiles for the five supported languages ship as embedded config text and
are parsed with the same loader that reads external ``*.profile`` files, so
adding a language needs a config file and a registry call, not a code change.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from pathlib import Path


class ProfileConfigError(ValueError):
    """Malformed language profile configuration."""


class Language(str, Enum):
    PYTHON = "python"
    JAVA = "java"
    CPP = "cpp"
    GO = "go"
    TYPESCRIPT = "typescript"


class TokenKind(Enum):
    KEYWORD = "keyword"
    IDENTIFIER = "identifier"
    INT_LIT = "int"
    FLOAT_LIT = "float"
    STRING_LIT = "string"
    BOOL_LIT = "bool"
    CHAR_LIT = "char"
    OPERATOR = "operator"
    PUNCT = "punct"


#: Token kinds whose texts participate in vocabulary counting and abstraction.
LITERAL_KINDS = frozenset(
    {TokenKind.INT_LIT, TokenKind.FLOAT_LIT, TokenKind.STRING_LIT, TokenKind.CHAR_LIT}
)

#: Placeholder base names used by typed abstraction, per literal kind.
TYPE_NAMES = {
    TokenKind.INT_LIT: "INT",
    TokenKind.FLOAT_LIT: "FLOAT",
    TokenKind.STRING_LIT: "STRING",
    TokenKind.CHAR_LIT: "CHAR",
    TokenKind.IDENTIFIER: "IDENTIFIER",
}


@dataclass(frozen=True, slots=True)
class Token:
    kind: TokenKind
    text: str
    start: int = field(default=-1, compare=False)

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("token text must be non-empty")


@dataclass(frozen=True, slots=True)
class LanguageProfile:
    """Lexical knowledge for one language.

    ``string_delimiters`` quote delimiters that produce STRING_LIT tokens;
    ``char_delimiters`` quote delimiters that produce CHAR_LIT tokens
    (e.g. ``'`` in Java, C++ and Go).
    """

    language_id: str
    keyword_set: frozenset[str]
    line_comment_markers: tuple[str, ...]
    block_comment_delimiters: tuple[tuple[str, str], ...]
    string_delimiters: tuple[str, ...]
    char_delimiters: tuple[str, ...] = ()
    bool_literals: frozenset[str] = frozenset({"true", "false"})
    version: int = 1

    def __post_init__(self) -> None:
        if not self.language_id:
            raise ProfileConfigError("language_id must be non-empty")
        if not self.keyword_set:
            raise ProfileConfigError("keyword_set must be non-empty")
        for kw in self.keyword_set:
            if not kw or any(ch.isspace() for ch in kw):
                raise ProfileConfigError(f"bad keyword entry: {kw!r}")
        for marker in self.line_comment_markers:
            if not marker:
                raise ProfileConfigError("comment markers must be non-empty")
        for pair in self.block_comment_delimiters:
            if len(pair) != 2 or not pair[0] or not pair[1]:
                raise ProfileConfigError(f"bad block comment delimiter pair: {pair!r}")
        for dlm in self.string_delimiters + self.char_delimiters:
            if len(dlm) != 1:
                raise ProfileConfigError(f"quote delimiters must be single chars: {dlm!r}")

    @property
    def placeholder_prefix(self) -> str:
        return self.language_id.upper()

    def quote_delimiters(self) -> tuple[str, ...]:
        extra = tuple(c for c in self.char_delimiters if c not in self.string_delimiters)
        return self.string_delimiters + extra


_WORD_PATTERN = r"(?:[^\W\d]|\$)(?:\w|\$)*"

# Hex/bin/oct first so '0x1F' stays an integer; the dot guard keeps '3.foo'
# and '1..2' from lexing as floats.
_NUMBER_PATTERN = (
    r"(?:0[xX][0-9a-fA-F][0-9a-fA-F_]*"
    r"|0[bB][01][01_]*"
    r"|0[oO][0-7][0-7_]*"
    r"|(?:\d[\d_]*\.\d[\d_]*|\d[\d_]*\.(?![.\w])|\.\d[\d_]*|\d[\d_]*)(?:[eE][+-]?\d+)?"
    r")[fFdDlLuU]*"
)

_MULTI_OPS = (
    "<<=", ">>=", "**=", "//=", "===", "!==", "...",
    "&&", "||", "==", "!=", "<=", ">=", "->", "=>", "::", "++", "--",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "**", "//",
    ":=", "<-", "?.", "??",
)

_MULTI_OP_PATTERN = "|".join(
    re.escape(op) for op in sorted(set(_MULTI_OPS), key=lambda s: (-len(s), s))
)

_OPERATOR_CHARS = frozenset("+-*/%=<>!&|^~?")


def _quote_pattern(delim: str, triple: bool) -> str:
    d = re.escape(delim)
    if delim == "`":
        return f"{d}[^{d}]*{d}?"
    core = f"{d}(?:\\\\.|[^{d}\\\\])*\\\\?{d}?"
    if triple:
        t = d * 3
        return f"{t}(?:\\\\.|[^\\\\])*?{t}|{t}.*|{core}"
    return core


@lru_cache(maxsize=None)
def _scanner(profile: LanguageProfile) -> re.Pattern[str]:
    # Python-style triple quotes are handled single-line only; multi-line
    # strings are out of scope for diff-window lexing.
    triple_ok = profile.language_id == Language.PYTHON.value
    parts = [r"(?P<ws>\s+)"]
    for i, dlm in enumerate(profile.quote_delimiters()):
        quote_re = _quote_pattern(dlm, triple_ok and dlm in ('"', "'"))
        parts.append(f"(?P<q{i}>{quote_re})")
    parts.append(f"(?P<num>{_NUMBER_PATTERN})")
    parts.append(f"(?P<word>{_WORD_PATTERN})")
    parts.append(f"(?P<op>{_MULTI_OP_PATTERN})")
    parts.append(r"(?P<other>.)")
    return re.compile("|".join(parts))


def _is_terminated(text: str, delim: str) -> bool:
    triple = delim * 3
    if len(delim) == 1 and text.startswith(triple):
        return len(text) >= 6 and text.endswith(triple)
    if len(text) < 2 or not text.endswith(delim):
        return False
    if delim == "`":
        return True
    backslashes = 0
    for ch in reversed(text[:-1]):
        if ch != "\\":
            break
        backslashes += 1
    return backslashes % 2 == 0


def _number_kind(text: str) -> TokenKind:
    if text[:2].lower() in ("0x", "0b", "0o"):
        return TokenKind.INT_LIT
    if "." in text or "e" in text or "E" in text:
        return TokenKind.FLOAT_LIT
    if text[-1] in "fFdD":
        return TokenKind.FLOAT_LIT
    return TokenKind.INT_LIT


def tokenize(
    line: str,
    profile: LanguageProfile,
    diagnostics: list[str] | None = None,
) -> list[Token]:
    """Split one comment-free source line into classified tokens.

    Every non-whitespace character lands in exactly one token. Multi-character
    operators are matched greedily. An unterminated string literal consumes
    the rest of the line as one STRING_LIT and records a diagnostic.
    """
    if "\n" in line or "\r" in line:
        raise ValueError("tokenize expects a single line")
    scanner = _scanner(profile)
    quotes = profile.quote_delimiters()
    tokens: list[Token] = []
    pos = 0
    end = len(line)
    while pos < end:
        m = scanner.match(line, pos)
        group = m.lastgroup
        text = m.group()
        start = m.start()
        pos = m.end()
        if group == "ws":
            continue
        if group.startswith("q"):
            dlm = quotes[int(group[1:])]
            kind = (
                TokenKind.STRING_LIT
                if dlm in profile.string_delimiters
                else TokenKind.CHAR_LIT
            )
            if not _is_terminated(text, dlm) and diagnostics is not None:
                diagnostics.append(f"unterminated string literal at column {start}")
            tokens.append(Token(kind, text, start))
        elif group == "num":
            tokens.append(Token(_number_kind(text), text, start))
        elif group == "word":
            if text in profile.bool_literals:
                kind = TokenKind.BOOL_LIT
            elif text in profile.keyword_set:
                kind = TokenKind.KEYWORD
            else:
                kind = TokenKind.IDENTIFIER
            tokens.append(Token(kind, text, start))
        else:
            operator = text[0] in _OPERATOR_CHARS or text == ":="
            kind = TokenKind.OPERATOR if operator else TokenKind.PUNCT
            tokens.append(Token(kind, text, start))
    return tokens


@lru_cache(maxsize=None)
def _comment_events(profile: LanguageProfile) -> tuple[re.Pattern[str], dict[str, tuple[str, str]]]:
    actions: dict[str, tuple[str, str]] = {}
    for marker in profile.line_comment_markers:
        actions[marker] = ("line", "")
    for open_, close in profile.block_comment_delimiters:
        actions[open_] = ("block", close)
    for dlm in profile.quote_delimiters():
        actions.setdefault(dlm, ("quote", dlm))
    ordered = sorted(actions, key=lambda s: (-len(s), s))
    pattern = re.compile("|".join(re.escape(s) for s in ordered))
    return pattern, actions


def _skip_string(line: str, start: int, quote: str) -> int:
    """Index just past the closing quote, or end of line if unterminated."""
    allow_escape = quote != "`"
    i = start + 1
    end = len(line)
    while i < end:
        ch = line[i]
        if allow_escape and ch == "\\":
            i += 2
            continue
        if ch == quote:
            return i + 1
        i += 1
    return end


def strip_comments(
    lines: list[str] | tuple[str, ...],
    profile: LanguageProfile,
    diagnostics: list[str] | None = None,
) -> list[str]:
    """Blank out comment spans, leaving string literal contents untouched.

    Returns a same-length list of lines with comment text removed and
    trailing whitespace trimmed. Block comments may span lines; an
    unterminated block comment swallows the rest of the input and records
    a diagnostic instead of failing.
    """
    pattern, actions = _comment_events(profile)
    out: list[str] = []
    block_close: str | None = None
    block_opened_at = -1
    for lineno, line in enumerate(lines):
        buf: list[str] = []
        pos = 0
        end = len(line)
        while pos < end:
            if block_close is not None:
                close_at = line.find(block_close, pos)
                if close_at < 0:
                    pos = end
                    break
                pos = close_at + len(block_close)
                block_close = None
                continue
            m = pattern.search(line, pos)
            if m is None:
                buf.append(line[pos:])
                break
            buf.append(line[pos : m.start()])
            action, extra = actions[m.group()]
            if action == "quote":
                stop = _skip_string(line, m.start(), extra)
                buf.append(line[m.start() : stop])
                pos = stop
            elif action == "line":
                pos = end
            else:
                close_at = line.find(extra, m.end())
                if close_at >= 0:
                    pos = close_at + len(extra)
                else:
                    block_close = extra
                    block_opened_at = lineno
                    pos = end
        out.append("".join(buf).rstrip())
    if block_close is not None and diagnostics is not None:
        diagnostics.append(
            f"unterminated block comment opened on line {block_opened_at + 1}; "
            "remainder treated as comment"
        )
    return out


# --- profile configuration -------------------------------------------------

_PROFILE_KEYS = {
    "version",
    "language",
    "keywords",
    "booleans",
    "line_comments",
    "block_comments",
    "strings",
    "chars",
}


def parse_profile_config(text: str) -> LanguageProfile:
    """Parse the ``key: value`` profile format.

    Required keys: ``language`` and ``keywords``. ``block_comments`` holds
    open/close delimiters in pairs. A line that does not start with a known
    key continues the previous value, so long word lists may wrap. Blank
    lines and ``#`` comment lines are ignored.
    """
    values: dict[str, str] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition(":")
        key = key.strip()
        if sep and key in _PROFILE_KEYS:
            if key in values:
                raise ProfileConfigError(f"line {lineno}: duplicate key {key!r}")
            values[key] = value.strip()
            current = key
        elif current is not None:
            values[current] = f"{values[current]} {line}".strip()
        else:
            raise ProfileConfigError(f"line {lineno}: expected 'key: value'")
    for required in ("language", "keywords"):
        if required not in values:
            raise ProfileConfigError(f"missing required key {required!r}")
    version = int(values.get("version", "1"))
    if version != 1:
        raise ProfileConfigError(f"unsupported profile version {version}")
    blocks = tuple(values.get("block_comments", "").split())
    if len(blocks) % 2 != 0:
        raise ProfileConfigError("block_comments must list open/close pairs")
    pairs = tuple((blocks[i], blocks[i + 1]) for i in range(0, len(blocks), 2))
    return LanguageProfile(
        language_id=values["language"],
        keyword_set=frozenset(values["keywords"].split()),
        line_comment_markers=tuple(values.get("line_comments", "").split()),
        block_comment_delimiters=pairs,
        string_delimiters=tuple(values.get("strings", "").split()),
        char_delimiters=tuple(values.get("chars", "").split()),
        bool_literals=frozenset(values.get("booleans", "true false").split()),
        version=version,
    )


def load_profile(path: str | Path) -> LanguageProfile:
    return parse_profile_config(Path(path).read_text(encoding="utf-8"))


# 'nil' is intentionally absent from the Go keywords: statement-removal
# templates for the 'if err != nil' idiom must abstract it like any other
# identifier. 'None', 'null', 'this', 'self' and friends stay keywords so
# they survive abstraction verbatim.
BUILTIN_PROFILE_CONFIGS: dict[Language, str] = {
    Language.PYTHON: """
        language: python
        keywords: None and as assert async await break case class continue def del
            elif else except finally for from global if import in is lambda match
            nonlocal not or pass raise return self cls try while with yield
        booleans: True False
        line_comments: #
        strings: " '
    """,
    Language.JAVA: """
        language: java
        keywords: abstract assert boolean break byte case catch char class const
            continue default do double else enum extends final finally float for
            goto if implements import instanceof int interface long native new null
            package permits private protected public record return sealed short
            static strictfp super switch synchronized this throw throws transient
            try var void volatile while yield
        booleans: true false
        line_comments: //
        block_comments: /* */
        strings: "
        chars: '
    """,
    Language.CPP: """
        language: cpp
        keywords: alignas alignof and and_eq asm auto bitand bitor bool break case
            catch char char16_t char32_t char8_t class compl concept const
            const_cast consteval constexpr constinit continue co_await co_return
            co_yield decltype default delete do double dynamic_cast else enum
            explicit export extern float for friend goto if inline int long mutable
            namespace new noexcept not not_eq nullptr operator or or_eq private
            protected public register reinterpret_cast requires return short signed
            sizeof static static_assert static_cast struct switch template this
            thread_local throw try typedef typeid typename union unsigned using
            virtual void volatile wchar_t while xor xor_eq
        booleans: true false
        line_comments: //
        block_comments: /* */
        strings: "
        chars: '
    """,
    Language.GO: """
        language: go
        keywords: break case chan const continue default defer else fallthrough for
            func go goto if import interface map package range return select struct
            switch type var
        booleans: true false
        line_comments: //
        block_comments: /* */
        strings: " `
        chars: '
    """,
    Language.TYPESCRIPT: """
        language: typescript
        keywords: abstract any as asserts async await boolean break case catch class
            const constructor continue debugger declare default delete do else enum
            export extends finally for from function get if implements import in
            infer instanceof interface is keyof let module namespace never new null
            number object of out override package private protected public readonly
            require return satisfies set static string super switch symbol this
            throw try type typeof undefined unique unknown var void while with yield
        booleans: true false
        line_comments: //
        block_comments: /* */
        strings: " ' `
    """,
}


class ProfileRegistry:
    """Lookup table from language id to profile; extensible at runtime."""

    def __init__(self, profiles: tuple[LanguageProfile, ...] | list[LanguageProfile] = ()):
        self._profiles: dict[str, LanguageProfile] = {}
        for profile in profiles:
            self.register(profile)

    def register(self, profile: LanguageProfile, replace: bool = False) -> None:
        if not replace and profile.language_id in self._profiles:
            raise ProfileConfigError(f"profile already registered: {profile.language_id}")
        self._profiles[profile.language_id] = profile

    def get(self, language_id: str) -> LanguageProfile:
        try:
            return self._profiles[language_id]
        except KeyError:
            raise KeyError(f"unknown language: {language_id!r}") from None

    def __contains__(self, language_id: str) -> bool:
        return language_id in self._profiles

    def languages(self) -> list[str]:
        return sorted(self._profiles)


def builtin_registry() -> ProfileRegistry:
    """Fresh registry holding the five built-in language profiles."""
    registry = ProfileRegistry()
    for config in BUILTIN_PROFILE_CONFIGS.values():
        registry.register(parse_profile_config(config))
    return registry


DEFAULT_PROFILES = builtin_registry()
