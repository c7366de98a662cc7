"""Toy diff-based mutant generator.

Produces at most one mutant per changed line by trying the five operators
in seeded random order and taking the first that applies:

* AOR swaps an arithmetic operator for a different one,
* LCR swaps logical connectors (``&&``/``||``, ``and``/``or``),
* ROR swaps a relational operator or replaces a parenthesized condition
  with a boolean constant,
* UOI negates a boolean literal or a parenthesized condition head,
* SBR deletes the line.

Each record's diff carries one context line per side. Kill and feedback
lists start as single-snapshot all-false; they are inputs elsewhere, never
computed here.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .diffs import MutantRecord
from .langs import LanguageProfile, Token, TokenKind, strip_comments, tokenize


class MutationOperator(Enum):
    AOR = "AOR"
    LCR = "LCR"
    ROR = "ROR"
    UOI = "UOI"
    SBR = "SBR"


ARITHMETIC_OPS = ("%", "*", "+", "-", "/")
RELATIONAL_OPS = ("!=", "<", "<=", "==", ">", ">=")
LOGICAL_SWAPS = {"&&": "||", "||": "&&", "and": "or", "or": "and"}
CONDITION_KEYWORDS = frozenset({"if", "while"})


@dataclass(frozen=True, slots=True)
class _Candidate:
    mutated_line: str | None  # None deletes the line


def _code_spans(line: str, profile: LanguageProfile) -> list[Token]:
    """Tokens of the line with inline comments removed.

    Token offsets stay valid in the raw line because stripping only blanks
    a trailing span here (single-line view, no cross-line comment state).
    """
    stripped = strip_comments([line], profile)[0]
    if stripped == line.rstrip():
        return tokenize(stripped, profile)
    # Comment removal may splice interior block comments; offsets in the
    # stripped text then disagree with the raw line. Mutating such lines is
    # not worth an offset map, so only the prefix before the first change
    # is considered.
    prefix_len = 0
    for raw_ch, kept_ch in zip(line, stripped):
        if raw_ch != kept_ch:
            break
        prefix_len += 1
    return [t for t in tokenize(stripped, profile) if t.start + len(t.text) <= prefix_len]


def _replace_span(line: str, token: Token, replacement: str) -> str:
    return line[: token.start] + replacement + line[token.start + len(token.text) :]


def _bool_constant(profile: LanguageProfile) -> str:
    return "True" if "True" in profile.bool_literals else "true"


def _negation(text: str, profile: LanguageProfile) -> str:
    if "True" in profile.bool_literals:  # Python spelling
        return f"not ({text})"
    return f"!({text})"


def _enclosing_parens(tokens: Sequence[Token], index: int) -> tuple[Token, Token] | None:
    """Innermost ( ... ) pair around tokens[index], if any."""
    depth = 0
    open_token: Token | None = None
    for t in tokens[:index][::-1]:
        if t.kind is not TokenKind.PUNCT:
            continue
        if t.text == ")":
            depth += 1
        elif t.text == "(":
            if depth == 0:
                open_token = t
                break
            depth -= 1
    if open_token is None:
        return None
    depth = 0
    for t in tokens[index + 1 :]:
        if t.kind is not TokenKind.PUNCT:
            continue
        if t.text == "(":
            depth += 1
        elif t.text == ")":
            if depth == 0:
                return open_token, t
            depth -= 1
    return None


def _paren_group_after(tokens: Sequence[Token], index: int) -> tuple[Token, Token] | None:
    """The ( ... ) group starting right after tokens[index], if present."""
    if index + 1 >= len(tokens) or tokens[index + 1].text != "(":
        return None
    depth = 0
    open_token = tokens[index + 1]
    for t in tokens[index + 1 :]:
        if t.kind is not TokenKind.PUNCT:
            continue
        if t.text == "(":
            depth += 1
        elif t.text == ")":
            depth -= 1
            if depth == 0:
                return open_token, t
    return None


def _aor_candidates(line: str, tokens: Sequence[Token], profile: LanguageProfile) -> list[_Candidate]:
    out = []
    for token in tokens:
        if token.kind is TokenKind.OPERATOR and token.text in ARITHMETIC_OPS:
            for repl in ARITHMETIC_OPS:
                if repl != token.text:
                    out.append(_Candidate(_replace_span(line, token, repl)))
    return out


def _lcr_candidates(line: str, tokens: Sequence[Token], profile: LanguageProfile) -> list[_Candidate]:
    out = []
    for token in tokens:
        swap = LOGICAL_SWAPS.get(token.text)
        if swap is None:
            continue
        if token.kind is TokenKind.OPERATOR or token.kind is TokenKind.KEYWORD:
            out.append(_Candidate(_replace_span(line, token, swap)))
    return out


def _ror_candidates(line: str, tokens: Sequence[Token], profile: LanguageProfile) -> list[_Candidate]:
    out = []
    for index, token in enumerate(tokens):
        if token.kind is not TokenKind.OPERATOR or token.text not in RELATIONAL_OPS:
            continue
        for repl in RELATIONAL_OPS:
            if repl != token.text:
                out.append(_Candidate(_replace_span(line, token, repl)))
        parens = _enclosing_parens(tokens, index)
        if parens is not None:
            open_token, close_token = parens
            mutated = (
                line[: open_token.start + 1]
                + _bool_constant(profile)
                + line[close_token.start :]
            )
            out.append(_Candidate(mutated))
    return out


def _uoi_candidates(line: str, tokens: Sequence[Token], profile: LanguageProfile) -> list[_Candidate]:
    out = []
    for token in tokens:
        if token.kind is TokenKind.BOOL_LIT:
            out.append(_Candidate(_replace_span(line, token, _negation(token.text, profile))))
    python_style = "True" in profile.bool_literals
    if not python_style:
        for index, token in enumerate(tokens):
            if token.kind is TokenKind.KEYWORD and token.text in CONDITION_KEYWORDS:
                group = _paren_group_after(tokens, index)
                if group is None:
                    continue
                open_token, close_token = group
                inner = line[open_token.start + 1 : close_token.start]
                if not inner.strip():
                    continue
                mutated = (
                    line[: open_token.start + 1]
                    + _negation(inner.strip(), profile)
                    + line[close_token.start :]
                )
                out.append(_Candidate(mutated))
    return out


def _sbr_candidates(line: str, tokens: Sequence[Token], profile: LanguageProfile) -> list[_Candidate]:
    return [_Candidate(None)]


_CANDIDATE_FUNCS = {
    MutationOperator.AOR: _aor_candidates,
    MutationOperator.LCR: _lcr_candidates,
    MutationOperator.ROR: _ror_candidates,
    MutationOperator.UOI: _uoi_candidates,
    MutationOperator.SBR: _sbr_candidates,
}


def single_line_diff(source: Sequence[str], index: int, mutated: str | None) -> str:
    """Unified diff for one line change with one context line per side."""
    parts: list[str] = []
    if index > 0:
        parts.append(" " + source[index - 1])
    parts.append("-" + source[index])
    if mutated is not None:
        parts.append("+" + mutated)
    if index + 1 < len(source):
        parts.append(" " + source[index + 1])
    return "\n".join(parts)


def mutate_line(
    line: str,
    profile: LanguageProfile,
    operator: MutationOperator,
    rng: random.Random,
) -> tuple[bool, str | None]:
    """One seeded mutation of the line.

    Returns (applied, mutated_line); mutated_line of None means the line is
    deleted. Lines with no code tokens never apply.
    """
    tokens = _code_spans(line, profile)
    if not tokens:
        return False, None
    candidates = _CANDIDATE_FUNCS[operator](line, tokens, profile)
    if not candidates:
        return False, None
    return True, rng.choice(candidates).mutated_line


def generate_mutants(
    source: Sequence[str],
    changed_lines: Iterable[int],
    profile: LanguageProfile,
    rng: random.Random,
    operators: Sequence[MutationOperator] = tuple(MutationOperator),
    filename: str = "<input>",
    changelist_id: str = "cl-0",
) -> list[MutantRecord]:
    """At most one mutant per changed line (line numbers are zero-based).

    Operators are tried in a seeded random order per line; the first with
    an applicable mutation wins. Lines with no code tokens produce nothing.
    """
    records: list[MutantRecord] = []
    for index in sorted(set(changed_lines)):
        if index < 0 or index >= len(source):
            raise ValueError(f"changed line {index} outside source bounds")
        order = list(operators)
        rng.shuffle(order)
        for operator in order:
            applied, mutated = mutate_line(source[index], profile, operator, rng)
            if not applied:
                continue
            diff_text = single_line_diff(source, index, mutated)
            records.append(
                MutantRecord(
                    mutant_id=f"{filename}:{index + 1}:{operator.value}",
                    changelist_id=changelist_id,
                    filename=filename,
                    language=profile.language_id,
                    diff_text=diff_text,
                    pos_feed_list=(False,),
                    neg_feed_list=(False,),
                    killed_list=(False,),
                    operator=operator.value,
                )
            )
            break
    return records
