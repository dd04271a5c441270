"""Reasoning-trajectory format: parse, serialize, choice extraction.

The canonical layout is three blocks, each delimiter on its own line:

    <|begin_of_thought|>
    ...free-form reasoning...
    <|end_of_thought|>
    <CI>
    sender: ['...']
    ...
    </CI>
    <|begin_of_solution|>
    ...solution text ending in a Choice line...
    <|end_of_solution|>

Parsing requires each delimiter exactly once, in order. The closing CI tag
also appears in the wild as ``<\\CI>``; both forms are accepted and
canonicalized to ``</CI>``. CI entries come as ``key: ['v1', 'v2']`` or
``key: bare value`` segments, which may run together on one line or sit on
separate lines. Block content is stripped of surrounding whitespace.

Everything here is a pure function over strings; safe for parallel batch use.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

from .ci import ComplianceVerdict, choice_to_verdict
from .errors import CikitError

__all__ = [
    "BEGIN_THOUGHT",
    "END_THOUGHT",
    "CI_OPEN",
    "CI_CLOSE",
    "BEGIN_SOLUTION",
    "END_SOLUTION",
    "COMPLIANCE_OPTIONS",
    "MCQ_OPTIONS",
    "ErrorKind",
    "FormatError",
    "ReasoningTrajectory",
    "ParsedChoice",
    "ChoiceNotFound",
    "LetterOutsideOptionSet",
    "parse",
    "serialize",
    "extract_choice",
    "extract_ci_block",
]

BEGIN_THOUGHT = "<|begin_of_thought|>"
END_THOUGHT = "<|end_of_thought|>"
CI_OPEN = "<CI>"
CI_CLOSE = "</CI>"
CI_CLOSE_BACKSLASH = "<\\CI>"  # accepted alias, canonicalized to CI_CLOSE
BEGIN_SOLUTION = "<|begin_of_solution|>"
END_SOLUTION = "<|end_of_solution|>"

COMPLIANCE_OPTIONS = frozenset({"A", "B", "C"})
MCQ_OPTIONS = frozenset({"A", "B", "C", "D"})


class ErrorKind(str, Enum):
    MISSING_DELIMITER = "missing_delimiter"
    OUT_OF_ORDER = "out_of_order"
    DUPLICATE_DELIMITER = "duplicate_delimiter"
    MALFORMED_CI_ENTRY = "malformed_ci_entry"
    CHOICE_NOT_FOUND = "choice_not_found"
    CHOICE_OUTSIDE_OPTIONS = "choice_outside_options"


@dataclass(frozen=True)
class FormatError:
    """One format violation; ``detail`` names the offending delimiter or text."""

    kind: ErrorKind
    detail: str

    def __str__(self) -> str:
        return f"{self.kind.value}: {self.detail}"


@dataclass(frozen=True)
class ReasoningTrajectory:
    """Parsed thought / CI-parameters / solution structure.

    ``ci_block`` maps CI parameter names to value lists in document order.
    ``raw`` keeps the original text when the trajectory came from parse();
    it is excluded from equality.
    """

    thought: str
    ci_block: dict[str, list[str]]
    solution: str
    raw: str | None = field(default=None, compare=False)


@dataclass(frozen=True)
class ParsedChoice:
    """Extracted choice letter; verdict set for compliance option sets."""

    letter: str
    verdict: ComplianceVerdict | None = None


class ChoiceNotFound(CikitError):
    """No ``Choice: <letter>`` pattern present in the text."""


class LetterOutsideOptionSet(CikitError):
    def __init__(self, letter: str):
        self.letter = letter
        super().__init__(f"choice letter {letter!r} outside the question's option set")


def _positions(text: str, token: str) -> list[int]:
    out = []
    start = 0
    while True:
        idx = text.find(token, start)
        if idx < 0:
            return out
        out.append(idx)
        start = idx + 1


_CI_KEY_RE = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*:\s*")


def _scan_list(text: str, start: int) -> int | None:
    """Return the index just past the ``]`` closing the list at ``start``.

    Quote-aware (single or double quotes, backslash escapes); None when the
    list never closes.
    """
    quote: str | None = None
    i = start
    while i < len(text):
        ch = text[i]
        if quote is not None:
            if ch == "\\":
                i += 2
                continue
            if ch == quote:
                quote = None
        elif ch in ("'", '"'):
            quote = ch
        elif ch == "]":
            return i + 1
        i += 1
    return None


def _parse_ci_entries(content: str) -> tuple[dict[str, list[str]], list[FormatError]]:
    entries: dict[str, list[str]] = {}
    errors: list[FormatError] = []
    i = 0
    n = len(content)
    while i < n:
        m = _CI_KEY_RE.match(content, i)
        if m is None:
            tail = content[i:].strip()
            if tail:
                errors.append(FormatError(ErrorKind.MALFORMED_CI_ENTRY, tail[:80]))
            break
        key = m.group(1)
        j = m.end()
        if j < n and content[j] == "[":
            end = _scan_list(content, j)
            if end is None:
                errors.append(FormatError(ErrorKind.MALFORMED_CI_ENTRY, content[j:j + 80]))
                break
            segment = content[j:end]
            try:
                parsed = ast.literal_eval(segment)
            except (ValueError, SyntaxError):
                errors.append(FormatError(ErrorKind.MALFORMED_CI_ENTRY, segment[:80]))
                i = end
                continue
            if not isinstance(parsed, list) or not all(isinstance(v, str) for v in parsed):
                errors.append(FormatError(ErrorKind.MALFORMED_CI_ENTRY, segment[:80]))
                i = end
                continue
            values = list(parsed)
            i = end
        else:
            nxt = _CI_KEY_RE.search(content, j)
            end = nxt.start() if nxt else n
            values = [content[j:end].strip()]
            i = end
        if key in entries:
            errors.append(FormatError(ErrorKind.MALFORMED_CI_ENTRY, f"duplicate key {key!r}"))
        else:
            entries[key] = values
    return entries, errors


def parse(text: str, *, require_ci: bool = True) -> Union[ReasoningTrajectory, list[FormatError]]:
    """Parse a trajectory; returns either the trajectory or a non-empty error list.

    Strict form requires all six delimiters exactly once, in order. With
    ``require_ci=False`` the CI block may be absent entirely (both tags
    missing), yielding an empty ci_block; a lone CI tag is still an error.
    Structural delimiter problems report only the first offender; malformed
    CI entries accumulate.
    """
    close_positions = sorted(_positions(text, CI_CLOSE) + _positions(text, CI_CLOSE_BACKSLASH))
    found = {
        BEGIN_THOUGHT: _positions(text, BEGIN_THOUGHT),
        END_THOUGHT: _positions(text, END_THOUGHT),
        CI_OPEN: _positions(text, CI_OPEN),
        CI_CLOSE: close_positions,
        BEGIN_SOLUTION: _positions(text, BEGIN_SOLUTION),
        END_SOLUTION: _positions(text, END_SOLUTION),
    }

    ci_absent = not found[CI_OPEN] and not found[CI_CLOSE]
    names = [BEGIN_THOUGHT, END_THOUGHT, CI_OPEN, CI_CLOSE, BEGIN_SOLUTION, END_SOLUTION]
    if not require_ci and ci_absent:
        names = [BEGIN_THOUGHT, END_THOUGHT, BEGIN_SOLUTION, END_SOLUTION]

    for name in names:
        if not found[name]:
            return [FormatError(ErrorKind.MISSING_DELIMITER, name)]
        if len(found[name]) > 1:
            return [FormatError(ErrorKind.DUPLICATE_DELIMITER, name)]

    prev = -1
    for name in names:
        pos = found[name][0]
        if pos <= prev:
            return [FormatError(ErrorKind.OUT_OF_ORDER, name)]
        prev = pos

    def _between(after: str, before: str) -> str:
        start = found[after][0] + len(after)
        return text[start:found[before][0]]

    thought = _between(BEGIN_THOUGHT, END_THOUGHT).strip()
    solution = _between(BEGIN_SOLUTION, END_SOLUTION).strip()

    ci_block: dict[str, list[str]] = {}
    if not ci_absent:
        ci_content = _between(CI_OPEN, CI_CLOSE)
        ci_block, ci_errors = _parse_ci_entries(ci_content)
        if ci_errors:
            return ci_errors

    return ReasoningTrajectory(thought=thought, ci_block=ci_block, solution=solution, raw=text)


_VALUE_ESCAPES = {"\\": "\\\\", "'": "\\'", "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _quote_value(value: str) -> str:
    # single-quoted with backslash escaping; control characters are escaped
    # so the segment stays ast.literal_eval-compatible
    out = []
    for ch in value:
        if ch in _VALUE_ESCAPES:
            out.append(_VALUE_ESCAPES[ch])
        elif ord(ch) < 0x20 or ch == "\x7f":
            out.append(f"\\x{ord(ch):02x}")
        else:
            out.append(ch)
    return "'" + "".join(out) + "'"


def serialize(trajectory: ReasoningTrajectory) -> str:
    """Render the canonical layout; ``parse(serialize(t)) == t``."""
    ci_lines = "\n".join(
        f"{key}: [{', '.join(_quote_value(v) for v in values)}]"
        for key, values in trajectory.ci_block.items()
    )
    return (
        f"{BEGIN_THOUGHT}\n{trajectory.thought}\n{END_THOUGHT}\n"
        f"{CI_OPEN}\n{ci_lines}\n{CI_CLOSE}\n"
        f"{BEGIN_SOLUTION}\n{trajectory.solution}\n{END_SOLUTION}"
    )


_CHOICE_RE = re.compile(r"Choice:\s*([A-Z])(?![A-Za-z0-9])")


def extract_choice(text: str, option_set: frozenset[str] = COMPLIANCE_OPTIONS) -> ParsedChoice:
    """Extract the committed choice: the LAST ``Choice: <letter>`` occurrence.

    Raises ChoiceNotFound when no such pattern exists, and
    LetterOutsideOptionSet when the last occurrence's letter is not in
    ``option_set``. For the compliance option set {A, B, C} the verdict is
    attached; for other sets it is None.
    """
    matches = _CHOICE_RE.findall(text)
    if not matches:
        raise ChoiceNotFound("no 'Choice: <letter>' pattern found")
    letter = matches[-1]
    if letter not in option_set:
        raise LetterOutsideOptionSet(letter)
    verdict = choice_to_verdict(letter) if option_set == COMPLIANCE_OPTIONS else None
    return ParsedChoice(letter=letter, verdict=verdict)


def extract_ci_block(text: str) -> dict[str, list[str]] | None:
    """Opportunistic CI extraction for texts that are not full trajectories.

    Returns the parsed entries when exactly one well-formed CI block is
    present, else None.
    """
    opens = _positions(text, CI_OPEN)
    closes = sorted(_positions(text, CI_CLOSE) + _positions(text, CI_CLOSE_BACKSLASH))
    if len(opens) != 1 or len(closes) != 1 or closes[0] <= opens[0]:
        return None
    content = text[opens[0] + len(CI_OPEN):closes[0]]
    entries, errors = _parse_ci_entries(content)
    if errors:
        return None
    return entries
