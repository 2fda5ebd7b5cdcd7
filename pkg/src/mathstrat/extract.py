"""Parsing of model outputs: fenced code blocks and boxed final answers."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum


class ExtractMethod(str, Enum):
    FENCED_BLOCK = "fenced_block"
    BOXED = "boxed"
    ANSWER_SENTINEL = "answer_sentinel"


class ExtractionError(ValueError):
    pass


class NoCodeBlock(ExtractionError):
    pass


class UnterminatedFence(ExtractionError):
    pass


class NoAnswerFound(ExtractionError):
    pass


@dataclass(frozen=True)
class Extraction:
    payload: str
    method: ExtractMethod
    span: tuple  # (start, end) character offsets of the payload in the raw text
    soft_warning: bool = False


_SENTINEL_RE = re.compile(r"the answer is", re.IGNORECASE)


def extract_code(raw: str) -> Extraction:
    """Return the body of the LAST fenced code block.

    The language tag on the opening fence is ignored; only the fence
    markers (and the tag line) are stripped, interior whitespace is
    preserved exactly.
    """
    marks = [m.start() for m in re.finditer(r"```", raw)]
    if not marks:
        raise NoCodeBlock("no fenced code block in text")
    # Marks pair up opener/closer in order; a dangling opener at the end
    # means the last block never closed.
    if len(marks) % 2 == 1:
        raise UnterminatedFence("opening fence without a closing fence")
    opener, closer = marks[-2], marks[-1]
    # skip the language tag: everything up to and including the first
    # newline after the opening fence
    newline = raw.find("\n", opener + 3, closer)
    start = newline + 1 if newline != -1 else opener + 3
    end = closer
    body = raw[start:end]
    if body.endswith("\n"):
        end -= 1
        body = body[:-1]
    return Extraction(payload=body, method=ExtractMethod.FENCED_BLOCK, span=(start, end))


def _last_boxed(raw: str):
    idx = raw.rfind("\\boxed{")
    if idx == -1:
        return None
    start = idx + len("\\boxed{")
    depth = 1
    i = start
    while i < len(raw):
        c = raw[i]
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return (start, i, False)
        i += 1
    # Unbalanced: consume to end of text and flag it; downstream
    # equivalence may still succeed.
    return (start, len(raw), True)


def extract_boxed(raw: str) -> Extraction:
    """Return the argument of the last \\boxed{...}, braces balanced.

    Falls back to the text after the last case-insensitive "The answer is"
    sentinel, trimmed of trailing punctuation. Boxed has priority over the
    sentinel; last occurrence wins for both.
    """
    boxed = _last_boxed(raw)
    if boxed is not None:
        start, end, unbalanced = boxed
        return Extraction(payload=raw[start:end], method=ExtractMethod.BOXED,
                          span=(start, end), soft_warning=unbalanced)
    hits = list(_SENTINEL_RE.finditer(raw))
    if not hits:
        raise NoAnswerFound("neither \\boxed{...} nor an answer sentinel present")
    start = hits[-1].end()
    tail = raw[start:]
    stripped = tail.strip().rstrip(".!?,;:$")
    # Recompute the span of the trimmed payload.
    begin = start + tail.find(stripped) if stripped else start
    return Extraction(payload=stripped, method=ExtractMethod.ANSWER_SENTINEL,
                      span=(begin, begin + len(stripped)))
