"""Tokenization helpers shared across the pipeline.

Commentary and news in this domain are predominantly Chinese with Latin
names, scores and stadium jargon mixed in, so the word segmenter treats
every CJK character as its own word and every contiguous Latin/digit run
as one word.  Both policies are plain callables so callers can inject
their own.
"""

from __future__ import annotations

import re
from enum import Enum

_CJK_RANGE = "一-鿿㐀-䶿豈-﫿"
_WORD_RE = re.compile(rf"[{_CJK_RANGE}]|[A-Za-z0-9]+(?:['’-][A-Za-z0-9]+)*")
_CJK_RE = re.compile(rf"[{_CJK_RANGE}]")


class Tokenization(str, Enum):
    CHAR = "char"
    WORD = "word"


def char_tokens(text: str) -> list[str]:
    """All non-whitespace characters, in order."""
    return [ch for ch in text if not ch.isspace()]


def word_tokens(text: str) -> list[str]:
    """CJK-aware word segmentation: one token per CJK char or Latin/digit run."""
    return _WORD_RE.findall(text)


def tokenize(text: str, mode: Tokenization) -> list[str]:
    if mode == Tokenization.WORD:
        return word_tokens(text)
    return char_tokens(text)


def contains_cjk(text: str) -> bool:
    return _CJK_RE.search(text) is not None


_CJK_DIGITS = {
    "零": 0, "〇": 0, "一": 1, "二": 2, "两": 2, "三": 3, "四": 4,
    "五": 5, "六": 6, "七": 7, "八": 8, "九": 9,
}


def cjk_numeral_to_int(s: str) -> int | None:
    """Parse a small CJK numeral (supports 十/百 composition, e.g. 九十三 = 93).

    Returns None when the string is not a well-formed numeral.
    """
    if not s:
        return None
    total = 0
    current = 0
    for ch in s:
        if ch in _CJK_DIGITS:
            current = current * 10 + _CJK_DIGITS[ch]
        elif ch == "十":
            total += (current if current else 1) * 10
            current = 0
        elif ch == "百":
            total += (current if current else 1) * 100
            current = 0
        else:
            return None
    return total + current


def ordinal(n: int) -> str:
    """English ordinal string: 1 -> 1st, 2 -> 2nd, 13 -> 13th, 21 -> 21st."""
    if 10 <= n % 100 <= 20:
        suffix = "th"
    else:
        suffix = {1: "st", 2: "nd", 3: "rd"}.get(n % 10, "th")
    return f"{n}{suffix}"
