"""Commentary-to-news sentence rewriting.

Two backends share one contract (same arity, order preserved): a built-in
deterministic template rewriter, and a client for a remote seq2seq service.
The template rewriter normalizes the minute prefix into a news-style lead-in,
applies colloquial-to-news substitutions, strips exclamations and guarantees
terminal punctuation; it is idempotent, so re-rewriting changes nothing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ItemFailure, ProtocolError, ServiceUnavailable
from .service import ServiceClient
from .text import contains_cjk, ordinal


@dataclass(frozen=True)
class RewriteRequest:
    source: str
    game_id: str
    commentary_index: int

    def __post_init__(self):
        if not self.source.strip():
            raise ValueError("rewrite source must be non-empty")


@dataclass(frozen=True)
class RewrittenCandidate:
    text: str
    info: float
    commentary_index: int
    source_minute: int | None = None
    fluency: float | None = None


_MINUTE_PREFIX = re.compile(r"^(\d{1,3})'\s*")

# (rule id, pattern, replacement); replacements never reintroduce a trigger.
DEFAULT_SUBSTITUTIONS: tuple[tuple[str, str, str], ...] = (
    ("colloquial.what_an", r"(?i)\bwhat an\b\s*", "an "),
    ("colloquial.what_a", r"(?i)\bwhat a\b\s*", "a "),
    ("colloquial.wow", r"(?i)\bwow[,，]?\s*", ""),
    ("colloquial.zh_amazing", r"太精彩了[，,]?", "十分精彩，"),
    ("colloquial.zh_beautiful", r"漂亮[！!]", "精彩。"),
)


@dataclass(frozen=True)
class RewriteRules:
    substitutions: tuple[tuple[str, str, str], ...] = DEFAULT_SUBSTITUTIONS
    strip_exclamations: bool = True
    normalize_minute: bool = True


def _normalize_minute_prefix(text: str, zh: bool) -> str:
    m = _MINUTE_PREFIX.match(text)
    if not m:
        return text
    minute = int(m.group(1))
    rest = text[m.end():]
    if zh:
        return f"第{minute}分钟，{rest}"
    return f"In the {ordinal(minute)} minute, {rest}"


def template_rewrite(req: RewriteRequest, rules: RewriteRules = RewriteRules()) -> str:
    """Deterministic news-style rewrite of one minute-prefixed commentary."""
    text = req.source.strip()
    zh = contains_cjk(text)
    if rules.normalize_minute:
        text = _normalize_minute_prefix(text, zh)
    for _, pattern, replacement in rules.substitutions:
        text = re.sub(pattern, replacement, text)
    if rules.strip_exclamations:
        text = re.sub(r"[!！]+", "。" if zh else ".", text)
        text = re.sub(r"\.{2,}", ".", text)
        text = re.sub(r"。{2,}", "。", text)
    text = text.strip()
    if text and text[-1] not in ".。?？…":
        text += "。" if zh else "."
    if not text.strip("。."):
        # rules must never empty a sentence; fall back to the raw source
        return req.source.strip()
    return text


def remote_rewrite(
    batch: list[RewriteRequest],
    endpoint: str | ServiceClient,
    fallback: bool = True,
    rules: RewriteRules = RewriteRules(),
) -> list[str]:
    """Rewrite a batch through the service; order-preserving.

    With ``fallback`` enabled, a failed item (empty output) or an unreachable
    service degrades to the template rewriter instead of raising.
    """
    if not batch:
        return []
    client = endpoint
    owns_client = isinstance(endpoint, str)
    try:
        if owns_client:
            client = ServiceClient.connect(endpoint)
        values = client.request("rewrite", {"sources": [r.source for r in batch]})
        if len(values) != len(batch):
            raise ProtocolError(f"expected {len(batch)} rewrites, got {len(values)}")
        out: list[str] = []
        for i, value in enumerate(values):
            text = value if isinstance(value, str) else ""
            if not text.strip():
                if not fallback:
                    raise ItemFailure(i, "empty rewrite")
                text = template_rewrite(batch[i], rules)
            out.append(text)
        return out
    except ServiceUnavailable:
        if not fallback:
            raise
        return [template_rewrite(req, rules) for req in batch]
    finally:
        if owns_client and isinstance(client, ServiceClient):
            client.close()
