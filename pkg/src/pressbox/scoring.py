"""Similarity primitives: ROUGE-1/2/L, a deterministic semantic scorer, and
the combined news/commentary similarity used for pseudo-labeling.

ROUGE here is the plain clipped-overlap / LCS formulation on caller-supplied
token sequences (character-level by default, which is the usual choice for
Chinese).  The semantic scorer interface abstracts an embedding model; the
built-in implementation is a hashed character-n-gram cosine so the whole
pipeline runs offline and byte-reproducibly.  A remote, model-backed scorer
can be swapped in through the service client without touching callers.

Empty-input convention: if exactly one side has no n-grams the score is all
zeros; if both sides are empty it is all ones, so identity always scores 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Protocol, Sequence

import numpy as np

from . import kernels
from .errors import EmptyText
from .text import Tokenization, tokenize


class RougeVariant(str, Enum):
    R1 = "R1"
    R2 = "R2"
    RL = "RL"


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _ngram_ids(
    candidate: Sequence[str], reference: Sequence[str], n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Encode the n-grams of both sequences into a shared integer id space."""
    ids: dict[tuple[str, ...], int] = {}

    def encode(tokens: Sequence[str]) -> np.ndarray:
        out = np.empty(max(len(tokens) - n + 1, 0), dtype=np.int64)
        for i in range(len(tokens) - n + 1):
            gram = tuple(tokens[i : i + n])
            out[i] = ids.setdefault(gram, len(ids))
        return out

    return encode(candidate), encode(reference)


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> RougeScore:
    """Clipped n-gram overlap; precision over candidate grams, recall over reference grams."""
    if n not in (1, 2):
        raise ValueError(f"n must be 1 or 2, got {n}")
    cand_ids, ref_ids = _ngram_ids(candidate, reference, n)
    if cand_ids.size == 0 and ref_ids.size == 0:
        return RougeScore(1.0, 1.0, 1.0)
    if cand_ids.size == 0 or ref_ids.size == 0:
        return RougeScore(0.0, 0.0, 0.0)
    matches = kernels.clipped_overlap(np.sort(cand_ids), np.sort(ref_ids))
    p = matches / cand_ids.size
    r = matches / ref_ids.size
    return RougeScore(p, r, _f1(p, r))


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    """Longest-common-subsequence precision/recall/F1."""
    if len(candidate) == 0 and len(reference) == 0:
        return RougeScore(1.0, 1.0, 1.0)
    if len(candidate) == 0 or len(reference) == 0:
        return RougeScore(0.0, 0.0, 0.0)
    ids: dict[str, int] = {}
    cand = np.array([ids.setdefault(t, len(ids)) for t in candidate], dtype=np.int64)
    ref = np.array([ids.setdefault(t, len(ids)) for t in reference], dtype=np.int64)
    lcs = kernels.lcs_length(cand, ref)
    p = lcs / len(candidate)
    r = lcs / len(reference)
    return RougeScore(p, r, _f1(p, r))


def rouge(
    candidate: Sequence[str], reference: Sequence[str], variant: RougeVariant
) -> RougeScore:
    if variant == RougeVariant.R1:
        return rouge_n(candidate, reference, 1)
    if variant == RougeVariant.R2:
        return rouge_n(candidate, reference, 2)
    return rouge_l(candidate, reference)


@dataclass(frozen=True)
class SimilarityConfig:
    """Weights and variant for the combined similarity.

    ``lambda_`` is the semantic-score weight; the ROUGE term gets
    ``1 - lambda_``.  Serialized under the key ``lambda``.
    """

    lambda_: float = 0.70
    rouge_variant: RougeVariant = RougeVariant.RL
    tokenization: Tokenization = Tokenization.CHAR

    def __post_init__(self):
        if not 0.0 <= self.lambda_ <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {self.lambda_}")


class SemanticScorer(Protocol):
    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        """Score text pairs in order; every value lies in [0, 1]."""
        ...


def _fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass(frozen=True)
class HashedNgramScorer:
    """Deterministic semantic stand-in: cosine of hashed char-n-gram counts.

    Texts shorter than the n-gram size contribute a single gram (the whole
    text), so identical short strings still score 1.0.
    """

    ngram: int = 3
    dims: int = 1 << 18

    def _indices(self, text: str) -> np.ndarray:
        if len(text) < self.ngram:
            grams = [text]
        else:
            grams = [text[i : i + self.ngram] for i in range(len(text) - self.ngram + 1)]
        idx = np.fromiter(
            (_fnv1a64(g.encode("utf-8")) % self.dims for g in grams),
            dtype=np.int64,
            count=len(grams),
        )
        return np.sort(idx)

    def score(self, a: str, b: str) -> float:
        if not a.strip() or not b.strip():
            raise EmptyText("semantic scorer requires non-empty texts")
        cos = kernels.sparse_cosine(self._indices(a), self._indices(b))
        return min(max(cos, 0.0), 1.0)

    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return [self.score(a, b) for a, b in pairs]


def builtin_semantic_score(a: str, b: str, ngram: int = 3, dims: int = 1 << 18) -> float:
    return HashedNgramScorer(ngram=ngram, dims=dims).score(a, b)


def combine(semantic: float, rouge_f1: float, lambda_: float) -> float:
    """lambda * semantic + (1 - lambda) * rouge_f1."""
    return lambda_ * semantic + (1.0 - lambda_) * rouge_f1


def combined_similarity_texts(
    news_text: str,
    commentary_text: str,
    cfg: SimilarityConfig,
    sem: SemanticScorer,
) -> float:
    b = sem.score_pairs([(news_text, commentary_text)])[0]
    return _combine_with_rouge(news_text, commentary_text, b, cfg)


def _combine_with_rouge(
    news_text: str, commentary_text: str, semantic: float, cfg: SimilarityConfig
) -> float:
    semantic = min(max(semantic, 0.0), 1.0)
    r = rouge(
        tokenize(news_text, cfg.tokenization),
        tokenize(commentary_text, cfg.tokenization),
        cfg.rouge_variant,
    ).f1
    return combine(semantic, r, cfg.lambda_)


def combined_similarity(news, event, cfg: SimilarityConfig, sem: SemanticScorer) -> float:
    """Combined similarity of a news sentence record and a commentary record."""
    return combined_similarity_texts(news.text, event.text, cfg, sem)


def combined_similarity_batch(
    news_text: str,
    commentary_texts: Sequence[str],
    cfg: SimilarityConfig,
    sem: SemanticScorer,
) -> list[float]:
    """Combined similarity of one news sentence against many commentaries.

    Semantic scores are fetched in one batch; each returned value is exactly
    what :func:`combined_similarity_texts` would produce for that pair.
    """
    if not commentary_texts:
        return []
    sems = sem.score_pairs([(news_text, c) for c in commentary_texts])
    return [
        _combine_with_rouge(news_text, c, s, cfg)
        for c, s in zip(commentary_texts, sems)
    ]
