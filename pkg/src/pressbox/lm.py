"""Count-based n-gram language model used as the built-in fluency scorer.

Add-alpha smoothing over a fixed vocabulary.  Count tables are kept for
every order 1..k; a token at position i is scored with the longest context
available inside the sentence, so the first token uses the unigram table,
the second the bigram table, and so on up to order k.  With all-equal
counts this reduces exactly to the uniform model, whose perplexity equals
the vocabulary size.

Unseen tokens keep the fixed vocabulary size in the denominator and get
the usual smoothed zero-count mass alpha / (context_count + alpha * V).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Protocol, Sequence

import math

from .errors import EmptyCorpus, EmptyText, ModelNotTrained
from .text import Tokenization, tokenize

FORMAT_NAME = "pressbox-ngram-lm"
FORMAT_VERSION = 1


class FluencyScorer(Protocol):
    def perplexity(self, text: str) -> float:
        """Per-token perplexity; finite and > 0 for non-empty text."""
        ...


class NgramLanguageModel:
    def __init__(
        self,
        order: int = 2,
        alpha: float = 0.1,
        tokenization: Tokenization = Tokenization.CHAR,
    ):
        if order < 1:
            raise ValueError(f"order must be >= 1, got {order}")
        if alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {alpha}")
        self.order = order
        self.alpha = alpha
        self.tokenization = tokenization
        # counts[n] maps n-token tuples to counts; contexts[n] maps the
        # (n-1)-token prefixes to their totals.
        self.counts: list[dict[tuple[str, ...], int]] = [{} for _ in range(order + 1)]
        self.contexts: list[dict[tuple[str, ...], int]] = [{} for _ in range(order + 1)]
        self.vocab: set[str] = set()
        self.trained = False

    def fit(self, corpus: Sequence[Sequence[str]]) -> "NgramLanguageModel":
        sequences = [list(seq) for seq in corpus if len(seq) > 0]
        if not sequences:
            raise EmptyCorpus("cannot train a language model on an empty corpus")
        for seq in sequences:
            self.vocab.update(seq)
            for n in range(1, self.order + 1):
                counts = self.counts[n]
                contexts = self.contexts[n]
                for i in range(len(seq) - n + 1):
                    gram = tuple(seq[i : i + n])
                    counts[gram] = counts.get(gram, 0) + 1
                    ctx = gram[:-1]
                    contexts[ctx] = contexts.get(ctx, 0) + 1
        self.trained = True
        return self

    def _token_logprob(self, context: tuple[str, ...], token: str) -> float:
        n = len(context) + 1
        count = self.counts[n].get(context + (token,), 0)
        ctx_count = self.contexts[n].get(context, 0)
        v = len(self.vocab)
        return math.log((count + self.alpha) / (ctx_count + self.alpha * v))

    def perplexity_tokens(self, tokens: Sequence[str]) -> float:
        if not self.trained:
            raise ModelNotTrained("train or load the language model first")
        if len(tokens) == 0:
            raise EmptyText("cannot compute perplexity of empty token sequence")
        total = 0.0
        for i, token in enumerate(tokens):
            ctx_len = min(i, self.order - 1)
            context = tuple(tokens[i - ctx_len : i])
            total += self._token_logprob(context, token)
        return math.exp(-total / len(tokens))

    def perplexity(self, text: str) -> float:
        tokens = tokenize(text, self.tokenization)
        if not tokens:
            raise EmptyText("cannot compute perplexity of empty text")
        return self.perplexity_tokens(tokens)

    # -- serialization ------------------------------------------------------

    def save(self, path: str | Path) -> None:
        if not self.trained:
            raise ModelNotTrained("cannot save an untrained language model")
        payload = {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "order": self.order,
            "alpha": self.alpha,
            "vocab_size": len(self.vocab),
            "tokenization": self.tokenization.value,
            "vocab": sorted(self.vocab),
            "tables": [
                sorted(([list(gram), count] for gram, count in self.counts[n].items()))
                for n in range(1, self.order + 1)
            ],
        }
        Path(path).write_text(
            json.dumps(payload, ensure_ascii=False, separators=(",", ":")),
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "NgramLanguageModel":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != FORMAT_NAME:
            raise ValueError(f"not a {FORMAT_NAME} file: {path}")
        if payload.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported LM version {payload.get('version')}")
        model = cls(
            order=payload["order"],
            alpha=payload["alpha"],
            tokenization=Tokenization(payload["tokenization"]),
        )
        model.vocab = set(payload["vocab"])
        for n, table in enumerate(payload["tables"], start=1):
            counts = model.counts[n]
            contexts = model.contexts[n]
            for gram_tokens, count in table:
                gram = tuple(gram_tokens)
                counts[gram] = count
                ctx = gram[:-1]
                contexts[ctx] = contexts.get(ctx, 0) + count
        model.trained = True
        return model


def train_lm(
    corpus: Sequence[Sequence[str]],
    order: int = 2,
    alpha: float = 0.1,
    tokenization: Tokenization = Tokenization.CHAR,
) -> NgramLanguageModel:
    """Train an add-alpha n-gram model on pre-tokenized sequences."""
    return NgramLanguageModel(order=order, alpha=alpha, tokenization=tokenization).fit(corpus)


def builtin_perplexity(text: str, model: NgramLanguageModel) -> float:
    return model.perplexity(text)
