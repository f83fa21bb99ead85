"""Context-aware importance model for commentary events.

A target event is embedded in a token window capped at 512 tokens: whole
neighbor sentences are added alternately before and after the target (ties
favor the preceding side) until neither adjacent sentence fits, so the
target sits mid-window.  Features are hashed token n-grams pooled over the
target span and over the surrounding context, plus two positional values;
a logistic classifier turns them into an importance score in (0, 1).

Training is deterministic full-batch gradient descent on L2-regularized
cross-entropy, so a fixed seed reproduces weights bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import GameRecord
from .errors import DegenerateLabels, ModelNotTrained
from .scoring import _fnv1a64
from .text import char_tokens

TOKEN_CAP = 512
START_TOKEN = "[START]"
SEP_TOKEN = "[SEP]"
_MARKERS = frozenset((START_TOKEN, SEP_TOKEN))


@dataclass(frozen=True)
class ContextWindow:
    tokens: tuple[str, ...]
    target_span: tuple[int, int]
    truncated: bool = False

    def target_tokens(self) -> tuple[str, ...]:
        start, end = self.target_span
        return self.tokens[start:end]

    def context_tokens(self) -> tuple[str, ...]:
        start, end = self.target_span
        rest = self.tokens[:start] + self.tokens[end:]
        return tuple(t for t in rest if t not in _MARKERS)

    def as_text(self) -> str:
        return " ".join(self.tokens)


def build_context_window(
    game: GameRecord,
    target_index: int,
    cap: int = TOKEN_CAP,
    tokenizer: Callable[[str], list[str]] = char_tokens,
) -> ContextWindow:
    """Target-centered window of whole sentences within the token cap.

    Layout: [START] sent [SEP] sent [SEP] ... ; each added sentence costs its
    tokens plus one separator.  A target that alone exceeds the cap is
    truncated and the window flagged.
    """
    if not 0 <= target_index < game.m:
        raise IndexError(f"target index {target_index} outside 0..{game.m - 1}")
    sentences = [tokenizer(e.text) for e in game.commentary]
    target = sentences[target_index]

    base_cost = 2 + len(target)  # [START] + target + [SEP]
    if base_cost > cap:
        keep = max(cap - 2, 1)
        tokens = (START_TOKEN, *target[:keep], SEP_TOKEN)
        return ContextWindow(tokens=tokens, target_span=(1, 1 + keep), truncated=True)

    lo = target_index  # leftmost included sentence
    hi = target_index  # rightmost included sentence
    used = base_cost
    blocked_left = lo == 0
    blocked_right = hi == game.m - 1
    prefer_left = True
    while not (blocked_left and blocked_right):
        side_left = prefer_left if not blocked_left else False
        if blocked_right:
            side_left = not blocked_left
        if side_left:
            cost = len(sentences[lo - 1]) + 1
            if used + cost <= cap:
                lo -= 1
                used += cost
                blocked_left = lo == 0
            else:
                blocked_left = True
            prefer_left = False
        else:
            cost = len(sentences[hi + 1]) + 1
            if used + cost <= cap:
                hi += 1
                used += cost
                blocked_right = hi == game.m - 1
            else:
                blocked_right = True
            prefer_left = True

    tokens: list[str] = [START_TOKEN]
    span = (0, 0)
    for idx in range(lo, hi + 1):
        if idx == target_index:
            span = (len(tokens), len(tokens) + len(sentences[idx]))
        tokens.extend(sentences[idx])
        tokens.append(SEP_TOKEN)
    return ContextWindow(tokens=tuple(tokens), target_span=span)


@dataclass(frozen=True)
class FeatureSpec:
    ngram_orders: tuple[int, ...] = (1, 2, 3)
    target_dims: int = 1024
    context_dims: int = 1024

    @property
    def total_dims(self) -> int:
        return self.target_dims + self.context_dims + 2


def _pooled_ngram_block(tokens: Sequence[str], orders: Sequence[int], dims: int) -> np.ndarray:
    block = np.zeros(dims, dtype=np.float64)
    total = 0
    for n in orders:
        for i in range(len(tokens) - n + 1):
            gram = "\x1f".join(tokens[i : i + n])
            block[_fnv1a64(gram.encode("utf-8")) % dims] += 1.0
            total += 1
    if total:
        block /= total
    return block


def featurize_window(window: ContextWindow, spec: FeatureSpec) -> np.ndarray:
    target = window.target_tokens()
    context = window.context_tokens()
    start, end = window.target_span
    total = len(window.tokens)
    positional = np.array(
        [start / total if total else 0.0, (end - start) / total if total else 0.0]
    )
    return np.concatenate(
        [
            _pooled_ngram_block(target, spec.ngram_orders, spec.target_dims),
            _pooled_ngram_block(context, spec.ngram_orders, spec.context_dims),
            positional,
        ]
    )


@dataclass
class ImportanceModel:
    spec: FeatureSpec = field(default_factory=FeatureSpec)
    weights: np.ndarray | None = None
    bias: float = 0.0

    def score_features(self, x: np.ndarray) -> float:
        if self.weights is None:
            raise ModelNotTrained("importance model has no weights")
        return float(_sigmoid(x @ self.weights + self.bias))

    def score_window(self, window: ContextWindow) -> float:
        return self.score_features(featurize_window(window, self.spec))

    def save(self, path: str | Path) -> None:
        if self.weights is None:
            raise ModelNotTrained("cannot save an untrained importance model")
        payload = {
            "format": "pressbox-selector",
            "version": 1,
            "spec": {
                "ngram_orders": list(self.spec.ngram_orders),
                "target_dims": self.spec.target_dims,
                "context_dims": self.spec.context_dims,
            },
            "bias": self.bias,
            "weights": self.weights.tolist(),
        }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ImportanceModel":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != "pressbox-selector":
            raise ValueError(f"not a pressbox-selector file: {path}")
        spec = FeatureSpec(
            ngram_orders=tuple(payload["spec"]["ngram_orders"]),
            target_dims=payload["spec"]["target_dims"],
            context_dims=payload["spec"]["context_dims"],
        )
        return cls(
            spec=spec,
            weights=np.asarray(payload["weights"], dtype=np.float64),
            bias=payload["bias"],
        )


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 5.0
    epochs: int = 800
    seed: int = 0
    l2: float = 1e-4
    positive_weight: float = 1.0


def train_selector(
    examples: Sequence[tuple[ContextWindow, bool]],
    hyper: TrainConfig = TrainConfig(),
    spec: FeatureSpec = FeatureSpec(),
) -> ImportanceModel:
    """Fit the logistic importance model; returns loss history on the model.

    Requires at least one positive and one negative example.  Zero epochs
    return the (near-zero) seeded initialization untouched.
    """
    labels = np.array([1.0 if y else 0.0 for _, y in examples])
    if labels.size == 0 or labels.min() == labels.max():
        raise DegenerateLabels("training needs both positive and negative examples")

    x = np.stack([featurize_window(w, spec) for w, _ in examples])
    n = x.shape[0]
    sample_weight = np.where(labels == 1.0, hyper.positive_weight, 1.0)
    sample_weight = sample_weight / sample_weight.sum() * n

    rng = np.random.default_rng(hyper.seed)
    weights = rng.normal(0.0, 0.01, x.shape[1])
    bias = 0.0
    history: list[float] = []
    for _ in range(hyper.epochs):
        z = x @ weights + bias
        p = _sigmoid(z)
        # weighted cross-entropy with the usual epsilon guard
        eps = 1e-12
        loss = float(
            -np.mean(sample_weight * (labels * np.log(p + eps) + (1 - labels) * np.log(1 - p + eps)))
            + 0.5 * hyper.l2 * float(weights @ weights)
        )
        history.append(loss)
        grad_z = sample_weight * (p - labels) / n
        weights = weights - hyper.learning_rate * (x.T @ grad_z + hyper.l2 * weights)
        bias = bias - hyper.learning_rate * float(grad_z.sum())

    model = ImportanceModel(spec=spec, weights=weights, bias=bias)
    model.loss_history = history
    return model


def score_commentaries(
    game: GameRecord,
    model: ImportanceModel,
    cap: int = TOKEN_CAP,
    tokenizer: Callable[[str], list[str]] = char_tokens,
) -> list[float]:
    """One importance score per commentary event, in order."""
    if model.weights is None:
        raise ModelNotTrained("train or load the importance model first")
    return [
        model.score_window(build_context_window(game, j, cap=cap, tokenizer=tokenizer))
        for j in range(game.m)
    ]


@dataclass(frozen=True)
class SelectionPolicy:
    threshold: float | None = 0.5
    top_k: int | None = None

    def __post_init__(self):
        if (self.threshold is None) == (self.top_k is None):
            raise ValueError("set exactly one of threshold / top_k")


def select(game: GameRecord, scores: Sequence[float], policy: SelectionPolicy) -> list[int]:
    """Indices passing the policy, in original commentary order."""
    if len(scores) != game.m:
        raise ValueError(f"expected {game.m} scores, got {len(scores)}")
    if policy.threshold is not None:
        return [j for j, s in enumerate(scores) if s >= policy.threshold]
    ranked = sorted(range(game.m), key=lambda j: (-scores[j], j))[: policy.top_k]
    return sorted(ranked)
