"""Fluency-aware MMR reranking of rewritten sentences under a length budget.

Each greedy round picks the remaining candidate maximizing

    lambda1 * info + lambda2 * flu - lambda3 * max_sim_to_selected

where info is the selector score carried by the candidate, flu maps
perplexity through ``clamp(1 - ppl / eta, 0, 1)``, and the redundancy term
is the maximum semantic similarity to anything already selected (0 for the
first pick).  Selection stops after the pick that pushes the total character
count past the budget; that pick is kept.  The final article is ordered by
source commentary index so it reads in game chronology; the trace records
the actual selection order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .corpus import GameRecord
from .errors import EmptyCandidates, NoReferenceNews
from .lm import FluencyScorer
from .rewriter import RewrittenCandidate
from .scoring import SemanticScorer


class BudgetPolicy(str, Enum):
    CORPUS_AVERAGE = "CorpusAverage"
    FIXED = "Fixed"


@dataclass(frozen=True)
class MmrConfig:
    lambda1: float = 0.6
    lambda2: float = 0.2
    lambda3: float = 0.2
    eta: float | None = None  # None: 95th percentile of candidate perplexities
    budget: int = 600
    budget_policy: BudgetPolicy = BudgetPolicy.CORPUS_AVERAGE

    def __post_init__(self):
        if min(self.lambda1, self.lambda2, self.lambda3) < 0:
            raise ValueError("MMR weights must be >= 0")
        total = self.lambda1 + self.lambda2 + self.lambda3
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"MMR weights must sum to 1, got {total}")
        if self.eta is not None and not self.eta > 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if self.budget <= 0:
            raise ValueError(f"budget must be > 0, got {self.budget}")


@dataclass(frozen=True)
class TraceStep:
    candidate_index: int
    commentary_index: int
    info: float
    flu: float
    max_sim: float
    mmr: float


@dataclass(frozen=True)
class RankedNews:
    sentences: tuple[RewrittenCandidate, ...]
    total_chars: int
    trace: tuple[TraceStep, ...]
    eta: float
    budget: int

    def text(self) -> str:
        return "".join(c.text for c in self.sentences)


def flu(text: str, scorer: FluencyScorer, eta: float) -> float:
    """clamp(1 - perplexity / eta, 0, 1)."""
    return flu_from_perplexity(scorer.perplexity(text), eta)


def flu_from_perplexity(perplexity: float, eta: float) -> float:
    if eta <= 0:
        raise ValueError(f"eta must be > 0, got {eta}")
    return min(max(1.0 - perplexity / eta, 0.0), 1.0)


def mmr_value(info: float, flu_value: float, max_sim: float, cfg: MmrConfig) -> float:
    return cfg.lambda1 * info + cfg.lambda2 * flu_value - cfg.lambda3 * max_sim


def mmr_score(
    candidate: RewrittenCandidate,
    selected: Sequence[RewrittenCandidate],
    cfg: MmrConfig,
    sem: SemanticScorer,
    fluency: FluencyScorer,
    eta: float | None = None,
) -> float:
    """Standalone MMR value of one candidate against a selected set."""
    resolved_eta = eta if eta is not None else cfg.eta
    if resolved_eta is None:
        raise ValueError("eta must be given (fixed in config or resolved adaptively)")
    flu_value = (
        flu_from_perplexity(candidate.fluency, resolved_eta)
        if candidate.fluency is not None
        else flu(candidate.text, fluency, resolved_eta)
    )
    max_sim = 0.0
    if selected:
        sims = sem.score_pairs([(candidate.text, s.text) for s in selected])
        max_sim = max(sims)
    return mmr_value(candidate.info, flu_value, max_sim, cfg)


def resolve_eta(perplexities: Sequence[float], cfg: MmrConfig) -> float:
    """Fixed eta from config, else the 95th percentile (linear interpolation)."""
    if cfg.eta is not None:
        return cfg.eta
    return float(np.percentile(np.asarray(perplexities, dtype=np.float64), 95))


def rerank_greedy(
    candidates: Sequence[RewrittenCandidate],
    cfg: MmrConfig,
    sem: SemanticScorer,
    fluency: FluencyScorer,
) -> RankedNews:
    """Greedy budgeted MMR selection over rewritten candidates.

    Ties break to the higher info score, then the lower commentary index.
    Candidate perplexities are computed once; pairwise similarities are
    cached (the scorers are deterministic, so cached and fresh agree).
    """
    if not candidates:
        raise EmptyCandidates("rerank needs at least one candidate")

    perplexities = [
        c.fluency if c.fluency is not None else fluency.perplexity(c.text)
        for c in candidates
    ]
    eta = resolve_eta(perplexities, cfg)
    flu_values = [flu_from_perplexity(p, eta) for p in perplexities]
    scored = [replace(c, fluency=p) for c, p in zip(candidates, perplexities)]

    remaining = list(range(len(scored)))
    max_sim = [0.0] * len(scored)
    chosen: list[int] = []
    trace: list[TraceStep] = []
    total_chars = 0

    while remaining:
        best = None
        best_key = None
        for idx in remaining:
            value = mmr_value(scored[idx].info, flu_values[idx], max_sim[idx], cfg)
            key = (value, scored[idx].info, -scored[idx].commentary_index)
            if best_key is None or key > best_key:
                best, best_key = idx, key
        assert best is not None
        value = mmr_value(scored[best].info, flu_values[best], max_sim[best], cfg)
        chosen.append(best)
        remaining.remove(best)
        total_chars += len(scored[best].text)
        trace.append(
            TraceStep(
                candidate_index=best,
                commentary_index=scored[best].commentary_index,
                info=scored[best].info,
                flu=flu_values[best],
                max_sim=max_sim[best],
                mmr=value,
            )
        )
        if total_chars > cfg.budget:
            break
        if remaining:
            sims = sem.score_pairs(
                [(scored[idx].text, scored[best].text) for idx in remaining]
            )
            for idx, sim in zip(remaining, sims):
                if sim > max_sim[idx]:
                    max_sim[idx] = sim

    ordered = tuple(
        scored[idx]
        for idx in sorted(chosen, key=lambda i: (scored[i].commentary_index, i))
    )
    return RankedNews(
        sentences=ordered,
        total_chars=total_chars,
        trace=tuple(trace),
        eta=eta,
        budget=cfg.budget,
    )


def compute_budget(corpus: Sequence[GameRecord]) -> int:
    """Rounded mean character length of reference news articles.

    Games without news (prediction-mode inputs) are left out of the mean.
    """
    lengths = [
        sum(len(s.text) for s in game.news) for game in corpus if game.n > 0
    ]
    if not lengths:
        raise NoReferenceNews("no game in the corpus carries reference news")
    return int(math.floor(sum(lengths) / len(lengths) + 0.5))
