"""End-to-end orchestration: label -> train -> select -> rewrite -> rerank.

Every stage boundary is file-expressible as newline-delimited JSON, and the
CLI stages call exactly the functions used here, so a staged run and an
end-to-end run produce byte-identical outputs.  All floats survive the JSON
round trip exactly (shortest-repr doubles), which that guarantee relies on.

Per-game records written by the stages:

    labels     {"game_id", "pairs": [{"news_index", "commentary_index",
                "similarity"}], "skipped": [...]}
    selected   {"game_id", "selected_indices": [...], "scores": [...]}
    candidates {"game_id", "candidates": [{"text", "info",
                "commentary_index", "source_minute"}]}
    news       {"game_id", "news_text", "sentences": [{"text",
                "commentary_index"}], "trace": [...]}
"""

from __future__ import annotations

import hashlib
import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, IO, Iterable, Sequence

from . import kernels
from .corpus import GameRecord, load_games
from .errors import (
    CountsExceedCorpus,
    DataError,
    EmptyCandidates,
    InvalidSplit,
    MissingReference,
)
from .labeling import (
    AlignmentPair,
    AlignmentResult,
    WindowConfig,
    align_game,
    build_selector_labels,
    emit_rewrite_pairs,
    format_rewrite_source,
)
from .lm import NgramLanguageModel, train_lm
from .reranker import BudgetPolicy, MmrConfig, RankedNews, compute_budget, rerank_greedy
from .rewriter import RewriteRequest, RewrittenCandidate, remote_rewrite, template_rewrite
from .scoring import HashedNgramScorer, RougeVariant, SemanticScorer, SimilarityConfig, rouge
from .selector import (
    ImportanceModel,
    SelectionPolicy,
    TrainConfig,
    build_context_window,
    score_commentaries,
    select,
    train_selector,
)
from .service import RemoteSemanticScorer, ServiceClient
from .text import Tokenization, tokenize


@dataclass(frozen=True)
class SelectorConfig:
    threshold: float | None = 0.5
    top_k: int | None = None
    cap: int = 512
    train: TrainConfig = field(default_factory=TrainConfig)
    model_path: str | None = None

    def policy(self) -> SelectionPolicy:
        if self.top_k is not None:
            return SelectionPolicy(threshold=None, top_k=self.top_k)
        return SelectionPolicy(threshold=self.threshold if self.threshold is not None else 0.5)


@dataclass(frozen=True)
class RewriterConfig:
    backend: str = "template"  # "template" | "remote"
    endpoint: str | None = None
    fallback: bool = True

    def __post_init__(self):
        if self.backend not in ("template", "remote"):
            raise ValueError(f"unknown rewriter backend {self.backend!r}")
        if self.backend == "remote" and not self.endpoint:
            raise ValueError("remote rewriter backend needs an endpoint")


@dataclass(frozen=True)
class LmTrainingConfig:
    order: int = 2
    alpha: float = 0.1
    model_path: str | None = None


@dataclass(frozen=True)
class MmrSettings:
    lambda1: float = 0.6
    lambda2: float = 0.2
    lambda3: float = 0.2
    eta: float | None = None
    budget: int | None = None
    budget_policy: BudgetPolicy = BudgetPolicy.CORPUS_AVERAGE

    def resolve(self, corpus: Sequence[GameRecord]) -> MmrConfig:
        if self.budget_policy == BudgetPolicy.FIXED:
            if self.budget is None:
                raise ValueError("fixed budget policy needs an explicit budget")
            budget = self.budget
        else:
            budget = compute_budget(corpus)
        return MmrConfig(
            lambda1=self.lambda1,
            lambda2=self.lambda2,
            lambda3=self.lambda3,
            eta=self.eta,
            budget=budget,
            budget_policy=self.budget_policy,
        )


@dataclass(frozen=True)
class PipelineConfig:
    similarity: SimilarityConfig = field(default_factory=SimilarityConfig)
    window: WindowConfig = field(default_factory=WindowConfig)
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    rewriter: RewriterConfig = field(default_factory=RewriterConfig)
    mmr: MmrSettings = field(default_factory=MmrSettings)
    lm: LmTrainingConfig = field(default_factory=LmTrainingConfig)
    semantic_endpoint: str | None = None
    seed: int = 0
    workers: int = 1

    def to_dict(self) -> dict:
        return {
            "similarity": {
                "lambda": self.similarity.lambda_,
                "rouge_variant": self.similarity.rouge_variant.value,
                "tokenization": self.similarity.tokenization.value,
            },
            "window": {"span_minutes": self.window.span_minutes},
            "selector": {
                "threshold": self.selector.threshold,
                "top_k": self.selector.top_k,
                "cap": self.selector.cap,
                "learning_rate": self.selector.train.learning_rate,
                "epochs": self.selector.train.epochs,
                "l2": self.selector.train.l2,
                "positive_weight": self.selector.train.positive_weight,
                "model_path": self.selector.model_path,
            },
            "rewriter": {
                "backend": self.rewriter.backend,
                "endpoint": self.rewriter.endpoint,
                "fallback": self.rewriter.fallback,
            },
            "mmr": {
                "lambda1": self.mmr.lambda1,
                "lambda2": self.mmr.lambda2,
                "lambda3": self.mmr.lambda3,
                "eta": self.mmr.eta,
                "budget": self.mmr.budget,
                "budget_policy": self.mmr.budget_policy.value,
            },
            "lm": {
                "order": self.lm.order,
                "alpha": self.lm.alpha,
                "model_path": self.lm.model_path,
            },
            "semantic_endpoint": self.semantic_endpoint,
            "seed": self.seed,
            "workers": self.workers,
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @classmethod
    def from_dict(cls, obj: dict) -> "PipelineConfig":
        sim = obj.get("similarity", {})
        sel = obj.get("selector", {})
        rew = obj.get("rewriter", {})
        mmr = obj.get("mmr", {})
        lm = obj.get("lm", {})
        return cls(
            similarity=SimilarityConfig(
                lambda_=sim.get("lambda", 0.70),
                rouge_variant=RougeVariant(sim.get("rouge_variant", "RL")),
                tokenization=Tokenization(sim.get("tokenization", "char")),
            ),
            window=WindowConfig(span_minutes=obj.get("window", {}).get("span_minutes", 3)),
            selector=SelectorConfig(
                threshold=sel.get("threshold", 0.5 if sel.get("top_k") is None else None),
                top_k=sel.get("top_k"),
                cap=sel.get("cap", 512),
                train=TrainConfig(
                    learning_rate=sel.get("learning_rate", 5.0),
                    epochs=sel.get("epochs", 800),
                    seed=obj.get("seed", 0),
                    l2=sel.get("l2", 1e-4),
                    positive_weight=sel.get("positive_weight", 1.0),
                ),
                model_path=sel.get("model_path"),
            ),
            rewriter=RewriterConfig(
                backend=rew.get("backend", "template"),
                endpoint=rew.get("endpoint"),
                fallback=rew.get("fallback", True),
            ),
            mmr=MmrSettings(
                lambda1=mmr.get("lambda1", 0.6),
                lambda2=mmr.get("lambda2", 0.2),
                lambda3=mmr.get("lambda3", 0.2),
                eta=mmr.get("eta"),
                budget=mmr.get("budget"),
                budget_policy=BudgetPolicy(mmr.get("budget_policy", "CorpusAverage")),
            ),
            lm=LmTrainingConfig(
                order=lm.get("order", 2),
                alpha=lm.get("alpha", 0.1),
                model_path=lm.get("model_path"),
            ),
            semantic_endpoint=obj.get("semantic_endpoint"),
            seed=obj.get("seed", 0),
            workers=obj.get("workers", 1),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _dump(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def _map_games(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def make_semantic_scorer(config: PipelineConfig) -> SemanticScorer:
    if config.semantic_endpoint:
        return RemoteSemanticScorer(ServiceClient.connect(config.semantic_endpoint))
    return HashedNgramScorer()


# ---------------------------------------------------------------------------
# label stage


def label_corpus(
    corpus: Sequence[GameRecord], config: PipelineConfig, sem: SemanticScorer | None = None
) -> list[AlignmentResult]:
    scorer = sem if sem is not None else make_semantic_scorer(config)
    return _map_games(
        lambda game: align_game(game, config.window, config.similarity, scorer),
        corpus,
        config.workers,
    )


def write_alignments(results: Iterable[AlignmentResult], fh: IO[str]) -> None:
    for res in results:
        fh.write(
            _dump(
                {
                    "game_id": res.game_id,
                    "pairs": [
                        {
                            "news_index": p.news_index,
                            "commentary_index": p.commentary_index,
                            "similarity": p.similarity,
                            "minute_window": list(p.minute_window),
                        }
                        for p in res.pairs
                    ],
                    "skipped": list(res.skipped),
                }
            )
        )
        fh.write("\n")


def read_alignments(fh: IO[str]) -> list[AlignmentResult]:
    out = []
    for line in fh:
        if not line.strip():
            continue
        obj = json.loads(line)
        out.append(
            AlignmentResult(
                game_id=obj["game_id"],
                pairs=tuple(
                    AlignmentPair(
                        news_index=p["news_index"],
                        commentary_index=p["commentary_index"],
                        similarity=p["similarity"],
                        minute_window=tuple(p.get("minute_window", (0, 0))),
                    )
                    for p in obj["pairs"]
                ),
                skipped=tuple(obj["skipped"]),
            )
        )
    return out


def write_rewrite_pairs(
    corpus: Sequence[GameRecord], results: Sequence[AlignmentResult], fh: IO[str]
) -> None:
    by_id = {g.game_id: g for g in corpus}
    for res in results:
        game = by_id[res.game_id]
        for source, target in emit_rewrite_pairs(game, res.pairs):
            fh.write(_dump({"source": source, "target": target}))
            fh.write("\n")


# ---------------------------------------------------------------------------
# selector stage


def selector_examples(
    corpus: Sequence[GameRecord],
    results: Sequence[AlignmentResult],
    config: PipelineConfig,
):
    by_id = {r.game_id: r for r in results}
    examples = []
    for game in corpus:
        res = by_id.get(game.game_id)
        positives = (
            build_selector_labels(game, res.pairs).positive_indices() if res else set()
        )
        for j in range(game.m):
            window = build_context_window(game, j, cap=config.selector.cap)
            examples.append((window, j in positives))
    return examples


def train_selector_stage(
    corpus: Sequence[GameRecord],
    results: Sequence[AlignmentResult],
    config: PipelineConfig,
) -> ImportanceModel:
    examples = selector_examples(corpus, results, config)
    hyper = replace(config.selector.train, seed=config.seed)
    return train_selector(examples, hyper=hyper)


@dataclass(frozen=True)
class SelectedGame:
    game_id: str
    selected_indices: tuple[int, ...]
    scores: tuple[float, ...]


def select_stage(
    corpus: Sequence[GameRecord], model: ImportanceModel, config: PipelineConfig
) -> list[SelectedGame]:
    policy = config.selector.policy()

    def one(game: GameRecord) -> SelectedGame:
        scores = score_commentaries(game, model, cap=config.selector.cap)
        return SelectedGame(
            game_id=game.game_id,
            selected_indices=tuple(select(game, scores, policy)),
            scores=tuple(scores),
        )

    return _map_games(one, corpus, config.workers)


def write_selected(selected: Iterable[SelectedGame], fh: IO[str]) -> None:
    for s in selected:
        fh.write(
            _dump(
                {
                    "game_id": s.game_id,
                    "selected_indices": list(s.selected_indices),
                    "scores": list(s.scores),
                }
            )
        )
        fh.write("\n")


def read_selected(fh: IO[str]) -> list[SelectedGame]:
    out = []
    for line in fh:
        if not line.strip():
            continue
        obj = json.loads(line)
        out.append(
            SelectedGame(
                game_id=obj["game_id"],
                selected_indices=tuple(obj["selected_indices"]),
                scores=tuple(obj["scores"]),
            )
        )
    return out


# ---------------------------------------------------------------------------
# rewrite stage


@dataclass(frozen=True)
class GameCandidates:
    game_id: str
    candidates: tuple[RewrittenCandidate, ...]


def rewrite_stage(
    corpus: Sequence[GameRecord],
    selected: Sequence[SelectedGame],
    config: PipelineConfig,
) -> list[GameCandidates]:
    by_id = {g.game_id: g for g in corpus}
    out: list[GameCandidates] = []
    client: ServiceClient | None = None
    try:
        if config.rewriter.backend == "remote":
            client = ServiceClient.connect(config.rewriter.endpoint)
        for sel in selected:
            game = by_id[sel.game_id]
            requests = [
                RewriteRequest(
                    source=format_rewrite_source(game.commentary[j]),
                    game_id=game.game_id,
                    commentary_index=j,
                )
                for j in sel.selected_indices
            ]
            if client is not None:
                texts = remote_rewrite(requests, client, fallback=config.rewriter.fallback)
            else:
                texts = [template_rewrite(req) for req in requests]
            out.append(
                GameCandidates(
                    game_id=game.game_id,
                    candidates=tuple(
                        RewrittenCandidate(
                            text=text,
                            info=sel.scores[j],
                            commentary_index=j,
                            source_minute=game.commentary[j].minute,
                        )
                        for j, text in zip(sel.selected_indices, texts)
                    ),
                )
            )
    finally:
        if client is not None:
            client.close()
    return out


def write_candidates(games: Iterable[GameCandidates], fh: IO[str]) -> None:
    for g in games:
        fh.write(
            _dump(
                {
                    "game_id": g.game_id,
                    "candidates": [
                        {
                            "text": c.text,
                            "info": c.info,
                            "commentary_index": c.commentary_index,
                            "source_minute": c.source_minute,
                        }
                        for c in g.candidates
                    ],
                }
            )
        )
        fh.write("\n")


def read_candidates(fh: IO[str]) -> list[GameCandidates]:
    out = []
    for line in fh:
        if not line.strip():
            continue
        obj = json.loads(line)
        out.append(
            GameCandidates(
                game_id=obj["game_id"],
                candidates=tuple(
                    RewrittenCandidate(
                        text=c["text"],
                        info=c["info"],
                        commentary_index=c["commentary_index"],
                        source_minute=c.get("source_minute"),
                    )
                    for c in obj["candidates"]
                ),
            )
        )
    return out


# ---------------------------------------------------------------------------
# rerank stage


def build_fluency_model(
    corpus: Sequence[GameRecord], config: PipelineConfig
) -> NgramLanguageModel:
    if config.lm.model_path:
        return NgramLanguageModel.load(config.lm.model_path)
    sequences = [
        tokenize(s.text, Tokenization.CHAR) for g in corpus for s in g.news
    ]
    return train_lm(sequences, order=config.lm.order, alpha=config.lm.alpha)


@dataclass(frozen=True)
class NewsRecord:
    game_id: str
    news_text: str
    sentences: tuple[tuple[str, int], ...]  # (text, commentary_index)
    trace: tuple[dict, ...]


def _news_record(game_id: str, ranked: RankedNews | None) -> NewsRecord:
    if ranked is None:
        return NewsRecord(game_id=game_id, news_text="", sentences=(), trace=())
    return NewsRecord(
        game_id=game_id,
        news_text=ranked.text(),
        sentences=tuple((c.text, c.commentary_index) for c in ranked.sentences),
        trace=tuple(
            {
                "candidate_index": t.candidate_index,
                "commentary_index": t.commentary_index,
                "info": t.info,
                "flu": t.flu,
                "max_sim": t.max_sim,
                "mmr": t.mmr,
            }
            for t in ranked.trace
        ),
    )


def rerank_stage(
    corpus: Sequence[GameRecord],
    games: Sequence[GameCandidates],
    config: PipelineConfig,
    sem: SemanticScorer | None = None,
    fluency: NgramLanguageModel | None = None,
) -> list[NewsRecord]:
    scorer = sem if sem is not None else make_semantic_scorer(config)
    lm = fluency if fluency is not None else build_fluency_model(corpus, config)
    mmr_cfg = config.mmr.resolve(corpus)

    def one(g: GameCandidates) -> NewsRecord:
        if not g.candidates:
            return _news_record(g.game_id, None)
        ranked = rerank_greedy(g.candidates, mmr_cfg, scorer, lm)
        return _news_record(g.game_id, ranked)

    return _map_games(one, games, config.workers)


def write_news(records: Iterable[NewsRecord], fh: IO[str]) -> None:
    for rec in records:
        fh.write(
            _dump(
                {
                    "game_id": rec.game_id,
                    "news_text": rec.news_text,
                    "sentences": [
                        {"text": text, "commentary_index": idx}
                        for text, idx in rec.sentences
                    ],
                    "trace": list(rec.trace),
                }
            )
        )
        fh.write("\n")


def read_news(fh: IO[str]) -> list[NewsRecord]:
    out = []
    for line in fh:
        if not line.strip():
            continue
        obj = json.loads(line)
        out.append(
            NewsRecord(
                game_id=obj["game_id"],
                news_text=obj["news_text"],
                sentences=tuple(
                    (s["text"], s["commentary_index"]) for s in obj["sentences"]
                ),
                trace=tuple(obj["trace"]),
            )
        )
    return out


# ---------------------------------------------------------------------------
# end to end


@dataclass
class PipelineRun:
    records: list[NewsRecord]
    manifest: dict


def run_pipeline(
    corpus: Sequence[GameRecord] | str | Path, config: PipelineConfig
) -> PipelineRun:
    """select -> rewrite -> rerank for every game, plus a run manifest.

    A selector model is loaded from ``selector.model_path`` when given,
    otherwise trained on the corpus' own pseudo-labels.  A game that fails
    inside a stage is skipped and reported in the manifest, not fatal.
    """
    games = load_games(corpus) if isinstance(corpus, (str, Path)) else list(corpus)
    sem = make_semantic_scorer(config)

    alignments = label_corpus(games, config, sem=sem)
    if config.selector.model_path and Path(config.selector.model_path).exists():
        model = ImportanceModel.load(config.selector.model_path)
    else:
        model = train_selector_stage(games, alignments, config)
    selected = select_stage(games, model, config)
    candidates = rewrite_stage(games, selected, config)
    lm = build_fluency_model(games, config)
    mmr_cfg = config.mmr.resolve(games)

    records: list[NewsRecord] = []
    errors: list[dict] = []
    warnings: list[dict] = []
    for g in candidates:
        try:
            if not g.candidates:
                warnings.append({"game_id": g.game_id, "warning": "empty selection"})
                records.append(_news_record(g.game_id, None))
                continue
            records.append(_news_record(g.game_id, rerank_greedy(g.candidates, mmr_cfg, sem, lm)))
        except EmptyCandidates:
            warnings.append({"game_id": g.game_id, "warning": "empty selection"})
            records.append(_news_record(g.game_id, None))
        except DataError as exc:
            errors.append({"game_id": g.game_id, "error": str(exc)})

    manifest = {
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "kernel_backend": kernels.BACKEND,
        "budget": mmr_cfg.budget,
        "stages": {
            "label": {
                "games": len(games),
                "pairs": sum(len(a.pairs) for a in alignments),
                "skipped": sum(len(a.skipped) for a in alignments),
            },
            "select": {
                "selected": sum(len(s.selected_indices) for s in selected),
            },
            "rewrite": {
                "candidates": sum(len(g.candidates) for g in candidates),
            },
            "rerank": {
                "sentences": sum(len(r.sentences) for r in records),
            },
        },
        "games": [
            {
                "game_id": rec.game_id,
                "sentences": [
                    {"commentary_index": idx} for _, idx in rec.sentences
                ],
            }
            for rec in records
        ],
        "warnings": warnings,
        "errors": errors,
    }
    return PipelineRun(records=records, manifest=manifest)


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class GameEval:
    game_id: str
    rouge1: float
    rouge2: float
    rougeL: float


@dataclass(frozen=True)
class EvalReport:
    rouge1: float
    rouge2: float
    rougeL: float
    per_game: tuple[GameEval, ...]
    settings: dict

    def to_dict(self) -> dict:
        return {
            "settings": self.settings,
            "rouge1": self.rouge1,
            "rouge2": self.rouge2,
            "rougeL": self.rougeL,
            "per_game": [
                {
                    "game_id": g.game_id,
                    "rouge1": g.rouge1,
                    "rouge2": g.rouge2,
                    "rougeL": g.rougeL,
                }
                for g in self.per_game
            ],
        }


def evaluate(
    generated: dict[str, str],
    references: Sequence[GameRecord] | dict[str, str],
    tokenization: Tokenization = Tokenization.CHAR,
) -> EvalReport:
    """Article-level ROUGE-1/2/L F1 (x100) per game, averaged over games."""
    if isinstance(references, dict):
        refs = dict(references)
    else:
        refs = {g.game_id: g.news_text() for g in references}
    per_game: list[GameEval] = []
    for game_id in generated:
        if game_id not in refs:
            raise MissingReference(game_id)
    for game_id, text in generated.items():
        gen_tokens = tokenize(text, tokenization)
        ref_tokens = tokenize(refs[game_id], tokenization)
        per_game.append(
            GameEval(
                game_id=game_id,
                rouge1=100.0 * rouge(gen_tokens, ref_tokens, RougeVariant.R1).f1,
                rouge2=100.0 * rouge(gen_tokens, ref_tokens, RougeVariant.R2).f1,
                rougeL=100.0 * rouge(gen_tokens, ref_tokens, RougeVariant.RL).f1,
            )
        )
    n = len(per_game)
    settings = {
        "tokenization": tokenization.value,
        "measure": "f1",
        "level": "article",
        "scale": "x100",
    }
    if n == 0:
        return EvalReport(0.0, 0.0, 0.0, (), settings)
    return EvalReport(
        rouge1=sum(g.rouge1 for g in per_game) / n,
        rouge2=sum(g.rouge2 for g in per_game) / n,
        rougeL=sum(g.rougeL for g in per_game) / n,
        per_game=tuple(per_game),
        settings=settings,
    )


# ---------------------------------------------------------------------------
# corpus splitting


@dataclass(frozen=True)
class SplitManifest:
    train: tuple[str, ...]
    valid: tuple[str, ...]
    test: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "train": list(self.train),
            "valid": list(self.valid),
            "test": list(self.test),
        }


def split_corpus(
    corpus: Sequence[GameRecord] | Sequence[str],
    counts: tuple[int, int, int] | None = None,
    ratios: tuple[float, float, float] | None = None,
    seed: int = 0,
) -> SplitManifest:
    """Disjoint, exhaustive train/valid/test split, deterministic per seed."""
    ids = [g.game_id if isinstance(g, GameRecord) else str(g) for g in corpus]
    n = len(ids)
    if counts is None:
        if ratios is None:
            raise ValueError("give counts or ratios")
        if abs(sum(ratios) - 1.0) > 1e-9:
            raise InvalidSplit(f"ratios must sum to 1, got {sum(ratios)}")
        n_valid = int(n * ratios[1])
        n_test = int(n * ratios[2])
        counts = (n - n_valid - n_test, n_valid, n_test)
    if any(c < 0 for c in counts):
        raise InvalidSplit(f"negative split count in {counts}")
    total = sum(counts)
    if total > n:
        raise CountsExceedCorpus(f"split counts {counts} exceed corpus size {n}")
    if total < n:
        raise InvalidSplit(
            f"split counts {counts} sum to {total}, corpus has {n} games"
        )
    shuffled = list(ids)
    random.Random(seed).shuffle(shuffled)
    train = tuple(shuffled[: counts[0]])
    valid = tuple(shuffled[counts[0] : counts[0] + counts[1]])
    test = tuple(shuffled[counts[0] + counts[1] :])
    return SplitManifest(train=train, valid=valid, test=test)
