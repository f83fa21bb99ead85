"""Pressbox: turn timestamped live sports commentary into news articles.

Stages: pseudo-label alignments between news sentences and commentary
events, train a context-aware importance selector, rewrite selected
commentaries to news style, then assemble a budgeted article with
fluency-aware MMR reranking.  Everything runs offline and deterministically
with the built-in scorers; model-backed scorers plug in over a line
protocol.
"""

from .corpus import (
    CommentaryEvent,
    CorpusStats,
    GameRecord,
    NewsSentence,
    NoiseClass,
    NoiseReport,
    clean_news,
    compute_stats,
    detect_noise,
    load_games,
    parse_games,
    serialize_game,
)
from .labeling import AlignmentPair, AlignmentResult, WindowConfig, align_game, extract_minute
from .lm import NgramLanguageModel, train_lm
from .reranker import MmrConfig, RankedNews, compute_budget, flu, rerank_greedy
from .rewriter import RewriteRequest, RewrittenCandidate, remote_rewrite, template_rewrite
from .scoring import (
    HashedNgramScorer,
    RougeScore,
    RougeVariant,
    SimilarityConfig,
    combined_similarity,
    rouge_l,
    rouge_n,
)
from .selector import (
    ContextWindow,
    ImportanceModel,
    SelectionPolicy,
    build_context_window,
    score_commentaries,
    select,
    train_selector,
)
from .pipeline import EvalReport, PipelineConfig, evaluate, run_pipeline, split_corpus

__version__ = "0.1.0"
