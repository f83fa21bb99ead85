"""Pseudo-labeling: map each news sentence to its best commentary event.

News sentences usually open with a minute mention ("第23分钟…", "In the
75th minute…").  For a sentence with minute h we score every commentary
event whose minute lies in the closed window [h, h + span] and keep the
single argmax of the combined similarity.  Sentences without an extractable
minute, or with an empty window, are skipped and reported rather than
matched globally.

The resulting pairs supply positive labels for the selector and
source/target pairs for the rewriter.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .corpus import CommentaryEvent, GameRecord
from .errors import IndexOutOfRange
from .scoring import SemanticScorer, SimilarityConfig, combined_similarity_batch
from .text import cjk_numeral_to_int


@dataclass(frozen=True)
class WindowConfig:
    span_minutes: int = 3

    def __post_init__(self):
        if self.span_minutes < 0:
            raise ValueError(f"span_minutes must be >= 0, got {self.span_minutes}")


@dataclass(frozen=True)
class AlignmentPair:
    news_index: int
    commentary_index: int
    similarity: float
    minute_window: tuple[int, int]


@dataclass(frozen=True)
class AlignmentResult:
    game_id: str
    pairs: tuple[AlignmentPair, ...]
    skipped: tuple[int, ...]

    def duplication_rate(self) -> float:
        """Share of pairs whose commentary index was also chosen by another pair."""
        if not self.pairs:
            return 0.0
        indices = [p.commentary_index for p in self.pairs]
        dupes = len(indices) - len(set(indices))
        return dupes / len(indices)


@dataclass(frozen=True)
class SelectorLabelSet:
    game_id: str
    labels: tuple[tuple[int, bool], ...]

    def positive_indices(self) -> set[int]:
        return {idx for idx, positive in self.labels if positive}


_ARABIC_MINUTE = re.compile(r"第\s*(\d{1,3})\s*分钟")
_CJK_MINUTE = re.compile(r"第\s*([零〇一二两三四五六七八九十百]+)\s*分钟")
_EN_MINUTE = re.compile(
    r"\b(?:in|at)\s+the\s+(\d{1,3})\s*(?:st|nd|rd|th)?\s+minutes?\b", re.IGNORECASE
)
_EN_ORDINAL_MINUTE = re.compile(r"\b(\d{1,3})\s*(?:st|nd|rd|th)\s+minutes?\b", re.IGNORECASE)


def extract_minute(text: str) -> int | None:
    """Earliest minute mention in the text, or None when nothing matches."""
    hits: list[tuple[int, int]] = []
    for m in _ARABIC_MINUTE.finditer(text):
        hits.append((m.start(), int(m.group(1))))
    for m in _CJK_MINUTE.finditer(text):
        value = cjk_numeral_to_int(m.group(1))
        if value is not None:
            hits.append((m.start(), value))
    for m in _EN_MINUTE.finditer(text):
        hits.append((m.start(), int(m.group(1))))
    for m in _EN_ORDINAL_MINUTE.finditer(text):
        hits.append((m.start(), int(m.group(1))))
    if not hits:
        return None
    hits.sort()
    return hits[0][1]


def candidate_window(game: GameRecord, h: int, cfg: WindowConfig) -> list[int]:
    """Commentary indices whose minute lies in [h, h + span], original order."""
    if h < 0:
        raise ValueError(f"window start must be >= 0, got {h}")
    low, high = h, h + cfg.span_minutes
    return [
        j
        for j, event in enumerate(game.commentary)
        if event.minute is not None and low <= event.minute <= high
    ]


def align_game(
    game: GameRecord,
    cfg: WindowConfig,
    simcfg: SimilarityConfig,
    sem: SemanticScorer,
    min_similarity: float | None = None,
) -> AlignmentResult:
    """One pair per alignable news sentence, at argmax combined similarity.

    Ties break to the earlier commentary minute, then the lower index.
    ``min_similarity`` optionally drops argmax pairs below a floor (off by
    default); dropped sentences land in the skipped list.
    """
    pairs: list[AlignmentPair] = []
    skipped: list[int] = []
    for i, sentence in enumerate(game.news):
        h = sentence.minute if sentence.minute is not None else extract_minute(sentence.text)
        if h is None:
            skipped.append(i)
            continue
        window = candidate_window(game, h, cfg)
        if not window:
            skipped.append(i)
            continue
        sims = combined_similarity_batch(
            sentence.text, [game.commentary[j].text for j in window], simcfg, sem
        )
        best_j = window[0]
        best_sim = sims[0]
        for j, sim in zip(window[1:], sims[1:]):
            if sim > best_sim:
                best_j, best_sim = j, sim
            elif sim == best_sim:
                best_minute = game.commentary[best_j].minute
                cand_minute = game.commentary[j].minute
                if cand_minute is not None and best_minute is not None:
                    if cand_minute < best_minute or (
                        cand_minute == best_minute and j < best_j
                    ):
                        best_j = j
        if min_similarity is not None and best_sim < min_similarity:
            skipped.append(i)
            continue
        pairs.append(
            AlignmentPair(
                news_index=i,
                commentary_index=best_j,
                similarity=best_sim,
                minute_window=(h, h + cfg.span_minutes),
            )
        )
    return AlignmentResult(game_id=game.game_id, pairs=tuple(pairs), skipped=tuple(skipped))


def build_selector_labels(
    game: GameRecord, pairs: list[AlignmentPair] | tuple[AlignmentPair, ...]
) -> SelectorLabelSet:
    """Positive for every mapped commentary index, negative otherwise."""
    positives: set[int] = set()
    for pair in pairs:
        if not 0 <= pair.commentary_index < game.m:
            raise IndexOutOfRange(
                f"commentary index {pair.commentary_index} outside 0..{game.m - 1}"
            )
        if not 0 <= pair.news_index < game.n:
            raise IndexOutOfRange(
                f"news index {pair.news_index} outside 0..{game.n - 1}"
            )
        positives.add(pair.commentary_index)
    return SelectorLabelSet(
        game_id=game.game_id,
        labels=tuple((j, j in positives) for j in range(game.m)),
    )


def format_rewrite_source(event: CommentaryEvent) -> str:
    """Minute-prefixed commentary text; plain text when the minute is absent."""
    if event.minute is None:
        return event.text
    return f"{event.minute}' {event.text}"


def emit_rewrite_pairs(
    game: GameRecord, pairs: list[AlignmentPair] | tuple[AlignmentPair, ...]
) -> list[tuple[str, str]]:
    """(source, target) training pairs for the rewriter, ordered by news index."""
    out: list[tuple[str, str]] = []
    for pair in sorted(pairs, key=lambda p: p.news_index):
        if not 0 <= pair.commentary_index < game.m:
            raise IndexOutOfRange(
                f"commentary index {pair.commentary_index} outside 0..{game.m - 1}"
            )
        if not 0 <= pair.news_index < game.n:
            raise IndexOutOfRange(
                f"news index {pair.news_index} outside 0..{game.n - 1}"
            )
        event = game.commentary[pair.commentary_index]
        out.append((format_rewrite_source(event), game.news[pair.news_index].text))
    return out
