"""Corpus data model, newline-delimited JSON I/O, statistics and noise rules.

File format: UTF-8, one game per line.  Each line is a JSON object

    {"game_id": str,
     "commentary": [{"minute": int|null, "score": str, "text": str}, ...],
     "news":       [{"text": str, "minute": int|null}, ...]}

plus an optional ``"discardable": true`` marker set by the cleaner when a
game's news is emptied entirely.  Records are immutable after parsing and
serialize back byte-identically modulo JSON key order, which we fix.

Noise detection approximates a manual cleaning pass with auditable,
configuration-driven rules for the three noise classes found in scraped
sports news: mentions of other games, pre-match history blurbs, and
advertisement/hyperlink debris.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, IO, Iterable, Sequence

from .errors import EmptyCorpus, MalformedRecord, MismatchedReport
from .text import word_tokens

DEFAULT_MINUTE_CAP = 200


@dataclass(frozen=True)
class CommentaryEvent:
    """One live-commentary record: minute, score string and text."""

    text: str
    minute: int | None = None
    score: str = ""

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("commentary text must be non-empty")
        if self.minute is not None and self.minute < 0:
            raise ValueError(f"commentary minute must be >= 0, got {self.minute}")


@dataclass(frozen=True)
class NewsSentence:
    text: str
    minute: int | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("news text must be non-empty")
        if self.minute is not None and self.minute < 0:
            raise ValueError(f"news minute must be >= 0, got {self.minute}")


@dataclass(frozen=True)
class GameRecord:
    game_id: str
    commentary: tuple[CommentaryEvent, ...]
    news: tuple[NewsSentence, ...]
    discardable: bool = False

    def __post_init__(self):
        object.__setattr__(self, "commentary", tuple(self.commentary))
        object.__setattr__(self, "news", tuple(self.news))
        if len(self.commentary) < 1:
            raise ValueError("a game needs at least one commentary event")
        minutes = [e.minute for e in self.commentary if e.minute is not None]
        if any(a > b for a, b in zip(minutes, minutes[1:])):
            raise ValueError("commentary minutes must be non-decreasing")

    @property
    def m(self) -> int:
        return len(self.commentary)

    @property
    def n(self) -> int:
        return len(self.news)

    def news_text(self) -> str:
        return "".join(s.text for s in self.news)


class NoiseClass(str, Enum):
    OTHER_GAME = "OtherGame"
    HISTORY = "History"
    AD_OR_HYPERLINK = "AdOrHyperlink"


@dataclass(frozen=True)
class NoiseFlag:
    news_index: int
    noise_class: NoiseClass
    rule_id: str


@dataclass(frozen=True)
class NoiseReport:
    game_id: str
    flags: tuple[NoiseFlag, ...]

    def indices(self, noise_class: NoiseClass | None = None) -> set[int]:
        return {
            f.news_index
            for f in self.flags
            if noise_class is None or f.noise_class == noise_class
        }


@dataclass(frozen=True)
class CorpusStats:
    avg_chars_commentary: float
    avg_chars_news: float
    avg_words_commentary: float
    avg_words_news: float
    avg_sents_commentary: float
    avg_sents_news: float

    FIELDS = (
        "avg_chars_commentary",
        "avg_chars_news",
        "avg_words_commentary",
        "avg_words_news",
        "avg_sents_commentary",
        "avg_sents_news",
    )


# ---------------------------------------------------------------------------
# parsing / serialization


def _parse_event(obj: dict) -> CommentaryEvent:
    if not isinstance(obj, dict):
        raise ValueError("commentary item must be an object")
    if "text" not in obj:
        raise ValueError("commentary item missing 'text'")
    minute = obj.get("minute")
    if minute is not None and not isinstance(minute, int):
        raise ValueError("commentary 'minute' must be int or null")
    return CommentaryEvent(text=obj["text"], minute=minute, score=obj.get("score", ""))


def _parse_sentence(obj: dict) -> NewsSentence:
    if not isinstance(obj, dict):
        raise ValueError("news item must be an object")
    if "text" not in obj:
        raise ValueError("news item missing 'text'")
    minute = obj.get("minute")
    if minute is not None and not isinstance(minute, int):
        raise ValueError("news 'minute' must be int or null")
    return NewsSentence(text=obj["text"], minute=minute)


def parse_game(line: str, minute_cap: int = DEFAULT_MINUTE_CAP) -> GameRecord:
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("record must be a JSON object")
    for key in ("game_id", "commentary", "news"):
        if key not in obj:
            raise ValueError(f"record missing '{key}'")
    game = GameRecord(
        game_id=str(obj["game_id"]),
        commentary=tuple(_parse_event(e) for e in obj["commentary"]),
        news=tuple(_parse_sentence(s) for s in obj["news"]),
        discardable=bool(obj.get("discardable", False)),
    )
    for event in game.commentary:
        if event.minute is not None and event.minute > minute_cap:
            raise ValueError(
                f"commentary minute {event.minute} exceeds cap {minute_cap}"
            )
    return game


def parse_games(
    stream: IO[str] | IO[bytes] | Iterable[str],
    minute_cap: int = DEFAULT_MINUTE_CAP,
) -> list[GameRecord]:
    """Parse newline-delimited game records; blank lines are skipped.

    Raises MalformedRecord with a 1-based line number on the first bad line
    and EmptyCorpus when the stream holds no records at all.
    """
    games: list[GameRecord] = []
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        if not raw.strip():
            continue
        try:
            games.append(parse_game(raw, minute_cap=minute_cap))
        except (json.JSONDecodeError, ValueError, TypeError) as exc:
            raise MalformedRecord(lineno, str(exc)) from exc
    if not games:
        raise EmptyCorpus("no game records in input")
    return games


def load_games(path, minute_cap: int = DEFAULT_MINUTE_CAP) -> list[GameRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_games(fh, minute_cap=minute_cap)


def serialize_game(game: GameRecord) -> str:
    obj = {
        "game_id": game.game_id,
        "commentary": [
            {"minute": e.minute, "score": e.score, "text": e.text}
            for e in game.commentary
        ],
        "news": [{"text": s.text, "minute": s.minute} for s in game.news],
    }
    if game.discardable:
        obj["discardable"] = True
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def write_games(games: Iterable[GameRecord], fh: IO[str]) -> None:
    for game in games:
        fh.write(serialize_game(game))
        fh.write("\n")


def save_games(games: Iterable[GameRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_games(games, fh)


# ---------------------------------------------------------------------------
# statistics


def compute_stats(
    corpus: Sequence[GameRecord],
    word_tokenizer: Callable[[str], list[str]] = word_tokens,
) -> CorpusStats:
    """Per-game character/word/sentence totals averaged over the corpus.

    Characters are raw string lengths; words come from the injectable
    segmentation policy (CJK-aware by default); sentences are record counts.
    """
    if not corpus:
        raise EmptyCorpus("cannot compute statistics of an empty corpus")
    n = len(corpus)
    sums = [0.0] * 6
    for game in corpus:
        sums[0] += sum(len(e.text) for e in game.commentary)
        sums[1] += sum(len(s.text) for s in game.news)
        sums[2] += sum(len(word_tokenizer(e.text)) for e in game.commentary)
        sums[3] += sum(len(word_tokenizer(s.text)) for s in game.news)
        sums[4] += game.m
        sums[5] += game.n
    return CorpusStats(*(total / n for total in sums))


# ---------------------------------------------------------------------------
# noise rules


@dataclass(frozen=True)
class NoiseRules:
    """Pattern configuration for the three noise classes.

    ``ad_patterns`` and ``history_cues`` are (rule_id, regex) pairs matched
    against individual news sentences.  ``start_keywords`` mark the first
    in-game sentence: everything before the earliest match is flagged as
    history.  ``team_aliases`` feed the other-game rule: a sentence that
    mentions at least ``other_game_min_aliases`` aliases absent from the
    game's own commentary is treated as describing a different match.
    """

    ad_patterns: tuple[tuple[str, str], ...]
    history_cues: tuple[tuple[str, str], ...]
    start_keywords: tuple[str, ...]
    team_aliases: tuple[str, ...] = ()
    other_game_min_aliases: int = 2

    def compiled_ads(self) -> list[tuple[str, re.Pattern]]:
        return [(rid, re.compile(pat, re.IGNORECASE)) for rid, pat in self.ad_patterns]

    def compiled_history(self) -> list[tuple[str, re.Pattern]]:
        return [(rid, re.compile(pat, re.IGNORECASE)) for rid, pat in self.history_cues]

    def compiled_starts(self) -> list[re.Pattern]:
        return [re.compile(pat, re.IGNORECASE) for pat in self.start_keywords]

    def to_json(self) -> str:
        return json.dumps(
            {
                "ad_patterns": [list(p) for p in self.ad_patterns],
                "history_cues": [list(p) for p in self.history_cues],
                "start_keywords": list(self.start_keywords),
                "team_aliases": list(self.team_aliases),
                "other_game_min_aliases": self.other_game_min_aliases,
            },
            ensure_ascii=False,
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "NoiseRules":
        obj = json.loads(text)
        return cls(
            ad_patterns=tuple((rid, pat) for rid, pat in obj.get("ad_patterns", [])),
            history_cues=tuple((rid, pat) for rid, pat in obj.get("history_cues", [])),
            start_keywords=tuple(obj.get("start_keywords", [])),
            team_aliases=tuple(obj.get("team_aliases", [])),
            other_game_min_aliases=obj.get("other_game_min_aliases", 2),
        )


def default_noise_rules(team_aliases: Sequence[str] = ()) -> NoiseRules:
    return NoiseRules(
        ad_patterns=(
            ("ad.url", r"https?://|www\.|\.com\b|\.cn\b"),
            ("ad.click", r"click here|点击|戳这里"),
            ("ad.app", r"download (?:the|our) app|下载.{0,4}APP|扫码|扫描二维码"),
            ("ad.follow", r"关注我们|欢迎关注|订阅|follow us"),
            ("ad.more", r"更多精彩|详情请|了解更多"),
        ),
        history_cues=(
            ("history.head_to_head", r"交锋|交手|历史战绩|head-to-head"),
            ("history.last_season", r"上赛季|上一?轮的比赛|last season|previous meeting"),
            ("history.past_record", r"此前.{0,6}(?:战|胜|负|平)|过去\d+次"),
        ),
        start_keywords=(
            r"比赛开始",
            r"开场",
            r"上半场开始",
            r"at the beginning of the game",
            r"kick-?off",
            r"the match (?:kicked|got) (?:off|underway)",
        ),
        team_aliases=tuple(team_aliases),
    )


def detect_noise(game: GameRecord, rules: NoiseRules) -> NoiseReport:
    """Flag noisy news sentences; pure, deterministic, non-mutating.

    A sentence may carry several flags.  Flags are ordered by sentence
    index, then rule id.
    """
    flags: list[NoiseFlag] = []

    ads = rules.compiled_ads()
    history = rules.compiled_history()
    starts = rules.compiled_starts()

    commentary_blob = " ".join(e.text for e in game.commentary)
    foreign = [
        alias
        for alias in rules.team_aliases
        if alias and alias not in commentary_blob
    ]

    first_start: int | None = None
    for i, sentence in enumerate(game.news):
        if any(p.search(sentence.text) for p in starts):
            first_start = i
            break

    for i, sentence in enumerate(game.news):
        mentioned = {alias for alias in foreign if alias in sentence.text}
        if len(mentioned) >= rules.other_game_min_aliases:
            flags.append(NoiseFlag(i, NoiseClass.OTHER_GAME, "other_game.foreign_teams"))
        for rid, pat in ads:
            if pat.search(sentence.text):
                flags.append(NoiseFlag(i, NoiseClass.AD_OR_HYPERLINK, rid))
        for rid, pat in history:
            if pat.search(sentence.text):
                flags.append(NoiseFlag(i, NoiseClass.HISTORY, rid))
        if first_start is not None and i < first_start:
            flags.append(NoiseFlag(i, NoiseClass.HISTORY, "history.before_start"))

    flags.sort(key=lambda f: (f.news_index, f.noise_class.value, f.rule_id))
    return NoiseReport(game_id=game.game_id, flags=tuple(flags))


_CLEAN_ORDER = (NoiseClass.OTHER_GAME, NoiseClass.AD_OR_HYPERLINK, NoiseClass.HISTORY)


def clean_news_passes(game: GameRecord, report: NoiseReport) -> list[GameRecord]:
    """Apply the three removal passes in order, returning a snapshot after each.

    Pass order: other-game sentences first, then ads/hyperlinks, then history.
    Indices in the report always refer to the original news list.
    """
    if report.game_id != game.game_id:
        raise MismatchedReport(
            f"report is for {report.game_id!r}, game is {game.game_id!r}"
        )
    for flag in report.flags:
        if not 0 <= flag.news_index < game.n:
            raise MismatchedReport(
                f"flag index {flag.news_index} outside news range 0..{game.n - 1}"
            )
    removed: set[int] = set()
    snapshots: list[GameRecord] = []
    for noise_class in _CLEAN_ORDER:
        removed |= report.indices(noise_class)
        news = tuple(s for i, s in enumerate(game.news) if i not in removed)
        snapshots.append(replace(game, news=news, discardable=not news))
    return snapshots


def clean_news(game: GameRecord, report: NoiseReport) -> GameRecord:
    """Remove all flagged sentences; mark the game discardable if none survive."""
    return clean_news_passes(game, report)[-1]
