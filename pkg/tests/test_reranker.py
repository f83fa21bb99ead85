import random

import pytest

from pressbox.corpus import CommentaryEvent, GameRecord, NewsSentence
from pressbox.errors import EmptyCandidates, NoReferenceNews
from pressbox.lm import train_lm
from pressbox.reranker import (
    MmrConfig,
    compute_budget,
    flu,
    flu_from_perplexity,
    mmr_score,
    rerank_greedy,
    resolve_eta,
)
from pressbox.rewriter import RewrittenCandidate
from pressbox.scoring import HashedNgramScorer

from .oracles import brute_mmr_trace


class FixedFluency:
    """FluencyScorer stub with a lookup table."""

    def __init__(self, table, default=25.0):
        self.table = table
        self.default = default

    def perplexity(self, text):
        return self.table.get(text, self.default)


def cand(text, info, index, ppl=None):
    return RewrittenCandidate(
        text=text, info=info, commentary_index=index, fluency=ppl
    )


class TestFlu:
    def test_perplexity_equal_eta_is_zero(self):
        assert flu_from_perplexity(10.0, 10.0) == 0.0

    def test_perplexity_zero_is_one(self):
        assert flu_from_perplexity(0.0, 37.0) == 1.0

    def test_double_eta_clamped_to_zero(self):
        assert flu_from_perplexity(20.0, 10.0) == 0.0

    def test_scorer_path(self):
        scorer = FixedFluency({"x": 5.0})
        assert flu("x", scorer, 10.0) == 0.5

    def test_eta_must_be_positive(self):
        with pytest.raises(ValueError):
            flu_from_perplexity(1.0, 0.0)

    def test_random_pairs_stay_in_unit_interval(self):
        rng = random.Random(0)
        for _ in range(1000):
            ppl = rng.uniform(0, 500)
            eta = rng.uniform(0.01, 500)
            value = flu_from_perplexity(ppl, eta)
            assert 0.0 <= value <= 1.0


class TestMmrScore:
    def test_empty_selected_substitution(self):
        cfg = MmrConfig(budget=100, eta=10.0)
        sem = HashedNgramScorer()
        fluency = FixedFluency({}, default=5.0)  # flu = 1 - 5/10 = 0.5
        candidate = cand("candidate text", info=0.5, index=0)
        score = mmr_score(candidate, [], cfg, sem, fluency)
        assert score == pytest.approx(0.6 * 0.5 + 0.2 * 0.5, abs=1e-12)

    def test_identical_selected_full_redundancy(self):
        cfg = MmrConfig(budget=100, eta=10.0)
        sem = HashedNgramScorer()
        fluency = FixedFluency({}, default=5.0)
        candidate = cand("一模一样的句子", info=0.8, index=0)
        chosen = cand("一模一样的句子", info=0.9, index=1)
        score = mmr_score(candidate, [chosen], cfg, sem, fluency)
        expected = 0.6 * 0.8 + 0.2 * 0.5 - 0.2 * 1.0
        assert score == pytest.approx(expected, abs=1e-12)

    def test_info_only_weights(self):
        cfg = MmrConfig(lambda1=1.0, lambda2=0.0, lambda3=0.0, budget=100, eta=10.0)
        sem = HashedNgramScorer()
        fluency = FixedFluency({}, default=3.0)
        candidate = cand("whatever", info=0.37, index=0)
        assert mmr_score(candidate, [], cfg, sem, fluency) == pytest.approx(0.37, abs=1e-15)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            MmrConfig(lambda1=0.5, lambda2=0.2, lambda3=0.2, budget=10)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            MmrConfig(lambda1=1.2, lambda2=-0.1, lambda3=-0.1, budget=10)


class TestRerankGreedy:
    def setup_method(self):
        self.sem = HashedNgramScorer()

    def test_info_only_reduces_to_info_sort(self):
        cfg = MmrConfig(lambda1=1.0, lambda2=0.0, lambda3=0.0, budget=10_000, eta=10.0)
        fluency = FixedFluency({}, default=5.0)
        candidates = [
            cand("alpha one", 0.3, 0),
            cand("beta two", 0.9, 1),
            cand("gamma three", 0.6, 2),
        ]
        ranked = rerank_greedy(candidates, cfg, self.sem, fluency)
        order = [step.candidate_index for step in ranked.trace]
        assert order == [1, 2, 0]

    def test_flu_only_reduces_to_fluency_sort(self):
        cfg = MmrConfig(lambda1=0.0, lambda2=1.0, lambda3=0.0, budget=10_000, eta=100.0)
        fluency = FixedFluency({"a a": 10.0, "b b": 80.0, "c c": 40.0})
        candidates = [cand("a a", 0.1, 0), cand("b b", 0.9, 1), cand("c c", 0.5, 2)]
        ranked = rerank_greedy(candidates, cfg, self.sem, fluency)
        order = [step.candidate_index for step in ranked.trace]
        assert order == [0, 2, 1]

    def test_redundancy_prefers_distinct_second_pick(self):
        cfg = MmrConfig(lambda1=0.6, lambda2=0.2, lambda3=0.2, budget=10_000, eta=10.0)
        fluency = FixedFluency({}, default=5.0)
        twin_a = cand("the exact same sentence", 0.9, 0)
        twin_b = cand("the exact same sentence", 0.89, 1)
        distinct = cand("something entirely different", 0.75, 2)
        ranked = rerank_greedy([twin_a, twin_b, distinct], cfg, self.sem, fluency)
        order = [step.candidate_index for step in ranked.trace]
        assert order[0] == 0
        assert order[1] == 2  # sim=1 penalty (0.2) outweighs the 0.15 info gap

    def test_budget_overshoot_keeps_final_pick(self):
        cfg = MmrConfig(lambda1=1.0, lambda2=0.0, lambda3=0.0, budget=10, eta=10.0)
        fluency = FixedFluency({}, default=5.0)
        candidates = [
            cand("123456", 0.9, 0),  # 6 chars
            cand("abcdefgh", 0.8, 1),  # 8 chars -> total 14 > 10, kept
            cand("zz", 0.7, 2),  # never reached
        ]
        ranked = rerank_greedy(candidates, cfg, self.sem, fluency)
        assert [s.candidate_index for s in ranked.trace] == [0, 1]
        assert ranked.total_chars == 14
        last_len = len("abcdefgh")
        assert ranked.total_chars - last_len <= cfg.budget

    def test_final_order_is_chronological(self):
        cfg = MmrConfig(lambda1=1.0, lambda2=0.0, lambda3=0.0, budget=10_000, eta=10.0)
        fluency = FixedFluency({}, default=5.0)
        candidates = [
            cand("late event text", 0.9, 50),
            cand("early event text", 0.8, 3),
        ]
        ranked = rerank_greedy(candidates, cfg, self.sem, fluency)
        assert [c.commentary_index for c in ranked.sentences] == [3, 50]
        # trace keeps selection order
        assert [s.candidate_index for s in ranked.trace] == [0, 1]

    def test_tie_breaks_higher_info_then_lower_commentary_index(self):
        cfg = MmrConfig(lambda1=0.0, lambda2=1.0, lambda3=0.0, budget=10_000, eta=10.0)
        fluency = FixedFluency({}, default=5.0)  # all flu equal
        candidates = [
            cand("aaa", 0.2, 7),
            cand("bbb", 0.9, 5),
            cand("ccc", 0.9, 2),
        ]
        ranked = rerank_greedy(candidates, cfg, self.sem, fluency)
        order = [s.candidate_index for s in ranked.trace]
        # equal mmr everywhere: info breaks first two, commentary_index breaks the tie
        assert order == [2, 1, 0]

    def test_empty_candidates_raises(self):
        cfg = MmrConfig(budget=10, eta=1.0)
        with pytest.raises(EmptyCandidates):
            rerank_greedy([], cfg, self.sem, FixedFluency({}))

    def test_trace_reproducible(self):
        cfg = MmrConfig(budget=200, eta=30.0)
        fluency = FixedFluency({}, default=12.0)
        rng = random.Random(5)
        candidates = [
            cand(f"sentence number {i} with extra {rng.randint(0, 9)}", rng.random(), i)
            for i in range(6)
        ]
        a = rerank_greedy(candidates, cfg, self.sem, fluency)
        b = rerank_greedy(candidates, cfg, self.sem, fluency)
        assert a.trace == b.trace
        assert a.sentences == b.sentences

    def test_adaptive_eta_95th_percentile(self):
        import numpy as np

        ppls = [10.0, 20.0, 30.0, 40.0]
        cfg = MmrConfig(budget=100)  # eta None -> adaptive
        assert resolve_eta(ppls, cfg) == float(np.percentile(ppls, 95))
        fixed = MmrConfig(budget=100, eta=7.5)
        assert resolve_eta(ppls, fixed) == 7.5

    def test_fluency_computed_from_scorer_when_missing(self):
        lm = train_lm([list("the quick brown fox")], order=2, alpha=0.1)
        cfg = MmrConfig(budget=1000, eta=None)
        candidates = [
            RewrittenCandidate(text="the quick fox", info=0.5, commentary_index=0),
            RewrittenCandidate(text="zzz qqq vvv", info=0.5, commentary_index=1),
        ]
        ranked = rerank_greedy(candidates, cfg, self.sem, lm)
        assert all(c.fluency is not None for c in ranked.sentences)

    def _random_instance(self, rng, size):
        texts = [
            " ".join(
                rng.choice(["goal", "save", "corner", "foul", "shot", "pass", "cross"])
                for _ in range(rng.randint(2, 6))
            )
            for _ in range(size)
        ]
        candidates = [
            cand(texts[i], round(rng.random(), 6), rng.randint(0, 30))
            for i in range(size)
        ]
        weights = [rng.random() for _ in range(3)]
        total = sum(weights)
        l1, l2, l3 = (w / total for w in weights)
        cfg = MmrConfig(
            lambda1=l1,
            lambda2=l2,
            lambda3=1.0 - l1 - l2,
            budget=rng.randint(10, 120),
            eta=rng.uniform(5.0, 60.0),
        )
        ppls = {t: rng.uniform(0.0, 80.0) for t in texts}
        return candidates, cfg, FixedFluency(ppls)

    def test_matches_brute_force_oracle(self):
        rng = random.Random(2024)
        for _ in range(40):
            size = rng.randint(1, 8)
            candidates, cfg, fluency = self._random_instance(rng, size)
            ranked = rerank_greedy(candidates, cfg, self.sem, fluency)

            infos = [c.info for c in candidates]
            flus = [
                flu_from_perplexity(fluency.perplexity(c.text), cfg.eta)
                for c in candidates
            ]
            lengths = [len(c.text) for c in candidates]
            cidx = [c.commentary_index for c in candidates]
            sim_cache = {}

            def sim(i, j):
                key = (min(i, j), max(i, j))
                if key not in sim_cache:
                    sim_cache[key] = self.sem.score_pairs(
                        [(candidates[i].text, candidates[j].text)]
                    )[0]
                return sim_cache[key]

            expected = brute_mmr_trace(
                infos, flus, lengths, cidx, sim,
                cfg.budget, cfg.lambda1, cfg.lambda2, cfg.lambda3,
            )
            got = [
                (s.candidate_index, s.info, s.flu, s.max_sim, s.mmr)
                for s in ranked.trace
            ]
            assert got == expected
            # budget overshoot property
            if ranked.trace:
                last_len = len(candidates[ranked.trace[-1].candidate_index].text)
                assert ranked.total_chars - last_len <= cfg.budget

    def test_monotone_redundancy(self):
        # adding a sentence to the selected set never increases a remaining mmr
        cfg = MmrConfig(budget=10_000, eta=10.0)
        fluency = FixedFluency({}, default=5.0)
        sem = self.sem
        candidates = [
            cand("shared words in common", 0.5, 0),
            cand("shared words appear here too", 0.5, 1),
            cand("totally different phrasing", 0.5, 2),
        ]
        before = mmr_score(candidates[1], [candidates[2]], cfg, sem, fluency)
        after = mmr_score(candidates[1], [candidates[2], candidates[0]], cfg, sem, fluency)
        assert after <= before + 1e-12


class TestComputeBudget:
    def test_mean_of_two(self):
        games = [
            GameRecord("a", (CommentaryEvent("c"),), (NewsSentence("x" * 100),)),
            GameRecord("b", (CommentaryEvent("c"),), (NewsSentence("y" * 200),)),
        ]
        assert compute_budget(games) == 150

    def test_singleton(self):
        games = [GameRecord("a", (CommentaryEvent("c"),), (NewsSentence("z" * 771),))]
        assert compute_budget(games) == 771

    def test_multi_sentence_articles_sum_characters(self):
        games = [
            GameRecord(
                "a",
                (CommentaryEvent("c"),),
                (NewsSentence("x" * 30), NewsSentence("y" * 20)),
            )
        ]
        assert compute_budget(games) == 50

    def test_no_reference_news_raises(self):
        games = [GameRecord("a", (CommentaryEvent("c"),), ())]
        with pytest.raises(NoReferenceNews):
            compute_budget(games)

    def test_games_without_news_excluded(self):
        games = [
            GameRecord("a", (CommentaryEvent("c"),), (NewsSentence("x" * 100),)),
            GameRecord("b", (CommentaryEvent("c"),), ()),
        ]
        assert compute_budget(games) == 100

    def test_rounding_half_up(self):
        games = [
            GameRecord("a", (CommentaryEvent("c"),), (NewsSentence("x" * 100),)),
            GameRecord("b", (CommentaryEvent("c"),), (NewsSentence("y" * 101),)),
        ]
        assert compute_budget(games) == 101  # 100.5 rounds up
