"""Tests for similarity metrics and contrastive pair mining."""

import random

import pytest

from conftest import make_input
from src.harness.models import CostMeasurement, LineProfile
from src.pairminer.miner import build_profile_diff, mine_pair, preview, select_solutions_for_mining
from src.pairminer.similarity import jaccard, match_ratio, similarity, tokenize
from src.pipeline.errors import BothEmpty, NoQualifyingPair, ProfileMismatch


def cost(value: float) -> CostMeasurement:
    return CostMeasurement(per_run_costs=[int(value)])


class TestSimilarity:

    def test_tokenize(self):
        assert tokenize(b"1 2  3\n") == ["1", "2", "3"]
        assert tokenize(b"") == []
        assert tokenize(b"a\tb\nc") == ["a", "b", "c"]

    def test_match_ratio_uses_multiset_intersection(self):
        assert match_ratio(["1", "2", "2", "3"], ["2", "3", "4"]) == pytest.approx(2 / 3)
        assert match_ratio(["x", "y"], ["x", "y"]) == 1.0
        assert match_ratio(["x"], ["y"]) == 0.0

    def test_jaccard(self):
        assert jaccard(["a", "b", "c"], ["b", "c", "d"]) == 0.5
        assert jaccard(["a"], ["a"]) == 1.0
        assert jaccard(["a"], ["b"]) == 0.0

    def test_both_empty_raises(self):
        with pytest.raises(BothEmpty):
            match_ratio([], [])
        with pytest.raises(BothEmpty):
            jaccard([], [])

    def test_one_empty_side_scores_zero(self):
        assert match_ratio([], ["1"]) == 0.0
        assert similarity([], ["1"]).total == 0.0

    def test_total_is_sum(self):
        score = similarity(["1", "2"], ["1", "3"])

        assert score.total == pytest.approx(score.match_ratio + score.jaccard)

    def test_agrees_with_brute_force_counts(self):
        rng = random.Random(5)
        alphabet = ["1", "2", "3", "10", "x"]
        checked = 0
        while checked < 1000:
            a = [rng.choice(alphabet) for _ in range(rng.randint(0, 8))]
            b = [rng.choice(alphabet) for _ in range(rng.randint(0, 8))]
            if not a and not b:
                continue
            checked += 1

            remaining = list(b)
            common = 0
            for token in a:
                if token in remaining:
                    remaining.remove(token)
                    common += 1
            shorter = min(len(a), len(b))
            expected_match = common / shorter if shorter else 0.0

            distinct = []
            for token in a + b:
                if token not in distinct:
                    distinct.append(token)
            shared = [t for t in distinct if t in a and t in b]
            expected_jaccard = len(shared) / len(distinct)

            assert match_ratio(a, b) == expected_match
            assert jaccard(a, b) == expected_jaccard


class TestMinePair:

    def test_single_pair(self):
        tests = [make_input("A", "5 1 2\n"), make_input("B", "5 1 2\n")]

        pair = mine_pair(tests, {"A": cost(100), "B": cost(1000)})

        assert (pair.slow, pair.fast) == ("B", "A")
        assert pair.cost_ratio == pytest.approx(10.0)
        assert pair.similarity.total == pytest.approx(2.0)

    def test_similarity_beats_cost_ratio(self):
        tests = [
            make_input("base", "1 2 3 4\n"),
            make_input("close", "1 2 3 5\n"),
            make_input("far", "9 8 7 6\n"),
        ]
        costs = {"base": cost(100), "close": cost(300), "far": cost(10_000)}

        pair = mine_pair(tests, costs)

        assert (pair.slow, pair.fast) == ("close", "base")

    def test_ties_broken_by_cost_ratio(self, toy_problem):
        costs = {"t01": cost(8), "t02": cost(36), "t03": cost(9), "t04": cost(12), "t05": cost(13)}

        pair = mine_pair(toy_problem.default_tests, costs)

        assert (pair.slow, pair.fast) == ("t02", "t01")
        assert pair.cost_ratio == pytest.approx(4.5)

    def test_no_pair_over_threshold(self):
        tests = [make_input("A", "1\n"), make_input("B", "2\n"), make_input("C", "3\n")]

        with pytest.raises(NoQualifyingPair):
            mine_pair(tests, {"A": cost(100), "B": cost(100), "C": cost(100)})

    def test_single_test_cannot_pair(self):
        with pytest.raises(NoQualifyingPair):
            mine_pair([make_input("A", "1\n")], {"A": cost(1)})

    def test_zero_cost_fast_input(self):
        tests = [make_input("A", "0\n"), make_input("B", "50\n")]

        pair = mine_pair(tests, {"A": cost(0), "B": cost(50)})

        assert (pair.slow, pair.fast) == ("B", "A")
        assert pair.cost_ratio == 50

    def test_zero_cost_pairs_below_threshold_are_dropped(self):
        tests = [make_input("A", "1\n"), make_input("B", "2\n")]

        with pytest.raises(NoQualifyingPair):
            mine_pair(tests, {"A": cost(1), "B": cost(0)}, 2.0)
        with pytest.raises(NoQualifyingPair):
            mine_pair(tests, {"A": cost(0), "B": cost(0)}, 1.0)

    def test_matches_exhaustive_search(self):
        rng = random.Random(17)
        for _ in range(200):
            tests = [
                make_input(f"t{i}", " ".join(rng.choice("1234") for _ in range(rng.randint(1, 5))))
                for i in range(rng.randint(2, 6))
            ]
            costs = {t.id: cost(rng.choice([0, 1, 2, 5, 9, 20, 40])) for t in tests}

            ranked = []
            for slow in tests:
                for fast in tests:
                    s, f = costs[slow.id].mean_cost, costs[fast.id].mean_cost
                    if slow.id == fast.id or s < f or (s == f and slow.id > fast.id):
                        continue
                    ratio = s / f if f > 0 else s
                    if ratio < 2.0 or (f > 0 and s < 2.0 * f):
                        continue
                    score = similarity(tokenize(slow.input_bytes), tokenize(fast.input_bytes))
                    ranked.append((-score.total, -ratio, slow.id, fast.id))

            if not ranked:
                with pytest.raises(NoQualifyingPair):
                    mine_pair(tests, costs)
                continue

            pair = mine_pair(tests, costs)
            _, _, slow_id, fast_id = min(ranked)
            assert (pair.slow, pair.fast) == (slow_id, fast_id)
            assert pair.cost_ratio >= 2.0
            assert costs[pair.slow].mean_cost >= 2.0 * costs[pair.fast].mean_cost

    def test_input_order_does_not_matter(self, toy_problem):
        costs = {"t01": cost(8), "t02": cost(36), "t03": cost(9), "t04": cost(12), "t05": cost(13)}
        tests = list(toy_problem.default_tests)
        expected = mine_pair(tests, costs)

        rng = random.Random(3)
        for _ in range(20):
            rng.shuffle(tests)
            assert mine_pair(tests, costs) == expected


class TestProfileDiff:

    SOURCE = "n = int(input())\nfor i in range(n):\n    pass\nprint(n)\n"

    def test_hot_loop_line_carries_both_counts(self):
        slow = LineProfile(solution_id="s", input_id="slow", hits={1: 1, 2: 10001, 3: 10000, 4: 1})
        fast = LineProfile(solution_id="s", input_id="fast", hits={1: 1, 2: 4, 3: 3, 4: 1})

        diff = build_profile_diff(self.SOURCE, slow, fast, make_input("slow", "10000\n"), make_input("fast", "3\n"))

        line = diff.source_lines[2]
        assert (line.line_number, line.slow_hits, line.fast_hits) == (3, 10000, 3)
        assert line.source == "    pass"
        assert [l.line_number for l in diff.hottest_lines(2)] == [2, 3]
        assert "slow:   10000 fast:       3 |     pass" in diff.render()

    def test_identical_profiles(self):
        profile = LineProfile(solution_id="s", input_id="x", hits={1: 1, 2: 3, 3: 2, 4: 1})

        diff = build_profile_diff(self.SOURCE, profile, profile, make_input("x", "2\n"), make_input("x", "2\n"))

        assert all(l.slow_hits == l.fast_hits for l in diff.source_lines)
        assert diff.hottest_lines() == []

    def test_mismatched_solutions(self):
        a = LineProfile(solution_id="a", input_id="x", hits={1: 1})
        b = LineProfile(solution_id="b", input_id="y", hits={1: 1})

        with pytest.raises(ProfileMismatch):
            build_profile_diff("x = 1\n", a, b, make_input("x", "1\n"), make_input("y", "1\n"))

    def test_preview_truncates(self):
        text = preview(b"1 " * 100, budget=10)

        assert text.startswith("1 1 1 1 1 ")
        assert "truncated 190 bytes" in text


def test_solutions_with_most_spread_are_mined_first():
    tables = {
        "flat": {"t1": cost(10), "t2": cost(10)},
        "wide": {"t1": cost(1), "t2": cost(100)},
        "mid": {"t1": cost(10), "t2": cost(30)},
    }

    assert select_solutions_for_mining(tables, limit=2) == ["wide", "mid"]
