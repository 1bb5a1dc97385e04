import itertools

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from jabberprobe.errors import ConfigError, DataError
from jabberprobe.metrics import (
    UndirectedTree,
    count_labeled_directed,
    count_trees,
    dspr,
    dspr_sentence,
    enumerate_trees,
    mst_prim,
    spearman_rank,
    tree_distances,
    tree_from_pruefer,
    uuas,
    uuas_pair,
)

FIG2_GOLD = UndirectedTree.from_edges(6, {(1, 2), (3, 4), (2, 4), (5, 6), (2, 6)})
CHAIN6 = UndirectedTree.from_edges(6, {(i, i + 1) for i in range(1, 6)})


def total_weight(tree, weights):
    return sum(weights[u - 1, v - 1] for u, v in tree.edges)


class TestCounting:
    def test_cayley_five(self):
        assert count_trees(5) == 125

    def test_directed_labeled(self):
        assert count_labeled_directed(5, 36) == 1_049_760_000

    @pytest.mark.parametrize("n", range(1, 7))
    def test_enumeration_matches_formula(self, n):
        assert sum(1 for _ in enumerate_trees(n)) == count_trees(n)

    def test_enumeration_distinct(self):
        trees = [tree.edges for tree in enumerate_trees(5)]
        assert len(set(trees)) == 125

    def test_enumeration_guard(self):
        with pytest.raises(DataError):
            list(enumerate_trees(9))
        with pytest.raises(DataError):
            list(enumerate_trees(0))


class TestPruefer:
    def test_star_decode(self):
        tree = tree_from_pruefer((1, 1), 4)
        assert tree.edges == frozenset({(1, 2), (1, 3), (1, 4)})

    def test_chain_decode(self):
        tree = tree_from_pruefer((2, 3), 4)
        assert tree.edges == frozenset({(1, 2), (2, 3), (3, 4)})

    def test_tiny(self):
        assert tree_from_pruefer((), 2).edges == frozenset({(1, 2)})
        assert tree_from_pruefer((), 1).edges == frozenset()

    def test_bad_length(self):
        with pytest.raises(DataError):
            tree_from_pruefer((1,), 4)

    @given(st.integers(min_value=3, max_value=8), st.data())
    @settings(max_examples=60, deadline=None)
    def test_decode_always_tree(self, n, data):
        seq = tuple(
            data.draw(st.integers(min_value=1, max_value=n)) for _ in range(n - 2)
        )
        tree = tree_from_pruefer(seq, n)
        tree.validate()
        assert len(tree.edges) == n - 1


class TestMst:
    def test_simple_minimum(self):
        weights = np.array(
            [
                [0.0, 1.0, 4.0],
                [1.0, 0.0, 2.0],
                [4.0, 2.0, 0.0],
            ]
        )
        assert mst_prim(weights, "minimize").edges == frozenset({(1, 2), (2, 3)})

    def test_maximize_picks_heavy_edges(self):
        weights = np.array(
            [
                [0.0, 1.0, 4.0],
                [1.0, 0.0, 2.0],
                [4.0, 2.0, 0.0],
            ]
        )
        assert mst_prim(weights, "maximize").edges == frozenset({(1, 3), (2, 3)})

    def test_tie_break_is_lexicographic(self):
        weights = np.ones((4, 4)) - np.eye(4)
        assert mst_prim(weights, "minimize").edges == frozenset(
            {(1, 2), (1, 3), (1, 4)}
        )

    def test_single_node(self):
        assert mst_prim(np.zeros((1, 1))).edges == frozenset()

    def test_bad_objective(self):
        with pytest.raises(DataError):
            mst_prim(np.zeros((2, 2)), "mediumize")

    @given(st.integers(min_value=2, max_value=5), st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=60, deadline=None)
    def test_against_brute_force(self, n, seed):
        rng = np.random.default_rng(seed)
        weights = rng.normal(size=(n, n))
        weights = (weights + weights.T) / 2
        np.fill_diagonal(weights, 0.0)
        for objective, choose in (("minimize", min), ("maximize", max)):
            got = total_weight(mst_prim(weights, objective), weights)
            best = choose(total_weight(t, weights) for t in enumerate_trees(n))
            assert got == pytest.approx(best, abs=1e-9)

    @given(st.integers(min_value=2, max_value=5), st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=40, deadline=None)
    def test_maximize_equals_negated_minimize(self, n, seed):
        rng = np.random.default_rng(seed)
        weights = rng.normal(size=(n, n))
        weights = (weights + weights.T) / 2
        np.fill_diagonal(weights, 0.0)
        assert mst_prim(weights, "maximize").edges == mst_prim(-weights, "minimize").edges


class TestTreeDistances:
    def test_matches_sentence_distances(self, fig2):
        from jabberprobe.treebank import distance_matrix

        got = tree_distances(FIG2_GOLD)
        assert np.array_equal(got, distance_matrix(fig2).entries.astype(float))

    def test_chain(self):
        d = tree_distances(CHAIN6)
        assert d[0, 5] == 5
        assert d[2, 3] == 1


class TestUuas:
    def test_fig2_path_is_point_six(self):
        score = uuas_pair(CHAIN6, FIG2_GOLD)
        assert score == pytest.approx(0.6)
        assert uuas([(CHAIN6, FIG2_GOLD)]) == pytest.approx(0.6)

    def test_identical_trees(self):
        assert uuas([(FIG2_GOLD, FIG2_GOLD)]) == 1.0

    def test_micro_weights_by_edges(self):
        small_gold = UndirectedTree.from_edges(2, {(1, 2)})
        pairs = [(CHAIN6, FIG2_GOLD), (small_gold, small_gold)]
        # micro: (3 + 1) / (5 + 1); macro: mean(0.6, 1.0)
        assert uuas(pairs) == pytest.approx(4 / 6)
        assert uuas(pairs, macro=True) == pytest.approx(0.8)

    def test_size_mismatch(self):
        with pytest.raises(DataError):
            uuas_pair(CHAIN6, UndirectedTree.from_edges(2, {(1, 2)}))


class TestSpearman:
    def test_perfect_and_reversed(self):
        xs = np.array([1.0, 2.0, 3.0, 4.0])
        assert spearman_rank(xs, xs) == pytest.approx(1.0)
        assert spearman_rank(xs, xs[::-1]) == pytest.approx(-1.0)

    def test_constant_side_is_zero(self):
        assert spearman_rank([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]) == 0.0

    def test_monotone_transform_invariant(self):
        xs = np.array([0.5, 1.0, 2.5, 4.0, 9.0])
        assert spearman_rank(xs, xs**2) == pytest.approx(1.0)

    @pytest.mark.parametrize(
        "xs,ys",
        [
            ([1, 2, 2, 3], [1, 2, 3, 4]),
            ([1, 1, 2, 2], [1, 2, 3, 4]),
            ([3, 1, 4, 1, 5, 9, 2, 6], [2, 7, 1, 8, 2, 8, 1, 8]),
            ([1, 2, 3, 3, 3, 4], [2, 2, 1, 5, 5, 6]),
        ],
    )
    def test_ties_match_reference_implementation(self, xs, ys):
        expected = scipy.stats.spearmanr(xs, ys).statistic
        assert spearman_rank(np.array(xs, float), np.array(ys, float)) == pytest.approx(
            expected, abs=1e-12
        )

    @given(
        st.lists(st.integers(min_value=0, max_value=6), min_size=3, max_size=20),
        st.data(),
    )
    @settings(max_examples=80, deadline=None)
    def test_matches_reference_on_random_tied_data(self, xs, data):
        ys = [
            data.draw(st.integers(min_value=0, max_value=6)) for _ in range(len(xs))
        ]
        if len(set(xs)) < 2 or len(set(ys)) < 2:
            return
        expected = scipy.stats.spearmanr(xs, ys).statistic
        got = spearman_rank(np.array(xs, float), np.array(ys, float))
        assert got == pytest.approx(expected, abs=1e-12)

    def test_too_short(self):
        with pytest.raises(DataError):
            spearman_rank([1.0], [2.0])


class TestDspr:
    def test_identity_is_one(self):
        gold = tree_distances(FIG2_GOLD)
        assert dspr([(gold, gold)]) == pytest.approx(1.0)

    def test_monotone_transform_is_one(self):
        gold = tree_distances(FIG2_GOLD)
        assert dspr([(gold**2, gold)]) == pytest.approx(1.0)
        assert dspr([(3.0 * gold + 0.5, gold)]) == pytest.approx(1.0)

    def test_reversed_rows_negative(self):
        gold = tree_distances(CHAIN6)
        assert dspr([(-gold, gold)]) == pytest.approx(-1.0)

    def test_two_token_sentence_unscorable(self):
        gold = tree_distances(UndirectedTree.from_edges(2, {(1, 2)}))
        assert dspr_sentence(gold, gold) is None
        big = tree_distances(FIG2_GOLD)
        assert dspr([(gold, gold), (big, big)]) == pytest.approx(1.0)

    def test_all_unscorable_raises(self):
        gold = tree_distances(UndirectedTree.from_edges(2, {(1, 2)}))
        with pytest.raises(DataError):
            dspr([(gold, gold)])

    def test_length_filter_drops_short_sentences(self):
        short = tree_distances(UndirectedTree.from_edges(3, {(1, 2), (2, 3)}))
        long = tree_distances(CHAIN6)
        unfiltered = dspr([(-short, short), (long, long)])
        filtered = dspr([(-short, short), (long, long)], length_filter=True)
        assert unfiltered == pytest.approx(0.0)
        assert filtered == pytest.approx(1.0)

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            dspr_sentence(np.zeros((3, 3)), np.zeros((4, 4)))

    def test_pairs_method_identity(self):
        gold = tree_distances(FIG2_GOLD)
        assert dspr([(gold, gold)], method="pairs") == pytest.approx(1.0)
        assert dspr([(gold**2 + 1.0, gold)], method="pairs") == pytest.approx(1.0)

    def test_pairs_method_differs_from_rows(self):
        # Every row is perfectly correlated, but the pooled pair ranks are not.
        gold = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]])
        pred = np.array([[0.0, 10.0, 20.0], [10.0, 0.0, 1.0], [20.0, 1.0, 0.0]])
        assert dspr_sentence(pred, gold, method="rows") == pytest.approx(1.0)
        expected = scipy.stats.spearmanr([1.0, 2.0, 1.0], [10.0, 20.0, 1.0]).statistic
        assert dspr_sentence(pred, gold, method="pairs") == pytest.approx(expected)

    def test_pairs_method_unscorable(self):
        two = tree_distances(UndirectedTree.from_edges(2, {(1, 2)}))
        assert dspr_sentence(two, two, method="pairs") is None

    def test_unknown_method_rejected(self):
        gold = tree_distances(FIG2_GOLD)
        with pytest.raises(ConfigError):
            dspr_sentence(gold, gold, method="kendall")
