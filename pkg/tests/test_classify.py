import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wmknn.classify import (EPSILON, DegenerateFilterError, Variant, VoteTally,
                            certainty_unweighted, certainty_weighted, filter_noise, fit, predict,
                            predict_many, vote_majority, vote_weighted, weight)
from wmknn.dataset import apply_normalizer, fit_normalizer, stratified_folds
from wmknn.geometry import knn_of

import oracles
from conftest import make_dataset


class TestVoting:
    def test_majority_counts(self):
        label, t = vote_majority([("A", 1.0), ("A", 2.0), ("B", 0.5)])
        assert label == "A"
        assert t.counts == {"A": 2, "B": 1}

    def test_majority_tie_uses_class_order(self):
        assert vote_majority([("A", 1.0), ("B", 1.0)], ("A", "B"))[0] == "A"
        assert vote_majority([("A", 1.0), ("B", 1.0)], ("B", "A"))[0] == "B"

    def test_unanimous(self):
        assert vote_majority([("C", 0.1)] * 4)[0] == "C"

    def test_empty(self):
        with pytest.raises(ValueError):
            vote_majority([])

    def test_weighted_inverse_distance(self):
        assert vote_weighted([("A", 1.0), ("B", 0.25)])[0] == "B"
        label, t = vote_weighted([("A", 1.0), ("A", 1.0), ("B", 0.4)])
        assert label == "B"
        assert t.weights == {"A": 2.0, "B": 2.5}

    def test_weighted_equal_distances_match_majority(self):
        nb = [("B", 0.7), ("A", 0.7), ("A", 0.7), ("B", 0.7), ("C", 0.7)]
        assert vote_weighted(nb, "ABC")[0] == vote_majority(nb, "ABC")[0] == "A"

    @pytest.mark.parametrize("d, w", [(2.0, 0.5), (1.0, 1.0), (0.0, 1e12)])
    def test_weight(self, d, w):
        assert weight(d) == w

    def test_weight_cap(self):
        assert weight(EPSILON / 10) == 1.0 / EPSILON


class TestCertainty:
    def test_unweighted(self):
        assert certainty_unweighted(VoteTally({"A": 2, "B": 1}, {}), "A") == pytest.approx(2 / 3)
        assert certainty_unweighted(VoteTally({"C": 5}, {}), "C") == 1.0
        assert certainty_unweighted(VoteTally({"A": 3, "B": 3}, {}), "A") == 0.5

    def test_weighted(self):
        assert certainty_weighted(VoteTally({}, {"A": 4.0, "B": 1.0}), "A") == 0.8
        _, t = vote_weighted([("A", 0.3)])
        assert certainty_weighted(t, "A") == 1.0

    def test_uniform_weights_equal_unweighted(self):
        nb = [("A", 0.5), ("B", 0.5), ("A", 0.5)]
        _, t = vote_weighted(nb)
        assert certainty_weighted(t, "A") == pytest.approx(certainty_unweighted(t, "A"), rel=1e-15)

    def test_winner_without_votes(self):
        with pytest.raises(ValueError):
            certainty_unweighted(VoteTally({"A": 1}, {"A": 1.0}), "B")

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.sampled_from("ABCD"), st.floats(0, 10)), min_size=1, max_size=12))
    def test_winner_has_highest_share(self, nb):
        for vote, measure in ((vote_majority, certainty_unweighted), (vote_weighted, certainty_weighted)):
            label, t = vote(nb, "ABCD")
            c = measure(t, label)
            assert 0 < c <= 1
            assert all(c >= measure(t, other) for other in t.counts)


class TestFilterNoise:
    def test_line(self, line4):
        filtered, removed = filter_noise(line4, 1)
        assert filtered.ids.tolist() == [0, 1]
        assert removed == {2, 3}

    def test_k_n_minus_one_removes_nothing(self):
        rng = np.random.default_rng(1)
        ds = make_dataset(rng.random((9, 2)), rng.integers(0, 2, 9))
        assert filter_noise(ds, 8).removed == frozenset()

    def test_k_too_large(self, line4):
        with pytest.raises(DegenerateFilterError):
            filter_noise(line4, 4)

    def test_three_points(self):
        ds = make_dataset([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]], list("aab"))
        assert filter_noise(ds, 1).removed == {2}

    def test_single_instance(self):
        with pytest.raises(DegenerateFilterError, match="k=1"):
            filter_noise(make_dataset([1.0], ["a"]), 1)

    def test_glass_fold_matches_oracle(self, glass):
        train_pos, _ = stratified_folds(glass, 10, 0).positions(0)
        train = glass.take(train_pos)
        train = apply_normalizer(fit_normalizer(train), train)
        expect = oracles.noise_removed(train.X.tolist(), train.ids.tolist(), 3)
        result = filter_noise(train, 3)
        assert result.removed == expect
        assert set(result.filtered.ids.tolist()) | expect == set(train.ids.tolist())

    def test_random_partition(self):
        rng = np.random.default_rng(12)
        for trial in range(15):
            n = int(rng.integers(5, 40))
            X = rng.integers(0, 3, (n, 2)).astype(float) if trial % 2 else rng.random((n, 2))
            ds = make_dataset(X, rng.integers(0, 3, n))
            k = int(rng.integers(1, min(6, n - 1) + 1))
            # the closest pair is always mutual, so the filter never empties the set
            filtered, removed = filter_noise(ds, k)
            kept = set(filtered.ids.tolist())
            assert not kept & removed
            assert kept | removed == set(range(n))
            assert removed == oracles.noise_removed(X.tolist(), ds.ids.tolist(), k)


class TestVariants:
    def test_tags(self):
        assert [v.display for v in Variant] == ["kNN", "WkNN", "kNN*", "WkNN*", "MkNN", "WMkNN"]
        assert Variant.parse("wmknn") is Variant.WMKNN
        assert Variant.parse("kNN*") is Variant.KNN_STAR
        assert {v for v in Variant if v.mutual} == {Variant.MKNN, Variant.WMKNN}
        with pytest.raises(ValueError):
            Variant.parse("svm")


class TestFitPredict:
    def test_unfiltered_keeps_everything(self, line4):
        assert fit(Variant.KNN, line4, 1).removed == frozenset()

    def test_mknn_filters(self, line4):
        model = fit(Variant.MKNN, line4, 1)
        assert model.train.ids.tolist() == [0, 1]
        assert model.removed == {2, 3}

    def test_starred_share_training_set(self, glass):
        a = fit(Variant.KNN_STAR, glass, 4)
        b = fit(Variant.WKNN_STAR, glass, 4)
        np.testing.assert_array_equal(a.train.ids, b.train.ids)

    def test_wmknn_coincident_query(self):
        ds = make_dataset([[0.0, 0.0], [0.05, 0.0], [0.0, 0.05], [0.05, 0.05], [5.0, 5.0],
                           [5.05, 5.0], [5.0, 5.05], [5.05, 5.05]], list("ABBBAAAA"))
        model = fit(Variant.WMKNN, ds, 3)
        pred = predict(model, np.array([0.0, 0.0]))
        assert pred.label == "A"
        assert pred.certainty == pytest.approx(1.0, abs=1e-9)
        assert pred.tally.weights["A"] == 1e12

    def test_mknn_far_query_rejected(self):
        rng = np.random.default_rng(0)
        ds = make_dataset(rng.random((12, 2)) * 0.01, list("ab" * 6))
        for v in Variant:
            pred = predict(fit(v, ds, 3), np.array([4.0, 4.0]))
            assert pred.rejected == v.mutual
            if pred.rejected:
                assert pred.certainty is None and str(pred) == "REJECTED (outlier)"

    def test_equal_distances_knn_vs_wknn(self):
        # unit simplex in 4-d: all pairwise distances equal; the origin is equidistant from all
        ds = make_dataset(np.eye(4), list("abab"))
        q = np.zeros(4)
        p1, p2 = predict(fit(Variant.KNN, ds, 3), q), predict(fit(Variant.WKNN, ds, 3), q)
        assert (p1.label, p1.certainty) == (p2.label, p2.certainty)

    def test_voters_within_plain_knn(self, glass):
        ds = apply_normalizer(fit_normalizer(glass), glass)
        train, test = ds.take(np.arange(0, 214, 2)), ds.take(np.arange(1, 214, 2))
        model = fit(Variant.WMKNN, train, 5)
        for x in test.instances[:40]:
            pred = predict(model, x)
            plain = knn_of(x.features, model.train, 5).id_set()
            assert set(pred.neighbor_ids) <= plain

    def test_predict_many_matches_predict(self, glass):
        ds = apply_normalizer(fit_normalizer(glass), glass)
        train, test = ds.take(np.arange(0, 214, 2)), ds.take(np.arange(1, 214, 2))
        for v in Variant:
            model = fit(v, train, 4)
            batch = predict_many(model, test)
            for x, p in zip(test, batch):
                single = predict(model, x)
                assert (single.label, single.certainty, single.neighbor_ids) == \
                       (p.label, p.certainty, p.neighbor_ids)

    def test_deterministic_across_threads(self, glass):
        from concurrent.futures import ThreadPoolExecutor
        ds = apply_normalizer(fit_normalizer(glass), glass)
        model = fit(Variant.WMKNN, ds.take(np.arange(150)), 3)
        queries = ds.X[150:]
        serial = [(p.label, p.certainty) for p in map(lambda q: predict(model, q), queries)]
        with ThreadPoolExecutor(4) as pool:
            threaded = [(p.label, p.certainty) for p in pool.map(lambda q: predict(model, q), queries)]
        assert serial == threaded
