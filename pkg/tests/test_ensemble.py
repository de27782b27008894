import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import TableModel, index_chunk, pool_from_correctness
from awae.ensemble import (
    AWAE,
    AwaeConfig,
    ClassifierMember,
    EnsemblePool,
    aged_weight,
    apply_aging,
    choose_removal,
    combine_predict,
    compute_weights,
    generalized_diversity,
    generalized_diversity_from_correctness,
    prune,
    process_chunk,
    rejuvenate,
    weight_bell,
    weight_kuncheva,
    weight_proportional,
    weight_same,
    weighted_vote,
)
from awae.errors import ConfigurationError, DiversityUndefinedError, StateError
from awae.stream import DataChunk, StreamConfig, generate_synthetic_stream


def table_pool(predictions, weights, n_classes=2, residences=None):
    residences = residences if residences is not None else [0] * len(weights)
    members = [
        ClassifierMember(TableModel(p, n_classes), float(w), int(r), k)
        for k, (p, w, r) in enumerate(zip(predictions, weights, residences))
    ]
    return EnsemblePool(capacity=len(members), n_classes=n_classes, members=members)


class TestCombinePredict:
    def test_weighted_majority(self):
        pool = table_pool([[0], [1]], [0.6, 0.4])
        assert combine_predict(pool, [[0.0]]).tolist() == [0]

    def test_equal_weights_is_majority(self):
        pool = table_pool([[1, 0], [1, 1], [0, 0]], [1, 1, 1])
        assert combine_predict(pool, [[0.0], [1.0]]).tolist() == [1, 0]

    def test_tie_to_lower_class(self):
        pool = table_pool([[1], [0]], [0.5, 0.5])
        assert combine_predict(pool, [[0.0]]).tolist() == [0]

    def test_empty_pool(self):
        with pytest.raises(StateError):
            combine_predict(EnsemblePool(3), [[0.0]])

    def test_matches_score_table_oracle(self, rng):
        for _ in range(200):
            n_classes = int(rng.integers(2, 5))
            preds = rng.integers(0, n_classes, (3, 20))
            w = rng.random(3)
            assert weighted_vote(preds, w, n_classes).tolist() == oracles.vote(preds, w, n_classes)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
    def test_weight_scaling_invariance(self, seed, c):
        rng = np.random.default_rng(seed)
        preds = rng.integers(0, 3, (5, 30))
        w = rng.random(5) + 0.01
        # scale by a power of two so products stay exact and ties survive
        scale = 2.0 ** round(math.log2(c))
        assert np.array_equal(weighted_vote(preds, w, 3), weighted_vote(preds, w * scale, 3))


class TestWeightFormulas:
    def test_same(self):
        assert weight_same(4) == 0.25

    def test_kuncheva(self):
        assert weight_kuncheva(0.8) == pytest.approx(4.0, abs=1e-12)
        assert weight_kuncheva(1.0) == 1e6

    def test_proportional(self):
        assert weight_proportional(0.9, 0.9) == 1.0
        assert weight_proportional(0.5, 0.0) == 0.0

    def test_bell_closed_form(self):
        for a, e in [(0.7, 0.9), (0.9, 0.9), (0.0, 1.0)]:
            assert weight_bell(a, e) == pytest.approx(oracles.bell(e, a), abs=1e-12)
        assert weight_bell(0.9, 0.9) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-12)

    def test_proportional_threshold(self):
        # ensemble accuracy 1.0 (majority of the two right members), member accuracy 0.04
        y = np.zeros(100, dtype=int)
        weak = np.ones(100, dtype=int)
        weak[:4] = 0
        pool = table_pool([np.zeros(100), np.zeros(100), weak], [1, 1, 1])
        compute_weights(pool, index_chunk(y), "proportional", theta=0.05)
        assert pool.weights.tolist() == [1.0, 1.0, 0.0]
        assert pool.members[2].accuracy == pytest.approx(0.04)

    def test_ensemble_accuracy_uses_entry_weights(self):
        # member 0 right on all, member 1 wrong on all; entry weights favour member 1
        y = np.zeros(10, dtype=int)
        pool = table_pool([np.zeros(10), np.ones(10)], [0.1, 0.9])
        compute_weights(pool, index_chunk(y), "bell", theta=0.0)
        # P_a(ensemble) = 0, so member 1 (acc 0) sits at the peak
        assert pool.members[1].weight == pytest.approx(oracles.bell(0.0, 0.0), abs=1e-12)
        assert pool.members[0].weight == pytest.approx(oracles.bell(0.0, 1.0), abs=1e-12)

    def test_kuncheva_in_pool(self):
        y = np.zeros(10, dtype=int)
        p = np.zeros(10, dtype=int)
        p[:2] = 1
        pool = table_pool([p], [1.0])
        compute_weights(pool, index_chunk(y), "kuncheva")
        assert pool.weights[0] == pytest.approx(4.0, abs=1e-12)

    def test_unlabeled_chunk_warns_and_keeps(self):
        pool = table_pool([[0]], [0.7])
        with pytest.warns(UserWarning):
            compute_weights(pool, DataChunk(3, np.zeros((0, 1)), np.zeros(0, int)), "same")
        assert pool.weights.tolist() == [0.7]

    def test_unknown_method(self):
        with pytest.raises(ConfigurationError):
            compute_weights(table_pool([[0]], [1]), index_chunk([0]), "magic")


class TestAging:
    def test_proportional(self):
        assert aged_weight("proportional", 0.5, 0.81, 4, 0.05, 0.1, 0.5) == pytest.approx(0.405, abs=1e-12)
        # a fresh member is treated as residence 1
        assert aged_weight("proportional", 0.5, 0.81, 0, 0.05, 0.1, 0.5) == pytest.approx(0.81, abs=1e-12)

    def test_constant(self):
        assert aged_weight("constant", 0.30, 0.0, 3, 0.0, 0.10, 0.5) == pytest.approx(0.20, abs=1e-12)
        assert aged_weight("constant", 0.06, 0.0, 3, 0.05, 0.02, 0.5) == 0.0

    def test_gaussian_closed_form(self):
        assert aged_weight("gaussian", 0.8, 0.0, 3, 0.0, 0.1, 0.5) == pytest.approx(0.8 * math.exp(-0.75), abs=1e-12)
        assert aged_weight("gaussian", 0.8, 0.0, 0, 0.0, 0.1, 0.5) == 0.8

    def test_unknown(self):
        with pytest.raises(ConfigurationError):
            aged_weight("linear", 1, 1, 1, 0, 0, 1)

    @settings(max_examples=300, deadline=None)
    @given(
        st.sampled_from(["constant", "gaussian"]),
        st.floats(0, 1),
        st.floats(0, 1),
        st.integers(0, 50),
        st.integers(0, 50),
        st.floats(0, 1),
        st.floats(0, 1),
        st.floats(0.01, 5),
    )
    def test_monotone_in_residence(self, method, w, acc, r1, r2, theta, delta, xi):
        lo, hi = sorted((r1, r2))
        assert aged_weight(method, w, acc, hi, theta, delta, xi) <= aged_weight(method, w, acc, lo, theta, delta, xi)

    def test_apply_aging_mutates(self):
        pool = table_pool([[0], [0]], [0.3, 0.5], residences=[1, 2])
        apply_aging(pool, "constant", theta=0.0, delta=0.1)
        np.testing.assert_allclose(pool.weights, [0.2, 0.4])


class TestRejuvenation:
    def test_example(self):
        pool = table_pool([[0]] * 3, [0.6, 0.3, 0.1], residences=[5, 5, 5])
        rejuvenate(pool, 2.0)
        assert pool.residences.tolist() == [4, 5, 5]

    def test_equal_weights_unchanged(self):
        pool = table_pool([[0]] * 3, [1 / 3] * 3, residences=[2, 3, 4])
        rejuvenate(pool, 3.0)
        assert pool.residences.tolist() == [2, 3, 4]

    def test_large_power(self):
        pool = table_pool([[0]] * 2, [0.9, 0.1], residences=[5, 5])
        rejuvenate(pool, 4.0)
        assert pool.residences.tolist() == [2, 5]

    def test_clamped_at_zero(self):
        pool = table_pool([[0]] * 2, [0.9, 0.1], residences=[1, 1])
        rejuvenate(pool, 4.0)
        assert pool.residences.tolist() == [0, 1]

    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.tuples(st.floats(0, 1), st.integers(0, 20)), min_size=1, max_size=8), st.floats(1.01, 10))
    def test_properties(self, members, r_p):
        weights = [w for w, _ in members]
        before = [r for _, r in members]
        pool = table_pool([[0]] * len(members), weights, residences=before)
        mean = sum(pool.weights) / len(members)
        rejuvenate(pool, r_p)
        for (w, r0), r1 in zip(members, pool.residences):
            assert r1 <= r0
            if w <= mean:
                assert r1 == r0
            else:
                assert r1 == max(0, r0 - max(1, math.floor(r_p * w)))


class TestGeneralizedDiversity:
    def test_never_simultaneous_failures(self):
        correct = np.array([[0, 1, 1, 1], [1, 0, 1, 1]], dtype=bool)
        assert generalized_diversity_from_correctness(correct) == 1.0

    def test_shared_failures(self):
        row = np.array([0, 1, 0, 1, 1], dtype=bool)
        assert generalized_diversity_from_correctness(np.stack([row] * 4)) == 0.0

    def test_no_failures(self):
        assert generalized_diversity_from_correctness(np.ones((3, 5), bool)) == 1.0

    def test_one_member_undefined(self):
        with pytest.raises(DiversityUndefinedError):
            generalized_diversity_from_correctness(np.ones((1, 5), bool))

    def test_matches_counting_oracle(self, rng):
        for _ in range(300):
            correct = rng.random((3, 10)) < rng.random()
            assert generalized_diversity_from_correctness(correct) == pytest.approx(
                oracles.generalized_diversity(correct.tolist()), abs=1e-12
            )

    def test_pool_form(self, rng):
        y = rng.integers(0, 2, 30)
        correct = rng.random((4, 30)) < 0.7
        pool = pool_from_correctness(correct, y)
        assert generalized_diversity(pool, index_chunk(y)) == pytest.approx(
            oracles.generalized_diversity(correct.tolist()), abs=1e-12
        )

    @settings(max_examples=200, deadline=None)
    @given(st.integers(2, 8), st.integers(1, 40), st.integers(0, 2**32 - 1))
    def test_bounded(self, N, n, seed):
        correct = np.random.default_rng(seed).random((N, n)) < 0.5
        assert 0.0 <= generalized_diversity_from_correctness(correct) <= 1.0


class TestPrune:
    def _random_case(self, rng, L):
        n = 50
        y = rng.integers(0, 2, n)
        correct = rng.random((L + 1, n)) < rng.uniform(0.4, 0.95)
        if rng.random() < 0.3:
            correct[1] = correct[0]  # duplicate members produce score ties
        weights = rng.random(L + 1) + 0.01
        residences = rng.integers(0, 4, L + 1)
        return y, correct, weights, residences

    @pytest.mark.parametrize("mode,alpha", [("pre", 0.5), ("post", 0.0), ("post", 0.5), ("post", 1.0)])
    def test_matches_leave_one_out_oracle(self, rng, mode, alpha):
        for _ in range(60):
            L = int(rng.integers(1, 7))
            y, correct, weights, residences = self._random_case(rng, L)
            pool = pool_from_correctness(correct, y, weights, residences)
            pool.capacity = L
            ids = [m.birth_chunk for m in pool.members]
            preds = np.where(correct, y, 1 - y)
            expected = oracles.prune(preds.tolist(), y.tolist(), weights.tolist(), residences.tolist(), 2, mode, alpha)
            prune(pool, index_chunk(y), mode, alpha)
            assert [m.birth_chunk for m in pool.members] == [ids[k] for k in expected]

    def test_alpha_zero_equals_pre(self, rng):
        for _ in range(30):
            y, correct, weights, residences = self._random_case(rng, 4)
            a = pool_from_correctness(correct, y, weights, residences)
            b = pool_from_correctness(correct, y, weights, residences)
            a.capacity = b.capacity = 4
            prune(a, index_chunk(y), "pre")
            prune(b, index_chunk(y), "post", alpha=0.0)
            assert [m.birth_chunk for m in a.members] == [m.birth_chunk for m in b.members]

    def test_tie_removes_oldest(self):
        assert choose_removal(np.array([0.5, 0.5, 0.2]), np.array([1, 3, 9])) == 1
        assert choose_removal(np.array([0.5, 0.5]), np.array([2, 2])) == 0

    def test_requires_exactly_one_extra(self, rng):
        y = rng.integers(0, 2, 10)
        pool = pool_from_correctness(rng.random((3, 10)) < 0.5, y)
        pool.capacity = 3
        with pytest.raises(StateError):
            prune(pool, index_chunk(y), "pre")

    def test_bad_mode(self, rng):
        y = rng.integers(0, 2, 10)
        pool = pool_from_correctness(rng.random((3, 10)) < 0.5, y)
        with pytest.raises(ConfigurationError):
            prune(pool, index_chunk(y), "middle")


def stream(n_chunks=15, seed=3, **kw):
    return generate_synthetic_stream(StreamConfig(n_chunks=n_chunks, chunk_size=100, n_features=4, n_drifts=1,
                                                  seed=seed, **kw))


CONFIGS = [
    AwaeConfig(),
    AwaeConfig(pre_pruning=True, post_pruning=False, capacity=3),
    AwaeConfig(pre_pruning=True, post_pruning=True, capacity=4, rejuvenation_enabled=True),
    AwaeConfig(weighting="proportional", aging="proportional", capacity=5),
    AwaeConfig(weighting="kuncheva", aging="gaussian", capacity=5, theta=0.0),
    AwaeConfig(weighting="same", aging="constant", delta=0.0, capacity=2),
]


class TestProcessChunk:
    def test_first_chunk(self):
        method = AWAE()
        c = stream()[0]
        method.process(c, c)
        assert method.pool_size == 1
        assert method.pool.members[0].weight == 1.0
        assert method.pool.members[0].residence == 1

    @pytest.mark.parametrize("config", CONFIGS, ids=lambda c: f"{c.weighting}-{c.aging}-L{c.capacity}")
    def test_invariants_each_chunk(self, config):
        method = AWAE(config)
        for c in stream():
            method.process(c, c)
            w = method.pool.weights
            assert abs(w.sum() - 1.0) <= 1e-9
            assert np.all(w > 0)
            assert method.pool_size <= config.capacity

    def test_grows_without_pruning(self):
        config = AwaeConfig(pre_pruning=False, post_pruning=False, weighting="same", aging="constant", delta=0.0,
                            theta=0.0, capacity=3)
        method = AWAE(config)
        for k, c in enumerate(stream(n_chunks=6)):
            method.process(c, c)
            assert method.pool_size == k + 1

    def test_all_zero_keeps_newest(self):
        config = AwaeConfig(weighting="same", aging="constant", delta=1.0, theta=0.0, capacity=5)
        method = AWAE(config)
        for c in stream(n_chunks=4):
            method.process(c, c)
            assert method.pool_size == 1
            assert method.pool.members[0].birth_chunk == c.index
            assert method.pool.members[0].weight == 1.0

    def test_residence_counts_chunks(self):
        config = AwaeConfig(weighting="same", aging="constant", delta=0.0, theta=0.0, capacity=10,
                            post_pruning=False)
        method = AWAE(config)
        for c in stream(n_chunks=5):
            method.process(c, c)
        assert method.pool.residences.tolist() == [5, 4, 3, 2, 1]

    def test_normalization_arithmetic(self):
        pool = table_pool([[0], [0]], [2.0, 3.0])
        pool.normalize()
        np.testing.assert_allclose(pool.weights, [0.4, 0.6])

    def test_new_member_starts_at_mean_weight(self, monkeypatch):
        seen = {}
        import awae.ensemble as ens

        real = ens.compute_weights

        def spy(pool, *a, **kw):
            seen["entry"] = pool.weights.copy()
            return real(pool, *a, **kw)

        monkeypatch.setattr(ens, "compute_weights", spy)
        pool = table_pool([[0] * 100, [0] * 100], [0.25, 0.75])
        pool.capacity = 10
        c = index_chunk(np.arange(100) % 2)
        process_chunk(pool, c, c, AwaeConfig(capacity=10))
        assert seen["entry"].tolist() == [0.25, 0.75, 0.5]

    def test_deterministic(self):
        runs = []
        for _ in range(2):
            method = AWAE(AwaeConfig(capacity=4, pre_pruning=True))
            for c in stream():
                method.process(c, c)
            runs.append((method.pool.weights.tolist(), method.pool.residences.tolist(),
                         [m.birth_chunk for m in method.pool.members]))
        assert runs[0] == runs[1]

    @pytest.mark.parametrize(
        "kw", [dict(capacity=0), dict(theta=1.5), dict(alpha=-0.1), dict(r_p=1.0), dict(xi=0.0),
               dict(weighting="x"), dict(aging="x"), dict(delta=-1)]
    )
    def test_config_validation(self, kw):
        with pytest.raises(ConfigurationError):
            AwaeConfig(**kw).validate()

    def test_support_is_weighted_mean(self):
        pool = table_pool([[0], [1]], [0.25, 0.75])
        np.testing.assert_allclose(pool.support([[0.0]]), [[0.25, 0.75]])
