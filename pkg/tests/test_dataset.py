import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_crp, naive_embed, naive_zscore

from crpsync.dataset import (
    ExampleSet,
    WindowConfig,
    build_pair_examples,
    class_weights,
    load_split,
    pool_pairs,
    save_split,
    split_sizes,
    split_temporal,
    window_crps,
)
from crpsync.embedding import EmbeddingParams
from crpsync.errors import DataError, SeriesTooShort, ShapeMismatch, SingleClass, TooFewExamples
from crpsync.synthetic import TOY_DIAGONAL, as_series, coupled_sinusoids

RAW = dict(normalize=False)


def toy_examples(toy, w=3, **kw):
    a, b = toy
    return build_pair_examples(a, b, WindowConfig(w, EmbeddingParams(1, 1), 0.5, **(kw or RAW)))


class TestBuildPairExamples:
    def test_toy_count_and_alignment(self, toy):
        ex = toy_examples(toy)
        assert len(ex) == 7
        # first window holds observations 0..2 and predicts diagonal entry 3
        assert ex.epochs[0] == 2 and ex.targets[0] == TOY_DIAGONAL[3]
        assert ex.epochs[-1] == 8 and ex.targets[-1] == TOY_DIAGONAL[9]
        np.testing.assert_array_equal(ex.targets, TOY_DIAGONAL[3:])

    def test_last_toy_target_is_synchronized(self, toy):
        ex = toy_examples(toy)
        assert ex[len(ex) - 1].target == 1

    def test_raw_window_inputs_are_submatrices(self, toy):
        a, b = toy
        ex = toy_examples(toy)
        full = naive_crp(a, b, 0.5)
        for j, e in enumerate(ex):
            np.testing.assert_array_equal(e.input, full[j : j + 3, j : j + 3])

    def test_zero_variance_window_warns_and_zeroes(self, toy, caplog):
        a, b = toy
        cfg = WindowConfig(3, EmbeddingParams(1, 1), 0.5)
        with caplog.at_level(logging.WARNING, logger="crpsync.dataset"):
            ex = build_pair_examples(a, b, cfg)
        assert "zero variance" in caplog.text
        # window 1 of b is "CCC": all its states sit at 0 after zeroing
        za = naive_zscore(a[1:4])
        np.testing.assert_array_equal(ex.inputs[1], naive_crp(za, np.zeros((3, 1)), 0.5))

    def test_window_crp_differs_from_full_submatrix(self, rng):
        a = np.cumsum(rng.standard_normal((80, 2)), axis=0)
        b = np.cumsum(rng.standard_normal((80, 2)), axis=0)
        cfg = WindowConfig(10, EmbeddingParams(2, 1), 0.45)
        ex = build_pair_examples(a, b, cfg)
        full = naive_crp(naive_embed(naive_zscore(a), 2, 1), naive_embed(naive_zscore(b), 2, 1), 0.45)
        subs = np.stack([full[j : j + 9, j : j + 9] for j in range(len(ex))])
        assert not np.array_equal(ex.inputs, subs)

    def test_window_inputs_match_oracle(self, rng):
        a, b = rng.standard_normal((40, 3)), rng.standard_normal((40, 3))
        cfg = WindowConfig(12, EmbeddingParams(3, 2), 0.8)
        ex = build_pair_examples(a, b, cfg)
        for j in (0, 7, len(ex) - 1):
            wa = naive_embed(naive_zscore(a[j : j + 12]), 3, 2)
            wb = naive_embed(naive_zscore(b[j : j + 12]), 3, 2)
            np.testing.assert_array_equal(ex.inputs[j], naive_crp(wa, wb, 0.8))

    def test_too_short(self, toy):
        a, b = toy
        with pytest.raises(SeriesTooShort):
            build_pair_examples(a, b, WindowConfig(10, EmbeddingParams(1, 1), 0.5))

    def test_unaligned_series(self):
        a = as_series(np.arange(20.0) % 7, "AAA", ("price",))
        b = as_series(np.arange(20.0) % 5, "BBB", ("price",), start="2015-02-02")
        with pytest.raises(DataError):
            build_pair_examples(a, b, WindowConfig(5))

    def test_time_series_pair_label(self, rng):
        a = as_series(rng.random((30, 2)), "AAA", ("price", "volume"))
        b = as_series(rng.random((30, 2)), "BBB", ("price", "volume"))
        ex = build_pair_examples(a, b, WindowConfig(6))
        assert ex.pair_names == [("AAA", "BBB")] and len(ex) == 24

    def test_tiny_window_rejected(self):
        with pytest.raises(DataError):
            WindowConfig(2, EmbeddingParams(2, 1))


class TestNoLookahead:
    def test_future_values_are_never_read(self, rng):
        a, b = rng.standard_normal((60, 2)), rng.standard_normal((60, 2))
        cfg = WindowConfig(10, EmbeddingParams(2, 1), 0.5)
        ref = build_pair_examples(a, b, cfg)
        for j in (0, 13, len(ref) - 1):
            last = ref.epochs[j]
            ta, tb = a.copy(), b.copy()
            ta[last + 1 :] = np.nan
            tb[last + 1 :] = np.nan
            got = window_crps(ta[: last + 1], tb[: last + 1], cfg, j + 1)
            np.testing.assert_array_equal(got[j], ref.inputs[j])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(12, 40), st.integers(1, 3), st.integers(1, 2),
       st.integers(4, 8), st.sampled_from([0.3, 0.6, 1.2]))
def test_count_law_and_target_shift(seed, length, k, tau, w, eps):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((length, 2)), rng.standard_normal((length, 2))
    span = tau * (k - 1)
    if w - span < 2 or length - span <= w:
        return
    ex = build_pair_examples(a, b, WindowConfig(w, EmbeddingParams(k, tau), eps))
    assert len(ex) == length - span - w
    full = naive_crp(naive_embed(naive_zscore(a), k, tau), naive_embed(naive_zscore(b), k, tau), eps)
    diag = np.diagonal(full).astype(np.uint8)
    np.testing.assert_array_equal(ex.targets, diag[ex.epochs + 1])


class TestSplit:
    @pytest.mark.parametrize("n, expected", [(10, (6, 1, 3)), (100, (59, 11, 30)), (7, (4, 1, 2))])
    def test_sizes(self, n, expected):
        assert split_sizes(n) == expected

    def test_too_few(self):
        ex = ExampleSet(np.zeros((2, 2, 2)), [0, 1], [0, 1], [0, 0], [("a", "b")])
        with pytest.raises(TooFewExamples):
            split_temporal(ex)

    def test_order_and_disjointness(self, rng):
        a, b = rng.standard_normal((130, 1)), rng.standard_normal((130, 1))
        ex = build_pair_examples(a, b, WindowConfig(10))
        split = split_temporal(ex)
        assert len(split) == len(ex) == 120
        assert (len(split.train), len(split.validation), len(split.test)) == split_sizes(120)
        assert split.train.epochs.max() < split.validation.epochs.min()
        assert split.validation.epochs.max() < split.test.epochs.min()
        joined = np.concatenate([split.train.epochs, split.validation.epochs, split.test.epochs])
        np.testing.assert_array_equal(joined, ex.epochs)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(3, 5000))
    def test_sizes_partition(self, n):
        tr, val, te = split_sizes(n)
        assert tr + val + te == n and tr + val >= 0.7 * n


class TestClassWeights:
    def test_imbalanced(self):
        w0, w1 = class_weights(np.r_[np.zeros(900), np.ones(100)])
        assert w0 == pytest.approx(0.5556, abs=5e-5) and w1 == 5.0

    def test_balanced(self):
        assert class_weights([0, 1, 1, 0]) == (1.0, 1.0)

    def test_single_class(self):
        with pytest.raises(SingleClass):
            class_weights(np.ones(5))

    @settings(max_examples=50)
    @given(st.lists(st.booleans(), min_size=2).filter(lambda t: 0 < sum(t) < len(t)))
    def test_equal_mass_and_unit_mean(self, t):
        t = np.array(t)
        w0, w1 = class_weights(t)
        n1 = t.sum()
        n0 = t.size - n1
        assert w0 * n0 == pytest.approx(w1 * n1)
        assert (w0 * n0 + w1 * n1) / t.size == pytest.approx(1.0)


def pair_split(rng, names, length=60, w=6, k=1):
    a, b = rng.standard_normal((length, 1)), rng.standard_normal((length, 1))
    return split_temporal(build_pair_examples(a, b, WindowConfig(w, EmbeddingParams(k, 1)), names))


class TestPool:
    def test_lexicographic_order_and_counts(self, rng):
        per = {p: pair_split(rng, p) for p in [("BBB", "CCC"), ("AAA", "CCC"), ("AAA", "BBB")]}
        pooled = pool_pairs(per)
        assert pooled.train.pair_names == [("AAA", "BBB"), ("AAA", "CCC"), ("BBB", "CCC")]
        assert len(pooled.train) == sum(len(s.train) for s in per.values())
        assert len(pooled) == 3 * 54
        np.testing.assert_array_equal(pooled.train.for_pair(("AAA", "CCC")).inputs,
                                      per[("AAA", "CCC")].train.inputs)

    def test_single_pair_identity(self, rng):
        s = pair_split(rng, ("AAA", "BBB"))
        pooled = pool_pairs({("AAA", "BBB"): s})
        for part in ("train", "validation", "test"):
            np.testing.assert_array_equal(getattr(pooled, part).inputs, getattr(s, part).inputs)
            np.testing.assert_array_equal(getattr(pooled, part).targets, getattr(s, part).targets)

    def test_shape_mismatch(self, rng):
        per = {("A", "B"): pair_split(rng, ("A", "B"), w=6),
               ("A", "C"): pair_split(rng, ("A", "C"), w=7)}
        with pytest.raises(ShapeMismatch):
            pool_pairs(per)


class TestCache:
    def test_roundtrip(self, rng, tmp_path):
        a, b = rng.standard_normal((90, 2)), rng.standard_normal((90, 2))
        cfg = WindowConfig(11, EmbeddingParams(2, 3), 0.55)
        split = split_temporal(build_pair_examples(a, b, cfg, ("AAA", "BBB")))
        path = save_split(tmp_path / "p.crpd", split, cfg)
        assert path.read_bytes()[:4] == b"CRPD"
        got, got_cfg, meta = load_split(path)
        assert got_cfg == cfg and meta["pairs"] == [["AAA", "BBB"]]
        for part in ("train", "validation", "test"):
            g, s = getattr(got, part), getattr(split, part)
            np.testing.assert_array_equal(g.inputs, s.inputs)
            np.testing.assert_array_equal(g.targets, s.targets)
            np.testing.assert_array_equal(g.epochs, s.epochs)

    def test_byte_identical_rebuild(self, rng, tmp_path):
        a, b = rng.standard_normal((50, 1)), rng.standard_normal((50, 1))
        cfg = WindowConfig(7)
        paths = [save_split(tmp_path / f"{i}.crpd",
                            split_temporal(build_pair_examples(a, b, cfg)), cfg) for i in range(2)]
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_pooled_roundtrip(self, rng, tmp_path):
        pooled = pool_pairs({p: pair_split(rng, p) for p in [("A", "B"), ("A", "C")]})
        path = save_split(tmp_path / "pool.crpd", pooled, WindowConfig(6))
        got, _, _ = load_split(path)
        np.testing.assert_array_equal(got.test.pair_ids, pooled.test.pair_ids)
        assert got.train.pair_names == [("A", "B"), ("A", "C")]

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "x.crpd"
        p.write_bytes(b"NOPE" + bytes(60))
        with pytest.raises(DataError):
            load_split(p)


def test_coupled_sinusoid_targets_follow_gate():
    from crpsync.synthetic import embedded_gate

    a, b, gate = coupled_sinusoids(300, seed=3)
    ex = build_pair_examples(a, b, WindowConfig(10, EmbeddingParams(2, 1), 0.45))
    np.testing.assert_array_equal(ex.targets, embedded_gate(gate, 2, 1)[ex.epochs + 1])
