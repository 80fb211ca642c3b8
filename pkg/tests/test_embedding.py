import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import brute_first_minimum_lag, brute_fnn_fractions, naive_embed, naive_zscore

from crpsync.embedding import (
    EmbeddingParams,
    ami_curve,
    embed,
    estimate_delay_ami,
    estimate_dimension_fnn,
    fnn_fractions,
    zscore,
)
from crpsync.errors import SeriesTooShort, ZeroVariance
from crpsync.ingestion import TimeSeries
from crpsync.synthetic import as_series


def logistic(n, r=3.99, x0=0.3):
    x = np.empty(n)
    x[0] = x0
    for i in range(n - 1):
        x[i + 1] = r * x[i] * (1 - x[i])
    return x


class TestZscore:
    def test_hand_values(self):
        np.testing.assert_allclose(zscore(np.array([1.0, 2.0, 3.0])),
                                   [-1.224744871391589, 0.0, 1.224744871391589], atol=1e-9)

    def test_fixed_point(self, rng):
        x = naive_zscore(rng.standard_normal(50))
        np.testing.assert_allclose(zscore(x), x, atol=1e-9)

    def test_zero_variance(self):
        with pytest.raises(ZeroVariance):
            zscore(np.array([5.0, 5.0, 5.0]))

    def test_timeseries_channels_independent(self):
        ts = as_series(np.column_stack([[1.0, 2, 3, 4], [10.0, 0, 10, 0]]), "A", ("price", "volume"))
        z = zscore(ts)
        assert isinstance(z, TimeSeries)
        for name in z.channel_names:
            assert abs(z.channels[name].mean()) < 1e-12
            assert abs(z.channels[name].std() - 1) < 1e-9

    def test_zero_variance_names_channel(self):
        ts = as_series(np.column_stack([[1.0, 2, 3], [7.0, 7, 7]]), "A", ("price", "volume"))
        with pytest.raises(ZeroVariance) as err:
            zscore(ts)
        assert err.value.channel == "volume"


class TestEmbed:
    def test_direct_expansion(self):
        e = embed(np.array([1.0, 2.0, 3.0, 4.0]), EmbeddingParams(2, 1))
        np.testing.assert_array_equal(e.states, [[1, 2], [2, 3], [3, 4]])

    def test_k1_identity(self, rng):
        x = rng.standard_normal((12, 3))
        e = embed(x, EmbeddingParams(1, 4))
        np.testing.assert_array_equal(e.states, x)

    def test_two_channel_shape(self, rng):
        e = embed(rng.standard_normal((10, 2)), EmbeddingParams(3, 1))
        assert e.states.shape == (8, 6)

    def test_row_layout_matches_naive(self, rng):
        x = rng.standard_normal((15, 2))
        np.testing.assert_array_equal(embed(x, EmbeddingParams(3, 2)).states, naive_embed(x, 3, 2))

    def test_too_short(self):
        with pytest.raises(SeriesTooShort):
            embed(np.arange(4.0), EmbeddingParams(3, 2))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 60), st.integers(1, 5), st.integers(1, 5), st.integers(1, 3))
def test_shape_law(t, k, tau, d):
    assume(t - tau * (k - 1) >= 1)
    e = embed(np.zeros((t, d)), EmbeddingParams(k, tau))
    assert e.states.shape == (t - tau * (k - 1), k * d)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(1, 3))
def test_embed_commutes_with_channel_selection(seed, k, tau):
    x = np.random.default_rng(seed).standard_normal((20, 2))
    both = embed(x, EmbeddingParams(k, tau)).states
    first = embed(x[:, 0], EmbeddingParams(k, tau)).states
    np.testing.assert_array_equal(both[:, 0::2], first)


@settings(max_examples=100, deadline=None)
@given(
    arrays(np.float64, st.integers(3, 40), elements=st.floats(-100, 100)),
    st.floats(0.01, 100),
    st.floats(-100, 100),
)
def test_zscore_affine_invariance(x, a, b):
    assume(np.ptp(x) > 1e-3)
    np.testing.assert_allclose(zscore(a * x + b), zscore(x), atol=1e-9)


class TestAmi:
    def test_noise_first_minimum(self):
        x = np.random.default_rng(0).standard_normal(2000)
        expected, curve = brute_first_minimum_lag(x, 10)
        assert expected == 1
        np.testing.assert_allclose(ami_curve(x, 10), curve, rtol=1e-10)
        assert estimate_delay_ami(x, 10) == 1

    def test_sine_near_quarter_period(self):
        # period 8 time units at dt = 0.1 -> quarter period = 20 samples
        t = np.arange(4000) * 0.1
        x = np.sin(2 * np.pi * t / 8) + 0.1 * np.random.default_rng(1).standard_normal(t.size)
        tau = estimate_delay_ami(x, 60)
        assert tau == brute_first_minimum_lag(x, 60)[0] == 17
        assert 15 <= tau <= 25

    def test_monotone_curve_falls_back_with_warning(self):
        walk = np.cumsum(np.random.default_rng(0).standard_normal(2000))
        lag, curve = brute_first_minimum_lag(walk, 8)
        assert lag is None and np.all(np.diff(curve) < 0)
        with pytest.warns(RuntimeWarning):
            assert estimate_delay_ami(walk, 8) == 8

    def test_too_short(self):
        with pytest.raises(SeriesTooShort):
            ami_curve(np.arange(5.0), 4)


class TestFnn:
    def test_matches_all_pairs_oracle(self):
        y = np.random.default_rng(3).standard_normal(300)
        np.testing.assert_allclose(fnn_fractions(y, 1, 4), brute_fnn_fractions(y, 1, 4))
        lm = logistic(300)
        np.testing.assert_allclose(fnn_fractions(lm, 2, 3), brute_fnn_fractions(lm, 2, 3))

    def test_white_noise_never_unfolds(self):
        x = np.random.default_rng(0).standard_normal(2000)
        assert brute_fnn_fractions(x[:400], 1, 6).min() >= 0.01
        with pytest.warns(RuntimeWarning):
            assert estimate_dimension_fnn(x, 1, 6) == 6

    def test_logistic_map_small_dimension(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            k = estimate_dimension_fnn(logistic(2000), 1, 6)
        assert k <= 3

    def test_constant_series(self):
        with pytest.raises(ZeroVariance):
            estimate_dimension_fnn(np.full(100, 2.0), 1, 3)
