"""Normalization, time-delay embedding and embedding-parameter diagnostics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DataError, SeriesTooShort, ZeroVariance
from .ingestion import TimeSeries


@dataclass(frozen=True)
class EmbeddingParams:
    k: int = 1
    tau: int = 1

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise DataError(f"embedding dimension k must be an integer >= 1, got {self.k}")
        if int(self.tau) != self.tau or self.tau < 1:
            raise DataError(f"delay tau must be an integer >= 1, got {self.tau}")

    @property
    def span(self) -> int:
        """Observations consumed beyond the first: ``tau * (k - 1)``."""
        return self.tau * (self.k - 1)

    def embedded_length(self, n: int) -> int:
        return n - self.span


@dataclass(frozen=True)
class EmbeddedSeries:
    """Phase-space states, one row per reconstructed state.

    Row ``i`` is ``[n_i, n_{i+tau}, ..., n_{i+(k-1)tau}]``; each ``n`` is a
    d-vector, so rows have width ``k * d``.
    """

    states: np.ndarray
    params: EmbeddingParams
    source_length: int

    def __len__(self):
        return self.states.shape[0]

    @property
    def width(self) -> int:
        return self.states.shape[1]


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, TimeSeries):
        return x.values
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DataError(f"expected a (T,) or (T, d) array, got shape {arr.shape}")
    return arr


def zscore_array(x, axis=0, names=None) -> np.ndarray:
    """Population z-score along ``axis``; raises :class:`ZeroVariance` on a flat channel."""
    x = np.asarray(x, dtype=np.float64)
    flat = np.ptp(x, axis=axis) == 0
    if np.any(flat):
        idx = int(np.flatnonzero(np.atleast_1d(flat))[0])
        raise ZeroVariance(names[idx] if names else idx)
    mean = x.mean(axis=axis, keepdims=True)
    std = x.std(axis=axis, keepdims=True)
    return (x - mean) / std


def zscore(ts):
    """Z-score each channel independently (population standard deviation).

    Accepts a :class:`TimeSeries` (returns one) or a plain array.
    """
    if isinstance(ts, TimeSeries):
        names = ts.channel_names
        z = zscore_array(ts.values, axis=0, names=names)
        return TimeSeries(ts.ticker, ts.dates, {n: z[:, j] for j, n in enumerate(names)})
    arr = np.asarray(ts, dtype=np.float64)
    return zscore_array(arr, axis=0)


def delay_stack(x: np.ndarray, k: int, tau: int) -> np.ndarray:
    """Time-delay embed along axis -2 of ``(..., T, d)``; returns ``(..., T', k*d)``."""
    n = x.shape[-2] - tau * (k - 1)
    if n < 1:
        raise SeriesTooShort(
            f"series of length {x.shape[-2]} too short for k={k}, tau={tau}"
        )
    return np.concatenate(
        [x[..., j * tau : j * tau + n, :] for j in range(k)], axis=-1
    )


def embed(ts, params: EmbeddingParams) -> EmbeddedSeries:
    x = _as_matrix(ts)
    return EmbeddedSeries(delay_stack(x, params.k, params.tau), params, x.shape[0])


# --- delay estimation -------------------------------------------------------

def histogram_bins(n: int) -> int:
    return max(1, math.ceil(math.sqrt(n)))


def mutual_information(x, y, bins: int) -> float:
    """Plug-in mutual information (nats) from an equal-width 2-D histogram."""
    joint, _, _ = np.histogram2d(x, y, bins=bins)
    pxy = joint / joint.sum()
    px = pxy.sum(axis=1, keepdims=True)
    py = pxy.sum(axis=0, keepdims=True)
    nz = pxy > 0
    return float(np.sum(pxy[nz] * np.log(pxy[nz] / (px @ py)[nz])))


def ami_curve(x, max_lag: int) -> np.ndarray:
    """Mutual information between ``x[t]`` and ``x[t+lag]`` for lag = 1..max_lag.

    Bin count is ``ceil(sqrt(len(x)))`` per axis and stays fixed across lags.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    if max_lag < 1:
        raise DataError("max_lag must be >= 1")
    if x.size <= max_lag + 1:
        raise SeriesTooShort(f"need more than {max_lag + 1} samples, got {x.size}")
    bins = histogram_bins(x.size)
    return np.array(
        [mutual_information(x[:-lag], x[lag:], bins) for lag in range(1, max_lag + 1)]
    )


def first_local_minimum(curve) -> int | None:
    """1-based index of the first point not followed by a decrease, or None."""
    curve = np.asarray(curve)
    for i in range(len(curve) - 1):
        if curve[i] <= curve[i + 1]:
            return i + 1
    return None


def estimate_delay_ami(x, max_lag: int = 20) -> int:
    """Delay at the first local minimum of the AMI curve.

    Falls back to ``max_lag`` with a :class:`RuntimeWarning` when the curve
    decreases over the whole range.
    """
    lag = first_local_minimum(ami_curve(x, max_lag))
    if lag is None:
        warnings.warn(
            f"AMI has no local minimum for lags 1..{max_lag}; using tau={max_lag}",
            RuntimeWarning,
            stacklevel=2,
        )
        return max_lag
    return lag


# --- dimension estimation ---------------------------------------------------

def fnn_fractions(x, tau: int = 1, max_k: int = 10, rtol: float = 10.0, atol: float = 2.0):
    """False-nearest-neighbour fraction when going from dimension k to k+1.

    Returns an array indexed by ``k - 1`` for k = 1..max_k. A neighbour is
    false if the added coordinate stretches the distance by more than
    ``rtol`` relative to the k-dimensional distance, or if the (k+1)-dimensional
    distance exceeds ``atol`` times the attractor size (the series' std).
    The series is z-scored first.
    """
    x = zscore_array(np.asarray(x, dtype=np.float64).ravel())
    if x.size <= tau * max_k + 1:
        raise SeriesTooShort(
            f"series of length {x.size} too short for max_k={max_k}, tau={tau}"
        )
    size = x.std()
    out = np.empty(max_k)
    for k in range(1, max_k + 1):
        n = x.size - k * tau
        pts = delay_stack(x[:, None], k, tau)[:n]
        dist, idx = cKDTree(pts).query(pts, k=2)
        own = idx[:, 0] == np.arange(n)
        nbr = np.where(own, idx[:, 1], idx[:, 0])
        r_k = np.where(own, dist[:, 1], dist[:, 0])
        extra = np.abs(x[np.arange(n) + k * tau] - x[nbr + k * tau])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(r_k > 0, extra / r_k, np.where(extra > 0, np.inf, 0.0))
        r_next = np.sqrt(r_k**2 + extra**2)
        false = (ratio > rtol) | (r_next / size > atol)
        out[k - 1] = false.mean()
    return out


def estimate_dimension_fnn(
    x, tau: int = 1, max_k: int = 10, threshold: float = 0.01, rtol: float = 10.0
) -> int:
    """Smallest k whose false-neighbour fraction drops below ``threshold``.

    Returns ``max_k`` with a :class:`RuntimeWarning` if no k qualifies.
    """
    frac = fnn_fractions(x, tau=tau, max_k=max_k, rtol=rtol)
    hits = np.flatnonzero(frac < threshold)
    if hits.size == 0:
        warnings.warn(
            f"FNN fraction never fell below {threshold} up to k={max_k}",
            RuntimeWarning,
            stacklevel=2,
        )
        return max_k
    return int(hits[0]) + 1
