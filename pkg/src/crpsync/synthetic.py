"""Synthetic series for tests, demos and smoke runs."""

from __future__ import annotations

import numpy as np

from .ingestion import TimeSeries

TOY_A = "ABAACDDBCC"
TOY_B = "ACCCDBDBCC"
TOY_CODES = {"A": 1.0, "B": 2.0, "C": 3.0, "D": 4.0}
# synchronized at timestamps 1 and 7..10
TOY_DIAGONAL = np.array([1, 0, 0, 0, 0, 0, 1, 1, 1, 1], dtype=np.uint8)


def toy_pair() -> tuple:
    """The ten-symbol pair encoded A..D -> 1..4, as ``(T, 1)`` arrays."""
    a = np.array([TOY_CODES[s] for s in TOY_A])[:, None]
    b = np.array([TOY_CODES[s] for s in TOY_B])[:, None]
    return a, b


def business_days(n: int, start="2015-01-02") -> np.ndarray:
    """``n`` consecutive weekdays starting at (or after) ``start``."""
    first = np.busday_offset(np.datetime64(start, "D"), 0, roll="forward")
    return np.busday_offset(first, np.arange(n))


def as_series(values, ticker: str, channels=("price", "volume", "return"), start="2015-01-02") -> TimeSeries:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    dates = business_days(values.shape[0], start)
    return TimeSeries(ticker, dates, {c: values[:, j] for j, c in enumerate(channels[: values.shape[1]])})


def sync_gate(length: int, period: int, on: int, offset: int = 0) -> np.ndarray:
    """Boolean mask, True for the first ``on`` steps of every ``period``."""
    return ((np.arange(length) + offset) % period) < on


def coupled_sinusoids(
    length: int = 600,
    channels: int = 3,
    signal_period: float = 17.0,
    gate_period: int = 9,
    gate_on: int = 5,
    noise: float = 0.02,
    seed: int = 0,
) -> tuple:
    """Two multichannel sinusoids that move together on a periodic set of epochs.

    Channel ``c`` of ``a`` is ``sin(2 pi t / P + 2 pi c / channels)`` plus
    noise. ``b`` follows ``a`` while the gate is open and is in anti-phase
    while it is closed. With three or more evenly phased channels the
    anti-phase distance is the same at every epoch, so the closed epochs sit
    far outside any small epsilon and the open epochs sit at noise level.

    Returns ``(a, b, gate)`` with ``a, b`` of shape ``(length, channels)``.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(length)[:, None]
    phase = 2 * np.pi * t / signal_period + 2 * np.pi * np.arange(channels) / channels
    clean = np.sin(phase)
    gate = sync_gate(length, gate_period, gate_on)
    a = clean + noise * rng.standard_normal(clean.shape)
    b = np.where(gate[:, None], clean, -clean) + noise * rng.standard_normal(clean.shape)
    return a, b, gate


def embedded_gate(gate: np.ndarray, k: int, tau: int) -> np.ndarray:
    """Epochs whose whole delay vector lies inside the open gate."""
    n = gate.size - tau * (k - 1)
    out = np.ones(n, dtype=bool)
    for j in range(k):
        out &= gate[j * tau : j * tau + n]
    return out


def random_walk_stocks(tickers, length: int = 400, seed: int = 0, common: float = 0.6) -> dict:
    """Correlated geometric random walks with volumes, as ``{ticker: (dates, price, volume)}``."""
    rng = np.random.default_rng(seed)
    dates = business_days(length)
    market = rng.standard_normal(length) * 0.01
    out = {}
    for tick in tickers:
        own = rng.standard_normal(length) * 0.01
        ret = common * market + (1 - common) * own
        price = 100 * np.exp(np.cumsum(ret))
        volume = np.round(1e6 * np.exp(0.3 * rng.standard_normal(length) + 5 * np.abs(ret)))
        out[tick] = (dates, price, volume)
    return out


def write_stock_csv(path, dates, price, volume) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("date,adj_close,volume\n")
        for d, p, v in zip(dates, price, volume):
            fh.write(f"{d},{p:.6f},{int(v)}\n")


def diagonal_majority_examples(n: int = 32, side: int = 9, seed: int = 0, density: float = 0.5):
    """Random binary matrices labelled by the majority bit of their main diagonal.

    ``side`` should be odd so there are no ties. Returns an
    :class:`~crpsync.dataset.ExampleSet`; both classes are guaranteed present.
    """
    from .dataset import ExampleSet

    rng = np.random.default_rng(seed)
    while True:
        inputs = rng.random((n, side, side)) < density
        targets = (np.diagonal(inputs, axis1=1, axis2=2).sum(axis=1) * 2 > side).astype(np.uint8)
        if 0 < targets.sum() < n:
            break
    return ExampleSet(inputs, targets, np.arange(n), np.zeros(n, np.int32), [("synthetic", "majority")])
