"""End-to-end orchestration: universe -> aligned pairs -> datasets -> model -> metrics."""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .dataset import SplitDataset, WindowConfig, build_pair_examples, pool_pairs, split_temporal
from .embedding import EmbeddingParams
from .errors import DataError
from .evaluation import Metrics
from .ingestion import TimeSeries, align_pair, load_csv
from .nn.train import TrainConfig, TrainReport, evaluate, train

logger = logging.getLogger(__name__)

WINDOW_GRID = (10, 30, 50, 60, 80)
EPSILON_GRID = (0.45, 0.55, 0.65, 0.75)


def load_universe(data_dir, tickers: Iterable[str] | None = None, channels=("price", "volume", "return")) -> dict:
    """Load ``<ticker>.csv`` files from ``data_dir``; all CSVs when ``tickers`` is None."""
    data_dir = Path(data_dir)
    if tickers is None:
        paths = sorted(data_dir.glob("*.csv"))
        if not paths:
            raise DataError(f"no CSV files in {data_dir}")
    else:
        paths = [data_dir / f"{t}.csv" for t in tickers]
    out = {}
    for p in paths:
        if not p.exists():
            raise DataError(f"missing data file {p}")
        out[p.stem] = load_csv(p, channels, ticker=p.stem)
    return out


def align_universe(series: Mapping[str, TimeSeries], strict: bool = True) -> dict:
    """Align every unordered pair (lexicographic ticker order) on the union calendar."""
    calendar = np.unique(np.concatenate([s.dates for s in series.values()]))
    pairs = {}
    for ta, tb in itertools.combinations(sorted(series), 2):
        a, b, report = align_pair(series[ta], series[tb], calendar=calendar, strict=strict)
        if report.gaps:
            logger.warning("%s-%s: %d gap(s) in common domain", ta, tb, len(report.gaps))
        pairs[(ta, tb)] = (a, b)
    return pairs


def _build_one(args):
    pair, a, b, cfg, train_frac, val_frac = args
    return pair, split_temporal(build_pair_examples(a, b, cfg, pair), train_frac, val_frac)


def build_datasets(pairs: Mapping, cfg: WindowConfig, jobs: int = 1,
                   train_frac: float = 0.7, val_frac_of_train: float = 0.15) -> dict:
    """Per-pair split datasets; pairs run in parallel processes when ``jobs > 1``."""
    tasks = [(p, a, b, cfg, train_frac, val_frac_of_train) for p, (a, b) in sorted(pairs.items())]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_build_one, tasks))
    else:
        results = [_build_one(t) for t in tasks]
    return dict(results)


def run_experiment(pairs: Mapping, cfg: WindowConfig, train_config: TrainConfig = TrainConfig(),
                   jobs: int = 1) -> tuple:
    """Build, pool, train and test one (w, epsilon) cell.

    Returns ``(test_metrics, train_report, pooled_dataset)``.
    """
    pooled: SplitDataset = pool_pairs(build_datasets(pairs, cfg, jobs))
    report: TrainReport = train(pooled, train_config)
    return evaluate(report.params, pooled.test), report, pooled


def run_grid(pairs: Mapping, windows=WINDOW_GRID, epsilons=EPSILON_GRID,
             params: EmbeddingParams = EmbeddingParams(2, 1),
             train_config: TrainConfig = TrainConfig(), jobs: int = 1) -> dict:
    """``{(w, epsilon): Metrics}`` over the full grid."""
    results: dict = {}
    for w in windows:
        for eps in epsilons:
            metrics, _, _ = run_experiment(pairs, WindowConfig(w, params, eps), train_config, jobs)
            logger.info("w=%d eps=%.2f f1=%.3f", w, eps, metrics.f1)
            results[(w, eps)] = metrics
    return results


def epsilon_trend_holds(results: Mapping[tuple, Metrics], low=0.45, high=0.75) -> dict:
    """Per window: does the mean F1 at ``low`` strictly beat the mean at ``high``?

    ``results`` may hold several entries per (w, eps) as lists (e.g. seeds or
    channel sets); single Metrics count as one-element lists.
    """
    def mean_f1(val):
        vals = val if isinstance(val, (list, tuple)) else [val]
        return float(np.mean([v.f1 for v in vals]))

    windows = sorted({w for w, _ in results})
    return {w: mean_f1(results[(w, low)]) > mean_f1(results[(w, high)]) for w in windows}
