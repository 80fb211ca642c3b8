"""
A small (window, epsilon) grid on random-walk stocks
====================================================

Random walks have no built-in synchronization, so the numbers mean little;
the point is the mechanics of a grid run and its CSV report. Epochs are
cut to 10 to keep the run short.
"""

import tempfile
from pathlib import Path

import numpy as np

from crpsync.embedding import EmbeddingParams
from crpsync.evaluation import grid_report, write_grid_report
from crpsync.ingestion import TimeSeries
from crpsync.nn import TrainConfig
from crpsync.pipeline import align_universe, epsilon_trend_holds, run_grid
from crpsync.synthetic import random_walk_stocks

raw = random_walk_stocks(["AAA", "BBB", "CCC"], length=300, seed=5)
series = {
    tick: TimeSeries(tick, dates, {"price": price, "volume": volume})
    for tick, (dates, price, volume) in raw.items()
}
pairs = align_universe(series)
print(len(pairs), "pairs")

results = run_grid(pairs, windows=(10, 30), epsilons=(0.45, 0.75),
                   params=EmbeddingParams(2, 1), train_config=TrainConfig(epochs=10))
print(grid_report(results))
print("F1 at eps=0.45 above eps=0.75:", epsilon_trend_holds(results))

out = write_grid_report(results, Path(tempfile.mkdtemp()) / "report.csv")
print(out.read_text())
print("mean F1:", np.mean([m.f1 for m in results.values()]).round(3))
