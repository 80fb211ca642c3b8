"""
From a pair of series to supervised examples
============================================

Each example is the cross-recurrence plot of one sliding window, built
from that window alone, and its label is the synchronization state one
epoch after the window ends.
"""

import numpy as np

from crpsync.dataset import WindowConfig, build_pair_examples, split_temporal
from crpsync.embedding import EmbeddingParams
from crpsync.synthetic import coupled_sinusoids, embedded_gate

a, b, gate = coupled_sinusoids(length=200, channels=3, seed=0)
cfg = WindowConfig(w=10, params=EmbeddingParams(2, 1), epsilon=0.45)
examples = build_pair_examples(a, b, cfg, pair=("SYA", "SYB"))

print(f"{len(examples)} examples of size {cfg.side}x{cfg.side}")
print("labels follow the gate:",
      np.array_equal(examples.targets, embedded_gate(gate, 2, 1)[examples.epochs + 1]))

# the window with the most recurrences, to have something to look at
busiest = examples[int(examples.inputs.sum(axis=(1, 2)).argmax())]
print("window ending at epoch", busiest.epoch, "label", busiest.target)
for row in busiest.input.astype(int):
    print(" ".join(map(str, row)))

split = split_temporal(examples)
print("train / validation / test:", len(split.train), len(split.validation), len(split.test))
print("class weights:", tuple(round(w, 3) for w in split.class_weights))
