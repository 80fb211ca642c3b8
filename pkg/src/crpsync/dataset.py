"""Supervised examples from sliding-window cross-recurrence plots.

For an aligned pair of length V with embedded length V' = V - tau*(k-1),
example ``j`` (0-based, ``j = 0 .. V'-w-1``) takes the raw observations
``j .. j+w-1`` of both series, z-scores and embeds each crop on its own,
and uses the resulting ``w' x w'`` cross-recurrence plot as input. Its
target is entry ``j + w`` of the diagonal of the cross-recurrence plot of
the complete (z-scored) series, i.e. the synchronization state one epoch
after the window ends. ``Example.epoch`` stores the 0-based index of the
last observation in the window, so the target sits at ``epoch + 1``.

Dataset cache layout (``.crpd``, all integers little-endian)::

    offset  size   field
    0       4      magic b"CRPD"
    4       1      version (1)
    5       4      u32 side          input side length w'
    9       4      u32 count         number of examples n
    13      4      u32 w             window length
    17      8      f64 epsilon
    25      4      u32 k
    29      4      u32 tau
    33      4      u32 meta_len
    37      m      UTF-8 JSON metadata (sorted keys)
    ...     n      u8 targets
    ...     4n     u32 epochs
    ...     n      u8 split code (0 train, 1 validation, 2 test)
    ...     b      input bits, numpy.packbits(bitorder="little") over the
                   row-major (n, side, side) array; b = ceil(n*side*side/8)
"""

from __future__ import annotations

import json
import logging
import math
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .embedding import EmbeddingParams, delay_stack, embed, zscore_array
from .errors import (
    DataError,
    DimensionMismatch,
    SeriesTooShort,
    ShapeMismatch,
    SingleClass,
    TooFewExamples,
)
from .ingestion import TimeSeries
from .recurrence import cross_recurrence_plot, diagonal_targets, threshold_distances

logger = logging.getLogger(__name__)

MAGIC = b"CRPD"
VERSION = 1
_HEADER = struct.Struct("<4sBIIIdIII")
SPLIT_CODES = {"train": 0, "validation": 1, "test": 2}

# upper bound on elements in one batched distance temporary
_CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class WindowConfig:
    w: int
    params: EmbeddingParams = EmbeddingParams(1, 1)
    epsilon: float = 0.45
    normalize: bool = True

    def __post_init__(self):
        if self.side < 2:
            raise DataError(
                f"window w={self.w} leaves w'={self.side} states for "
                f"k={self.params.k}, tau={self.params.tau}; need w' >= 2"
            )
        if self.epsilon <= 0:
            raise DataError(f"epsilon must be positive, got {self.epsilon}")

    @property
    def side(self) -> int:
        """Input matrix side length ``w' = w - tau*(k-1)``."""
        return self.w - self.params.span


@dataclass(frozen=True)
class Example:
    input: np.ndarray
    target: int
    pair: tuple
    epoch: int


@dataclass
class ExampleSet:
    """Column-oriented store of examples (one row per example).

    Behaves like a sequence of :class:`Example`; fancy indexing returns a
    new :class:`ExampleSet`.
    """

    inputs: np.ndarray  # bool (n, side, side)
    targets: np.ndarray  # uint8 (n,)
    epochs: np.ndarray  # int64 (n,)
    pair_ids: np.ndarray  # int32 (n,), index into pair_names
    pair_names: list = field(default_factory=list)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=bool)
        self.targets = np.asarray(self.targets, dtype=np.uint8)
        self.epochs = np.asarray(self.epochs, dtype=np.int64)
        self.pair_ids = np.asarray(self.pair_ids, dtype=np.int32)
        n = self.targets.shape[0]
        if not (self.inputs.shape[0] == self.epochs.shape[0] == self.pair_ids.shape[0] == n):
            raise ShapeMismatch("example columns have different lengths")
        if self.inputs.ndim != 3 or self.inputs.shape[1] != self.inputs.shape[2]:
            raise ShapeMismatch(f"inputs must be (n, s, s), got {self.inputs.shape}")

    @classmethod
    def empty(cls, side: int, pair_names=()):
        return cls(
            np.zeros((0, side, side), bool), np.zeros(0, np.uint8),
            np.zeros(0, np.int64), np.zeros(0, np.int32), list(pair_names),
        )

    @property
    def side(self) -> int:
        return self.inputs.shape[1]

    def __len__(self):
        return int(self.targets.shape[0])

    def __getitem__(self, key):
        if isinstance(key, (int, np.integer)):
            return Example(
                self.inputs[key], int(self.targets[key]),
                tuple(self.pair_names[self.pair_ids[key]]), int(self.epochs[key]),
            )
        return ExampleSet(
            self.inputs[key], self.targets[key], self.epochs[key],
            self.pair_ids[key], list(self.pair_names),
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def pairs(self) -> list:
        """Pair names present, in order of first appearance."""
        seen = []
        for pid in dict.fromkeys(self.pair_ids.tolist()):
            seen.append(tuple(self.pair_names[pid]))
        return seen

    def for_pair(self, pair) -> "ExampleSet":
        pid = [tuple(p) for p in self.pair_names].index(tuple(pair))
        return self[self.pair_ids == pid]

    @staticmethod
    def concat(sets: Sequence["ExampleSet"]) -> "ExampleSet":
        sets = [s for s in sets]
        if not sets:
            raise TooFewExamples("nothing to concatenate")
        sides = {s.side for s in sets}
        if len(sides) > 1:
            raise ShapeMismatch(f"input side lengths differ: {sorted(sides)}")
        names, ids = [], []
        for s in sets:
            remap = []
            for p in s.pair_names:
                p = tuple(p)
                if p not in names:
                    names.append(p)
                remap.append(names.index(p))
            remap = np.asarray(remap, dtype=np.int32)
            ids.append(remap[s.pair_ids] if len(s) else s.pair_ids)
        return ExampleSet(
            np.concatenate([s.inputs for s in sets]),
            np.concatenate([s.targets for s in sets]),
            np.concatenate([s.epochs for s in sets]),
            np.concatenate(ids),
            names,
        )


@dataclass
class SplitDataset:
    train: ExampleSet
    validation: ExampleSet
    test: ExampleSet

    @property
    def class_weights(self) -> tuple:
        return class_weights(self.train.targets)

    @property
    def side(self) -> int:
        return self.train.side

    def __len__(self):
        return len(self.train) + len(self.validation) + len(self.test)


def class_weights(targets) -> tuple:
    """``n / (2 * n_c)`` per class so both classes carry equal total weight."""
    t = np.asarray(targets).ravel()
    n = t.size
    n1 = int(np.count_nonzero(t))
    n0 = n - n1
    if n0 == 0 or n1 == 0:
        raise SingleClass(f"targets contain a single class (n0={n0}, n1={n1})")
    return (n / (2 * n0), n / (2 * n1))


# --- example construction ---------------------------------------------------

def _values(x) -> np.ndarray:
    if isinstance(x, TimeSeries):
        return x.values
    arr = np.asarray(x, dtype=np.float64)
    return arr[:, None] if arr.ndim == 1 else arr


def _zscore_windows(crops: np.ndarray) -> tuple:
    """Z-score ``(n, w, d)`` crops along the window axis; flat channels become 0."""
    flat = np.ptp(crops, axis=1) == 0  # (n, d)
    mean = crops.mean(axis=1, keepdims=True)
    std = crops.std(axis=1, keepdims=True)
    std = np.where(flat[:, None, :], 1.0, std)
    z = (crops - mean) / std
    z[np.broadcast_to(flat[:, None, :], z.shape)] = 0.0
    return z, flat


def window_crps(a_vals, b_vals, cfg: WindowConfig, count: int, label="") -> np.ndarray:
    """Cross-recurrence inputs for the first ``count`` windows of an aligned pair."""
    k, tau, w = cfg.params.k, cfg.params.tau, cfg.w
    side = cfg.side
    width = k * a_vals.shape[1]
    chunk = max(1, _CHUNK_ELEMENTS // (side * side * width))
    out = np.empty((count, side, side), dtype=bool)
    flats = 0
    for c0 in range(0, count, chunk):
        c1 = min(count, c0 + chunk)
        # sliding_window_view puts the window axis last: (n, d, w) -> (n, w, d)
        ca = sliding_window_view(a_vals[c0 : c1 + w - 1], w, axis=0).transpose(0, 2, 1)
        cb = sliding_window_view(b_vals[c0 : c1 + w - 1], w, axis=0).transpose(0, 2, 1)
        if cfg.normalize:
            ca, fa = _zscore_windows(ca)
            cb, fb = _zscore_windows(cb)
            flats += int(fa.sum() + fb.sum())
        ea = delay_stack(ca, k, tau)
        eb = delay_stack(cb, k, tau)
        out[c0:c1] = threshold_distances(ea, eb, cfg.epsilon)
    if flats:
        logger.warning(
            "%s: %d window channel(s) had zero variance and were zeroed", label or "pair", flats
        )
    return out


def full_targets(a_vals, b_vals, cfg: WindowConfig, names=None) -> np.ndarray:
    """Diagonal of the cross-recurrence plot over the complete series."""
    if cfg.normalize:
        a_vals = zscore_array(a_vals, names=names)
        b_vals = zscore_array(b_vals, names=names)
    crp = cross_recurrence_plot(embed(a_vals, cfg.params), embed(b_vals, cfg.params), cfg.epsilon)
    return diagonal_targets(crp)


def build_pair_examples(a, b, cfg: WindowConfig, pair=None) -> ExampleSet:
    """All ``V' - w`` (input, target) examples for one aligned pair."""
    if isinstance(a, TimeSeries) and isinstance(b, TimeSeries):
        if not np.array_equal(a.dates, b.dates):
            raise DataError(f"{a.ticker} and {b.ticker} are not aligned; call align_pair first")
        pair = pair or (a.ticker, b.ticker)
        names = a.channel_names
    else:
        pair = pair or ("a", "b")
        names = None
    a_vals, b_vals = _values(a), _values(b)
    if a_vals.shape != b_vals.shape:
        raise DimensionMismatch(f"pair shapes differ: {a_vals.shape} vs {b_vals.shape}")
    length = a_vals.shape[0]
    v_prime = length - cfg.params.span
    if v_prime <= cfg.w:
        raise SeriesTooShort(
            f"{pair}: embedded length V'={v_prime} must exceed window w={cfg.w}"
        )
    count = v_prime - cfg.w
    diag = full_targets(a_vals, b_vals, cfg, names)
    label = "-".join(pair)
    inputs = window_crps(a_vals, b_vals, cfg, count, label)
    return ExampleSet(
        inputs,
        diag[cfg.w : cfg.w + count],
        np.arange(cfg.w - 1, cfg.w - 1 + count),
        np.zeros(count, dtype=np.int32),
        [tuple(pair)],
    )


# --- splitting and pooling --------------------------------------------------

def split_sizes(n: int, train_frac=0.7, val_frac_of_train=0.15) -> tuple:
    """``(train, validation, test)`` counts for ``n`` time-ordered examples.

    Train+validation takes ``ceil(train_frac * n)``; the validation tail is
    ``val_frac_of_train`` of that, rounded half up. Arithmetic is exact.
    """
    fit = math.ceil(Fraction(str(train_frac)) * n)
    val = math.floor(Fraction(str(val_frac_of_train)) * fit + Fraction(1, 2))
    return fit - val, val, n - fit


def split_temporal(examples: ExampleSet, train_frac=0.7, val_frac_of_train=0.15) -> SplitDataset:
    """Chronological split, applied pair by pair, keeping the given order."""
    parts = {"train": [], "validation": [], "test": []}
    for pair in examples.pairs():
        sub = examples.for_pair(pair)
        if np.any(np.diff(sub.epochs) <= 0):
            raise DataError(f"{pair}: examples are not sorted by epoch")
        n_tr, n_val, n_te = split_sizes(len(sub), train_frac, val_frac_of_train)
        if min(n_tr, n_val, n_te) <= 0:
            raise TooFewExamples(
                f"{pair}: {len(sub)} examples give split sizes {(n_tr, n_val, n_te)}"
            )
        parts["train"].append(sub[:n_tr])
        parts["validation"].append(sub[n_tr : n_tr + n_val])
        parts["test"].append(sub[n_tr + n_val :])
    if not parts["train"]:
        raise TooFewExamples("no examples to split")
    return SplitDataset(*(ExampleSet.concat(parts[k]) for k in ("train", "validation", "test")))


def pool_pairs(per_pair: Mapping) -> SplitDataset:
    """Concatenate per-pair splits in lexicographic pair order."""
    if not per_pair:
        raise TooFewExamples("no pairs to pool")
    keys = sorted(per_pair, key=lambda p: tuple(p))
    sides = {per_pair[k].side for k in keys}
    if len(sides) > 1:
        raise ShapeMismatch(f"pairs have different input sizes: {sorted(sides)}")
    return SplitDataset(
        *(
            ExampleSet.concat([getattr(per_pair[k], part) for k in keys])
            for part in ("train", "validation", "test")
        )
    )


# --- on-disk cache ----------------------------------------------------------

def save_split(path, split: SplitDataset, cfg: WindowConfig, meta: dict | None = None) -> Path:
    """Write one pair's split dataset to a ``.crpd`` file."""
    path = Path(path)
    parts = [("train", split.train), ("validation", split.validation), ("test", split.test)]
    allset = ExampleSet.concat([s for _, s in parts])
    codes = np.concatenate(
        [np.full(len(s), SPLIT_CODES[name], np.uint8) for name, s in parts]
    )
    meta = dict(meta or {})
    meta.setdefault("pairs", [list(p) for p in allset.pair_names])
    meta["pair_ids"] = allset.pair_ids.tolist() if len(allset.pair_names) > 1 else None
    meta["normalize"] = cfg.normalize
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    header = _HEADER.pack(
        MAGIC, VERSION, allset.side, len(allset), cfg.w, float(cfg.epsilon),
        cfg.params.k, cfg.params.tau, len(blob),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(blob)
        fh.write(allset.targets.astype("<u1").tobytes())
        fh.write(allset.epochs.astype("<u4").tobytes())
        fh.write(codes.tobytes())
        fh.write(np.packbits(allset.inputs.ravel(), bitorder="little").tobytes())
    return path


def load_split(path) -> tuple:
    """Read a ``.crpd`` file; returns ``(SplitDataset, WindowConfig, meta)``."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise DataError(f"{path}: truncated dataset file")
    magic, version, side, n, w, eps, k, tau, mlen = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise DataError(f"{path}: unsupported version {version}")
    pos = _HEADER.size
    meta = json.loads(data[pos : pos + mlen].decode("utf-8"))
    pos += mlen
    targets = np.frombuffer(data, "<u1", n, pos).copy()
    pos += n
    epochs = np.frombuffer(data, "<u4", n, pos).astype(np.int64)
    pos += 4 * n
    codes = np.frombuffer(data, "<u1", n, pos)
    pos += n
    nbits = n * side * side
    packed = np.frombuffer(data, np.uint8, (nbits + 7) // 8, pos)
    inputs = np.unpackbits(packed, count=nbits, bitorder="little").astype(bool)
    inputs = inputs.reshape(n, side, side)
    pairs = [tuple(p) for p in meta["pairs"]]
    ids = meta.get("pair_ids")
    ids = np.zeros(n, np.int32) if ids is None else np.asarray(ids, np.int32)
    allset = ExampleSet(inputs, targets, epochs, ids, pairs)
    cfg = WindowConfig(w, EmbeddingParams(k, tau), eps, bool(meta.get("normalize", True)))
    split = SplitDataset(*(allset[codes == SPLIT_CODES[p]] for p in ("train", "validation", "test")))
    return split, cfg, meta
