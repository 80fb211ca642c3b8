"""Recurrence and cross-recurrence matrices, diagonal targets and RQA measures."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embedding import EmbeddedSeries, EmbeddingParams
from .errors import DataError, DimensionMismatch, NotSquare

SELF_RP = "self_rp"
CROSS_CRP = "cross_crp"

# rows per block in the distance kernel; bounds the (rows x cols x width) temporary
BLOCK_ROWS = 256


@dataclass(frozen=True)
class RecurrenceMatrix:
    bits: np.ndarray  # bool, (T', S')
    epsilon: float
    params: EmbeddingParams
    kind: str = CROSS_CRP

    @property
    def shape(self):
        return self.bits.shape

    def diagonal(self) -> np.ndarray:
        return diagonal_targets(self)


@dataclass(frozen=True)
class RqaMeasures:
    rr: float
    det: float
    dmax: int


def threshold_distances(x: np.ndarray, y: np.ndarray, epsilon: float) -> np.ndarray:
    """``out[..., i, j] = ||x[..., i, :] - y[..., j, :]|| <= epsilon``.

    Works on single matrices ``(T, D)`` or stacks ``(n, T, D)``; distances
    are formed from explicit differences (no ``a^2 + b^2 - 2ab`` expansion),
    so ties at exactly ``epsilon`` resolve deterministically to 1.
    """
    if epsilon <= 0:
        raise DataError(f"epsilon must be positive, got {epsilon}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[-1] != y.shape[-1]:
        raise DimensionMismatch(f"state widths differ: {x.shape[-1]} vs {y.shape[-1]}")
    rows = x.shape[-2]
    out = np.empty(x.shape[:-1] + (y.shape[-2],), dtype=bool)
    # keep each temporary near BLOCK_ROWS * cols * width elements
    lead = int(np.prod(x.shape[:-2], dtype=np.int64))
    step = max(1, BLOCK_ROWS // max(1, lead))
    for r0 in range(0, rows, step):
        r1 = min(rows, r0 + step)
        diff = x[..., r0:r1, None, :] - y[..., None, :, :]
        dist = np.sqrt(np.einsum("...d,...d->...", diff, diff))
        out[..., r0:r1, :] = dist <= epsilon
    return out


def recurrence_plot(e: EmbeddedSeries, epsilon: float) -> RecurrenceMatrix:
    bits = threshold_distances(e.states, e.states, epsilon)
    return RecurrenceMatrix(bits, float(epsilon), e.params, SELF_RP)


def cross_recurrence_plot(a: EmbeddedSeries, b: EmbeddedSeries, epsilon: float) -> RecurrenceMatrix:
    """Bit ``(i, j)`` is set when state ``i`` of ``a`` lies within ``epsilon`` of state ``j`` of ``b``."""
    if a.params != b.params:
        raise DimensionMismatch(f"embedding params differ: {a.params} vs {b.params}")
    if a.width != b.width:
        raise DimensionMismatch(f"state widths differ: {a.width} vs {b.width}")
    bits = threshold_distances(a.states, b.states, epsilon)
    return RecurrenceMatrix(bits, float(epsilon), a.params, CROSS_CRP)


def diagonal_targets(m) -> np.ndarray:
    """Main diagonal of a square recurrence matrix as a uint8 vector."""
    bits = m.bits if isinstance(m, RecurrenceMatrix) else np.asarray(m)
    if bits.ndim != 2 or bits.shape[0] != bits.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {bits.shape}")
    return np.diagonal(bits).astype(np.uint8)


def _run_lengths(v: np.ndarray) -> np.ndarray:
    """Lengths of the runs of ones in a 1-D 0/1 vector."""
    padded = np.concatenate(([0], v.astype(np.int8), [0]))
    edges = np.diff(padded)
    return np.flatnonzero(edges == -1) - np.flatnonzero(edges == 1)


def diagonal_line_lengths(bits: np.ndarray, skip_main: bool = False) -> np.ndarray:
    rows, cols = bits.shape
    runs = []
    for off in range(-(rows - 1), cols):
        if skip_main and off == 0:
            continue
        runs.append(_run_lengths(np.diagonal(bits, offset=off)))
    return np.concatenate(runs) if runs else np.zeros(0, dtype=int)


def rqa_measures(m: RecurrenceMatrix, l_min: int = 2) -> RqaMeasures:
    """Recurrence rate, determinism and longest diagonal line.

    For self recurrence plots the line of identity is left out of every
    count, including the denominator of the recurrence rate.

    The determinism denominator only counts recurrences on diagonals at least
    ``l_min`` cells long. Corner diagonals shorter than that can never hold a
    line, so a saturated matrix has DET = 1 regardless of its size.
    """
    if l_min < 2:
        raise DataError(f"l_min must be >= 2, got {l_min}")
    bits = np.asarray(m.bits, dtype=bool)
    rows, cols = bits.shape
    is_self = m.kind == SELF_RP
    ones = int(bits.sum())
    cells = rows * cols
    if is_self:
        ones -= int(np.trace(bits))
        cells -= min(rows, cols)
    lines = diagonal_line_lengths(bits, skip_main=is_self)
    rr = ones / cells if cells else 0.0
    offsets = np.arange(-(rows - 1), cols)
    short = offsets[np.minimum(rows + np.minimum(offsets, 0), cols - np.maximum(offsets, 0)) < l_min]
    eligible = ones - sum(int(np.trace(bits, k)) for k in short if not (is_self and k == 0))
    det = float(lines[lines >= l_min].sum()) / eligible if eligible else 0.0
    dmax = int(lines.max()) if lines.size else 0
    return RqaMeasures(rr=rr, det=det, dmax=dmax)


def render_pgm(m, path) -> Path:
    """Write a binary PGM (P5): recurrent cells black, others white, row 0 on top."""
    bits = np.asarray(m.bits if isinstance(m, RecurrenceMatrix) else m, dtype=bool)
    if bits.ndim != 2 or bits.size == 0:
        raise DataError(f"cannot render an empty matrix of shape {bits.shape}")
    height, width = bits.shape
    pixels = np.where(bits, 0, 255).astype(np.uint8)
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
    return path


def read_pgm(path) -> np.ndarray:
    """Read back a P5 image written by :func:`render_pgm` as a bool matrix."""
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise DataError(f"{path}: not a binary PGM")
    width, height, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise DataError(f"{path}: unsupported maxval {maxval}")
    pixels = np.frombuffer(parts[4][: width * height], dtype=np.uint8)
    return pixels.reshape(height, width) == 0
