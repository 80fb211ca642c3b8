"""The two-convolution, one-dense-layer classifier and its checkpoint format.

Layer stack: conv1 -> ReLU -> maxpool -> conv2 -> ReLU -> maxpool ->
flatten -> dense -> one logit.

Checkpoint layout (``.crpm``, little-endian)::

    4 bytes   magic b"CRPM"
    1 byte    version (1)
    u32       length of the JSON architecture block
    ...       UTF-8 JSON: architecture fields, input side, parameter names
    then for each parameter, in the order listed in the JSON:
      u32 ndim, ndim x u32 dims, prod(dims) x f64 values (C order)
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..errors import DataError, WindowTooSmall
from .layers import (
    conv2d_backward,
    conv2d_forward,
    conv_output_size,
    dense_backward,
    dense_forward,
    maxpool2d_backward,
    maxpool2d_forward,
    relu_backward,
    relu_forward,
    sigmoid,
)

PARAM_NAMES = ("conv1_w", "conv1_b", "conv2_w", "conv2_b", "dense_w", "dense_b")
MAGIC = b"CRPM"
VERSION = 1


@dataclass(frozen=True)
class ArchConfig:
    conv1_filters: int = 16
    conv1_kernel: int = 3
    conv2_filters: int = 32
    conv2_kernel: int = 3
    pool: int = 2
    padding: int = 1

    def feature_shapes(self, side: int) -> list:
        """Spatial size after each stage: conv1, pool1, conv2, pool2."""
        c1 = conv_output_size(side, self.conv1_kernel, 1, self.padding)
        p1 = c1 // self.pool
        c2 = conv_output_size(p1, self.conv2_kernel, 1, self.padding)
        p2 = c2 // self.pool
        return [c1, p1, c2, p2]

    def dense_inputs(self, side: int) -> int:
        return self.conv2_filters * self.feature_shapes(side)[-1] ** 2


@dataclass
class ModelParams:
    arch: ArchConfig
    side: int
    arrays: dict

    def copy(self) -> "ModelParams":
        return ModelParams(self.arch, self.side, {k: v.copy() for k, v in self.arrays.items()})

    def astype(self, dtype) -> "ModelParams":
        return ModelParams(self.arch, self.side, {k: v.astype(dtype) for k, v in self.arrays.items()})


def build_model(side: int, arch: ArchConfig = ArchConfig(), seed: int = 0, dtype=np.float64) -> ModelParams:
    """Fresh parameters for ``side x side`` inputs.

    Weights are drawn from ``U(-sqrt(6/fan_in), sqrt(6/fan_in))``; biases
    start at zero.
    """
    shapes = arch.feature_shapes(side)
    if side < 1 or any(s < 1 for s in shapes) or side + 2 * arch.padding < arch.conv1_kernel:
        raise WindowTooSmall(
            f"input side {side} collapses to {shapes} through the default stack; "
            "use a larger window or a smaller architecture"
        )
    rng = np.random.default_rng(seed)

    def he(shape, fan_in):
        bound = np.sqrt(6.0 / fan_in)
        return rng.uniform(-bound, bound, size=shape).astype(dtype)

    k1, k2 = arch.conv1_kernel, arch.conv2_kernel
    f1, f2 = arch.conv1_filters, arch.conv2_filters
    n_dense = arch.dense_inputs(side)
    arrays = {
        "conv1_w": he((f1, 1, k1, k1), k1 * k1),
        "conv1_b": np.zeros(f1, dtype),
        "conv2_w": he((f2, f1, k2, k2), f1 * k2 * k2),
        "conv2_b": np.zeros(f2, dtype),
        "dense_w": he((1, n_dense), n_dense),
        "dense_b": np.zeros(1, dtype),
    }
    return ModelParams(arch, side, arrays)


def _as_batch(inputs, dtype) -> np.ndarray:
    x = np.asarray(inputs)
    if x.ndim == 2:
        x = x[None]
    if x.ndim == 3:
        x = x[:, None]
    return x.astype(dtype, copy=False)


def forward(model: ModelParams, inputs):
    """Logits ``(n,)`` and the cache needed by :func:`backward`."""
    p = model.arrays
    pad, pool = model.arch.padding, model.arch.pool
    x = _as_batch(inputs, p["conv1_w"].dtype)
    if x.shape[-2:] != (model.side, model.side):
        raise DataError(f"model expects {model.side}x{model.side} inputs, got {x.shape[-2:]}")
    h, c_conv1 = conv2d_forward(x, p["conv1_w"], p["conv1_b"], 1, pad)
    h, c_relu1 = relu_forward(h)
    h, c_pool1 = maxpool2d_forward(h, pool)
    h, c_conv2 = conv2d_forward(h, p["conv2_w"], p["conv2_b"], 1, pad)
    h, c_relu2 = relu_forward(h)
    h, c_pool2 = maxpool2d_forward(h, pool)
    flat_shape = h.shape
    z, c_dense = dense_forward(h.reshape(h.shape[0], -1), p["dense_w"], p["dense_b"])
    cache = (c_conv1, c_relu1, c_pool1, c_conv2, c_relu2, c_pool2, flat_shape, c_dense)
    return z[:, 0], cache


def backward(model: ModelParams, cache, dlogits) -> dict:
    c_conv1, c_relu1, c_pool1, c_conv2, c_relu2, c_pool2, flat_shape, c_dense = cache
    g = {}
    dh, g["dense_w"], g["dense_b"] = dense_backward(dlogits[:, None], c_dense)
    dh = maxpool2d_backward(dh.reshape(flat_shape), c_pool2)
    dh = relu_backward(dh, c_relu2)
    dh, g["conv2_w"], g["conv2_b"] = conv2d_backward(dh, c_conv2)
    dh = maxpool2d_backward(dh, c_pool1)
    dh = relu_backward(dh, c_relu1)
    _, g["conv1_w"], g["conv1_b"] = conv2d_backward(dh, c_conv1)
    return g


# rough cap on im2col elements per prediction batch (~256 MB at float64)
_PREDICT_ELEMENTS = 1 << 25


def predict(model: ModelParams, inputs, batch_size: int | None = None) -> np.ndarray:
    """Probabilities of class 1 for a batch of inputs.

    Without ``batch_size`` the batch is sized so the largest im2col buffer
    stays near ``_PREDICT_ELEMENTS`` elements.
    """
    x = np.asarray(inputs)
    if x.ndim == 2:
        x = x[None]
    if batch_size is None:
        a = model.arch
        c1 = a.feature_shapes(model.side)[1]
        per_example = max(model.side**2 * a.conv1_kernel**2,
                          c1**2 * a.conv1_filters * a.conv2_kernel**2)
        batch_size = max(1, _PREDICT_ELEMENTS // per_example)
    out = [sigmoid(forward(model, x[i : i + batch_size])[0]) for i in range(0, len(x), batch_size)]
    return np.concatenate(out) if out else np.zeros(0)


def classify(probabilities, threshold: float = 0.5) -> np.ndarray:
    return (np.asarray(probabilities) >= threshold).astype(np.uint8)


def save_checkpoint(model: ModelParams, path) -> Path:
    path = Path(path)
    head = {"arch": asdict(model.arch), "side": model.side, "params": list(PARAM_NAMES)}
    blob = json.dumps(head, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC + bytes([VERSION]) + struct.pack("<I", len(blob)) + blob)
        for name in PARAM_NAMES:
            arr = np.ascontiguousarray(model.arrays[name], dtype="<f8")
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())
    return path


def load_checkpoint(path) -> ModelParams:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise DataError(f"{path}: not a model checkpoint")
    if data[4] != VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {data[4]}")
    (mlen,) = struct.unpack_from("<I", data, 5)
    pos = 9
    head = json.loads(data[pos : pos + mlen].decode("utf-8"))
    pos += mlen
    arrays = {}
    for name in head["params"]:
        (ndim,) = struct.unpack_from("<I", data, pos)
        pos += 4
        shape = struct.unpack_from(f"<{ndim}I", data, pos)
        pos += 4 * ndim
        count = int(np.prod(shape, dtype=np.int64))
        arrays[name] = np.frombuffer(data, "<f8", count, pos).reshape(shape).astype(np.float64)
        pos += 8 * count
    return ModelParams(ArchConfig(**head["arch"]), int(head["side"]), arrays)
