"""Forward/backward kernels for the CNN, on plain numpy arrays.

Every ``*_forward`` returns ``(output, cache)`` and the matching
``*_backward`` takes ``(grad_output, cache)``. Image tensors are laid out
``(batch, channels, height, width)``.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeMismatch


def conv_output_size(size: int, kernel: int, stride: int = 1, padding: int = 0) -> int:
    return (size - kernel + 2 * padding) // stride + 1


def conv2d_forward(x, kernel, bias, stride=1, padding=0):
    """2-D cross-correlation (no kernel flip).

    x: (n, c, h, w); kernel: (f, c, r, s); bias: (f,) -> y: (n, f, oh, ow)
    """
    n, c, h, w = x.shape
    f, ck, r, s = kernel.shape
    if ck != c:
        raise ShapeMismatch(f"input has {c} channels, kernel expects {ck}")
    if bias.shape != (f,):
        raise ShapeMismatch(f"bias shape {bias.shape} != ({f},)")
    if h + 2 * padding < r or w + 2 * padding < s:
        raise ShapeMismatch(f"input {h}x{w} (padding {padding}) smaller than kernel {r}x{s}")
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    oh = conv_output_size(h, r, stride, padding)
    ow = conv_output_size(w, s, stride, padding)
    win = sliding_window_view(x, (r, s), axis=(2, 3))[:, :, : (oh - 1) * stride + 1 : stride,
                                                      : (ow - 1) * stride + 1 : stride]
    # (n, c, oh, ow, r, s) -> (n*oh*ow, c*r*s)
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, c * r * s)
    y = cols @ kernel.reshape(f, -1).T + bias
    y = y.reshape(n, oh, ow, f).transpose(0, 3, 1, 2)
    return np.ascontiguousarray(y), (x.shape, cols, kernel, stride, padding)


def conv2d_backward(dy, cache):
    """Gradients ``(dx, dkernel, dbias)`` of a convolution."""
    xp_shape, cols, kernel, stride, padding = cache
    n, c, hp, wp = xp_shape
    f, _, r, s = kernel.shape
    _, _, oh, ow = dy.shape
    dy2 = dy.transpose(0, 2, 3, 1).reshape(n * oh * ow, f)
    dkernel = (dy2.T @ cols).reshape(kernel.shape)
    dbias = dy.sum(axis=(0, 2, 3))
    dcols = (dy2 @ kernel.reshape(f, -1)).reshape(n, oh, ow, c, r, s)
    dxp = np.zeros(xp_shape, dtype=dy.dtype)
    for i in range(r):
        for j in range(s):
            dxp[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride] += (
                dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
            )
    if padding:
        dxp = dxp[:, :, padding:-padding, padding:-padding]
    return dxp, dkernel, dbias


def relu_forward(x):
    return np.maximum(x, 0), x


def relu_backward(dy, cache):
    # subgradient 0 at x == 0
    return dy * (cache > 0)


def maxpool2d_forward(x, p=2):
    """Non-overlapping ``p x p`` max pooling; trailing rows/cols are dropped."""
    n, c, h, w = x.shape
    oh, ow = h // p, w // p
    if oh < 1 or ow < 1:
        raise ShapeMismatch(f"input {h}x{w} smaller than pool {p}x{p}")
    patches = (
        x[:, :, : oh * p, : ow * p]
        .reshape(n, c, oh, p, ow, p)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, oh, ow, p * p)
    )
    arg = patches.argmax(axis=-1)  # first index wins ties
    y = np.take_along_axis(patches, arg[..., None], axis=-1)[..., 0]
    return y, (x.shape, arg, p)


def maxpool2d_backward(dy, cache):
    shape, arg, p = cache
    n, c, h, w = shape
    oh, ow = arg.shape[2:]
    dpatch = np.zeros((n, c, oh, ow, p * p), dtype=dy.dtype)
    np.put_along_axis(dpatch, arg[..., None], dy[..., None], axis=-1)
    dx = np.zeros(shape, dtype=dy.dtype)
    dx[:, :, : oh * p, : ow * p] = (
        dpatch.reshape(n, c, oh, ow, p, p).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, oh * p, ow * p)
    )
    return dx


def dense_forward(x, weight, bias):
    """``y = x @ W.T + b`` with x: (n, in), W: (out, in), b: (out,)."""
    if x.shape[-1] != weight.shape[1]:
        raise ShapeMismatch(f"input width {x.shape[-1]} != weight in-features {weight.shape[1]}")
    return x @ weight.T + bias, (x, weight)


def dense_backward(dy, cache):
    x, weight = cache
    return dy @ weight, dy.T @ x, dy.sum(axis=0)


def sigmoid(z):
    """Logistic function without overflow for large ``|z|``."""
    z = np.asarray(z, dtype=np.result_type(z, np.float32))
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def softplus(z):
    """``log(1 + exp(z))`` computed stably."""
    z = np.asarray(z, dtype=np.result_type(z, np.float32))
    return np.maximum(z, 0) + np.log1p(np.exp(-np.abs(z)))


def weighted_bce(logits, targets, weights=(1.0, 1.0)):
    """Class-weighted binary cross-entropy from logits.

    Per example ``weight[t] * (softplus(z) - t*z)``, which equals
    ``-weight[t] * (t log s(z) + (1-t) log(1 - s(z)))``. Returns the batch
    mean and its gradient with respect to the logits.
    """
    z = np.asarray(logits)
    t = np.asarray(targets, dtype=z.dtype)
    wt = np.where(t > 0.5, weights[1], weights[0]).astype(z.dtype)
    loss = wt * (softplus(z) - t * z)
    grad = wt * (sigmoid(z) - t) / z.size
    return float(loss.mean()), grad
