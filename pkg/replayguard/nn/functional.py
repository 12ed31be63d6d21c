import numpy as np

from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import log_softmax

from ..enums import Activation, Padding
from ..errors import ShapeError
from .tensor import Tensor, as_array


__all__ = (
    "conv2d",
    "pool_extent",
    "maxpool2d",
    "mfm",
    "relu",
    "elu",
    "identity",
    "activation",
    "linear",
    "flatten",
    "dropout",
    "softmax_cross_entropy",
    "cross_entropy",
    "sum_of_squares",
    "weighted_sum",
)


def _same_pads(k):
    total = k - 1
    low = total // 2
    return low, total - low


def conv2d(x, weight, bias=None, padding=Padding.SAME):
    """
    Stride-1 cross-correlation of x[N,C,H,W] with weight[K,C,kh,kw] plus bias[K]

    Same padding splits the zero pad evenly, extra on the high-index side.
    """
    padding = Padding(padding)
    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeError("4-D input and kernel", (x.shape, weight.shape))

    n, c, h, w = x.shape
    k, kc, kh, kw = weight.shape
    if c != kc:
        raise ShapeError(kc, c, what="input channels")

    if bias is not None and bias.shape != (k,):
        raise ShapeError((k,), bias.shape, what="bias")

    if padding is Padding.SAME:
        (top, bottom), (left, right) = _same_pads(kh), _same_pads(kw)

    else:
        top = bottom = left = right = 0

    xp = np.pad(x.data, ((0, 0), (0, 0), (top, bottom), (left, right)))
    if kh > xp.shape[2] or kw > xp.shape[3]:
        raise ShapeError(f"kernel <= padded input {xp.shape[2:]}", (kh, kw), what="kernel")

    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    out = np.einsum("nchwij,kcij->nkhw", windows, weight.data, optimize=True)
    if bias is not None:
        out = out + bias.data[None, :, None, None]

    out_h, out_w = out.shape[2:]

    def _backward(g):
        dx = None
        if x.requires_grad:
            dxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    dxp[:, :, i : i + out_h, j : j + out_w] += np.einsum(
                        "nkhw,kc->nchw", g, weight.data[:, :, i, j], optimize=True
                    )

            dx = dxp[:, :, top : top + h, left : left + w]

        dw = None
        if weight.requires_grad:
            dw = np.einsum("nkhw,nchwij->kcij", g, windows, optimize=True)

        db = g.sum(axis=(0, 2, 3)) if bias is not None and bias.requires_grad else None
        return dx, dw, db

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.from_op(out, parents, _backward, "conv2d")


def pool_extent(n, kernel, stride, ceil_mode):
    """
    Output length of one pooled axis; in ceil mode a partial window at the high
    edge counts as long as it starts inside the input
    """
    if ceil_mode:
        if n <= kernel:
            return 1

        out = -(-(n - kernel) // stride) + 1
        if (out - 1) * stride >= n:
            out -= 1

        return out

    if n < kernel:
        return 0

    return (n - kernel) // stride + 1


def maxpool2d(x, kernel=(3, 3), stride=(3, 3), ceil_mode=True):
    if x.ndim != 4:
        raise ShapeError("4-D input", x.shape)

    n, c, h, w = x.shape
    kh, kw = kernel
    sh, sw = stride
    out_h = pool_extent(h, kh, sh, ceil_mode)
    out_w = pool_extent(w, kw, sw, ceil_mode)
    if out_h == 0 or out_w == 0:
        raise ShapeError(f"at least {kernel}", (h, w), what="pooling input")

    need_h = (out_h - 1) * sh + kh
    need_w = (out_w - 1) * sw + kw
    xp = np.full((n, c, max(h, need_h), max(w, need_w)), -np.inf)
    xp[:, :, :h, :w] = x.data
    xp = xp[:, :, :need_h, :need_w]

    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::sh, ::sw]
    flat = windows.reshape(n, c, out_h, out_w, kh * kw)
    arg = np.argmax(flat, axis=-1)
    out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]

    def _backward(g):
        rows = np.arange(out_h)[:, None] * sh + arg // kw
        cols = np.arange(out_w)[None, :] * sw + arg % kw
        ni, ci = np.meshgrid(np.arange(n), np.arange(c), indexing="ij")
        ni = np.broadcast_to(ni[:, :, None, None], arg.shape)
        ci = np.broadcast_to(ci[:, :, None, None], arg.shape)
        dx = np.zeros((n, c, need_h, need_w))
        np.add.at(dx, (ni, ci, rows, cols), g)
        full = np.zeros((n, c, h, w))
        full[:, :, : min(h, need_h), : min(w, need_w)] = dx[:, :, :h, :w]
        return (full,)

    return Tensor.from_op(out, (x,), _backward, "maxpool2d")


def mfm(x):
    """
    Max-feature-map over axis 1: out_i = max(x_i, x_{i+k}), first half wins ties
    """
    if x.ndim not in (2, 4):
        raise ShapeError("2-D or 4-D input", x.shape)

    extent = x.shape[1]
    if extent % 2:
        raise ShapeError("even extent", extent, what="max-feature-map axis")

    half = extent // 2
    first, second = x.data[:, :half], x.data[:, half:]
    mask = first >= second
    out = np.where(mask, first, second)

    def _backward(g):
        return (np.concatenate([g * mask, g * ~mask], axis=1),)

    return Tensor.from_op(out, (x,), _backward, "mfm")


def relu(x):
    positive = x.data > 0

    def _backward(g):
        return (g * positive,)

    return Tensor.from_op(np.where(positive, x.data, 0.0), (x,), _backward, "relu")


def elu(x, alpha=1.0):
    positive = x.data > 0
    negative_part = alpha * np.expm1(np.minimum(x.data, 0.0))

    def _backward(g):
        return (np.where(positive, g, g * (negative_part + alpha)),)

    return Tensor.from_op(
        np.where(positive, x.data, negative_part), (x,), _backward, "elu"
    )


def identity(x):
    return x


def activation(x, kind, alpha=1.0):
    kind = Activation(kind)
    if kind is Activation.MFM:
        return mfm(x)

    if kind is Activation.RELU:
        return relu(x)

    if kind is Activation.ELU:
        return elu(x, alpha)

    return identity(x)


def linear(x, weight, bias=None):
    if x.ndim != 2 or weight.ndim != 2:
        raise ShapeError("2-D input and weight", (x.shape, weight.shape))

    if x.shape[1] != weight.shape[0]:
        raise ShapeError(weight.shape[0], x.shape[1], what="inner dimension")

    if bias is not None and bias.shape != (weight.shape[1],):
        raise ShapeError((weight.shape[1],), bias.shape, what="bias")

    out = x.data @ weight.data
    if bias is not None:
        out = out + bias.data

    def _backward(g):
        dx = g @ weight.data.T if x.requires_grad else None
        dw = x.data.T @ g if weight.requires_grad else None
        db = g.sum(axis=0) if bias is not None and bias.requires_grad else None
        return dx, dw, db

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.from_op(out, parents, _backward, "linear")


def flatten(x):
    shape = x.shape

    def _backward(g):
        return (g.reshape(shape),)

    return Tensor.from_op(x.data.reshape(shape[0], -1), (x,), _backward, "flatten")


def dropout(x, rate, rng=None, training=True):
    """
    Inverted dropout: survivors scaled by 1/(1 - rate) so inference is identity
    """
    if not 0 <= rate < 1:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")

    if not training or rate == 0:
        return x

    if rng is None:
        raise ValueError("training-mode dropout needs a random generator")

    scale = (rng.random(x.shape) >= rate) / (1.0 - rate)

    def _backward(g):
        return (g * scale,)

    return Tensor.from_op(x.data * scale, (x,), _backward, "dropout")


def softmax_cross_entropy(logits, labels):
    """
    Mean negative log-softmax of the labelled class and its gradient
    (softmax - one_hot) / N with respect to the logits
    """
    z = as_array(logits)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if z.ndim != 2 or z.shape[0] != labels.size:
        raise ShapeError((labels.size, "C"), z.shape, what="logits")

    if labels.size and (labels.min() < 0 or labels.max() >= z.shape[1]):
        raise ValueError(f"labels must lie in [0, {z.shape[1]})")

    n = labels.size
    log_p = log_softmax(z, axis=1)
    rows = np.arange(n)
    loss = -log_p[rows, labels].mean()
    grad = np.exp(log_p)
    grad[rows, labels] -= 1.0
    return float(loss), grad / n


def cross_entropy(logits, labels):
    loss, grad = softmax_cross_entropy(logits, labels)

    def _backward(g):
        return (g * grad,)

    return Tensor.from_op(np.array(loss), (logits,), _backward, "cross_entropy")


def sum_of_squares(x):
    def _backward(g):
        return (2.0 * g * x.data,)

    return Tensor.from_op(np.sum(x.data ** 2), (x,), _backward, "sum_of_squares")


def weighted_sum(x, weights):
    weights = np.broadcast_to(np.asarray(weights, dtype=np.float64), x.shape)

    def _backward(g):
        return (g * weights,)

    return Tensor.from_op(np.sum(x.data * weights), (x,), _backward, "weighted_sum")
