import math

import numpy as np

from .tensor import Tensor


__all__ = ("fans", "xavier_bound", "xavier_init", "zeros")


def fans(shape):
    """
    (fan_in, fan_out): linear weights are [D, M]; conv kernels are
    [K, C, kh, kw] with fan_in = C*kh*kw and fan_out = K*kh*kw
    """
    shape = tuple(shape)
    if len(shape) == 2:
        return shape[0], shape[1]

    if len(shape) == 4:
        k, c, kh, kw = shape
        return c * kh * kw, k * kh * kw

    if len(shape) == 1:
        return shape[0], shape[0]

    raise ValueError(f"no fan convention for shape {shape}")


def xavier_bound(shape):
    fan_in, fan_out = fans(shape)
    return math.sqrt(6.0 / (fan_in + fan_out))


def xavier_init(shape, rng, name=None):
    if not shape or min(shape) <= 0:
        raise ValueError(f"degenerate shape {shape}")

    a = xavier_bound(shape)
    return Tensor(rng.uniform(-a, a, size=tuple(shape)), requires_grad=True, name=name)


def zeros(shape, name=None):
    return Tensor(np.zeros(tuple(shape)), requires_grad=True, name=name)
