import numpy as np

from .tensor import Tensor


__all__ = ("relative_error", "grad_check", "grad_check_parameters")


def relative_error(analytic, numeric):
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denominator = np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
    return np.abs(analytic - numeric) / denominator


def _central_difference(f, tensor, index, h):
    flat = tensor.data.reshape(-1)
    original = flat[index]
    try:
        flat[index] = original + h
        upper = f().item()
        flat[index] = original - h
        lower = f().item()
    finally:
        flat[index] = original

    return (upper - lower) / (2.0 * h)


def grad_check(f, x, h=1e-4, indices=None):
    """
    Largest relative error between reverse-mode and central-difference
    gradients of the scalar function f at x, over all (or the given flat)
    coordinates
    """
    if not isinstance(x, Tensor):
        x = Tensor(x)

    x.requires_grad = True
    x.zero_grad()
    f(x).backward()
    analytic = x.grad.reshape(-1) if x.grad is not None else np.zeros(x.size)

    if indices is None:
        indices = range(x.size)

    worst = 0.0
    for index in indices:
        numeric = _central_difference(lambda: f(x), x, index, h)
        worst = max(worst, float(relative_error(analytic[index], numeric)))

    return worst


def grad_check_parameters(loss_fn, params, h=1e-4, max_coords=None, rng=None):
    """
    grad_check over a dict of parameter tensors; loss_fn() rebuilds the scalar
    loss from the current parameter values. With max_coords, that many
    coordinates are drawn per tensor from rng.
    """
    for p in params.values():
        p.zero_grad()

    loss_fn().backward()
    analytic = {
        name: p.grad.reshape(-1).copy() if p.grad is not None else np.zeros(p.size)
        for name, p in params.items()
    }

    worst = 0.0
    for name, p in params.items():
        if max_coords is not None and max_coords < p.size:
            indices = rng.choice(p.size, size=max_coords, replace=False)

        else:
            indices = range(p.size)

        for index in indices:
            numeric = _central_difference(loss_fn, p, index, h)
            worst = max(worst, float(relative_error(analytic[name][index], numeric)))

    return worst
