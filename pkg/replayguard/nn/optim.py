import dataclasses

import numpy as np

from ..errors import NonFiniteGradientError, ShapeError


__all__ = ("AdamHyper", "AdamState", "adam_step")


@dataclasses.dataclass(frozen=True)
class AdamHyper:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 0.1

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must not be negative")

        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")

        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclasses.dataclass
class AdamState:
    m: dict = dataclasses.field(default_factory=dict)
    v: dict = dataclasses.field(default_factory=dict)
    step_count: int = 0

    @classmethod
    def fresh(cls, params):
        return cls(
            {name: np.zeros_like(p.data) for name, p in params.items()},
            {name: np.zeros_like(p.data) for name, p in params.items()},
        )

    def copy(self):
        return AdamState(
            {k: v.copy() for k, v in self.m.items()},
            {k: v.copy() for k, v in self.v.items()},
            self.step_count,
        )


def adam_step(params, state, hyper=AdamHyper(), grads=None):
    """
    One Adam update in place, epsilon outside the square root:
        p <- p - lr * m_hat / (sqrt(v_hat) + eps)

    grads defaults to each parameter's accumulated .grad; a missing gradient
    counts as zero. Any non-finite gradient aborts before anything changes.
    """
    if grads is None:
        grads = {name: p.grad for name, p in params.items()}

    resolved = {}
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)

        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.shape:
            raise ShapeError(p.shape, g.shape, what=f"gradient of {name}")

        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(name)

        resolved[name] = g

    for name, p in params.items():
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)

    state.step_count += 1
    t = state.step_count
    correction1 = 1.0 - hyper.beta1 ** t
    correction2 = 1.0 - hyper.beta2 ** t
    for name, p in params.items():
        g = resolved[name]
        m = state.m[name] = hyper.beta1 * state.m[name] + (1.0 - hyper.beta1) * g
        v = state.v[name] = hyper.beta2 * state.v[name] + (1.0 - hyper.beta2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        p.data -= hyper.learning_rate * m_hat / (np.sqrt(v_hat) + hyper.epsilon)

    return params, state
