import numpy as np

from ..errors import NonFiniteError, ShapeError


__all__ = ("Tensor", "as_array")


def as_array(value):
    if isinstance(value, Tensor):
        return value.data

    return np.asarray(value, dtype=np.float64)


class Tensor:
    """
    n-dimensional float64 array with an optional gradient

    Tensors produced by an op remember their parents and a closure mapping the
    output gradient to one gradient per parent; backward() walks that graph in
    reverse topological order and accumulates into the leaves.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, name=None):
        data = np.array(data, dtype=np.float64)
        if data.ndim == 0:
            data = data.reshape(())

        if not np.all(np.isfinite(data)):
            raise NonFiniteError(name or "tensor")

        self.data = data
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents = ()
        self._backward = None

    @classmethod
    def from_op(cls, data, parents, backward, op):
        data = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(data)):
            raise NonFiniteError(op)

        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.name = op
        out.requires_grad = any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = tuple(parents)
            out._backward = backward

        else:
            out._parents = ()
            out._backward = None

        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return self._backward is None

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def detach(self):
        return Tensor(self.data, name=self.name)

    def zero_grad(self):
        self.grad = None

    def _topological_order(self):
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue

            if id(node) in seen:
                continue

            seen.add(id(node))
            stack.append((node, True))
            for parent in reversed(node._parents):
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))

        return order

    def backward(self, grad=None):
        if not self.requires_grad:
            return

        if grad is None:
            if self.size != 1:
                raise ShapeError("scalar output", self.shape, what="backward seed")

            grad = np.ones_like(self.data)

        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != self.shape:
            raise ShapeError(self.shape, grad.shape, what="gradient")

        pending = {id(self): grad}
        for node in reversed(self._topological_order()):
            g = pending.pop(id(node), None)
            if g is None:
                continue

            if node.is_leaf:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue

            for parent, parent_grad in zip(node._parents, node._backward(g)):
                if parent_grad is None or not parent.requires_grad:
                    continue

                if id(parent) in pending:
                    pending[id(parent)] = pending[id(parent)] + parent_grad

                else:
                    pending[id(parent)] = parent_grad

    def __repr__(self):
        grad = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{grad})"
