import dataclasses
import logging
import pathlib

import numpy as np

from . import nn
from .enums import Activation, LayerKind, Padding
from .errors import ModelConfigError, ShapeError
from .util import make_rng


__all__ = (
    "DEFAULT_LABELS",
    "LayerSpec",
    "ModelConfig",
    "Network",
    "model3_default",
    "with_activation",
    "shape_trace",
    "count_params",
    "build",
    "forward",
    "embed",
    "posteriors",
    "swap_output_units",
)

log = logging.getLogger(__name__)

# output unit order: index 0 = spoofed, index 1 = genuine
DEFAULT_LABELS = ("spoofed", "genuine")


def _pair(value):
    if isinstance(value, str):
        first, sep, second = value.lower().partition("x")
        if not sep:
            raise ValueError(f"expected AxB, got {value!r}")

        return int(first), int(second)

    first, second = value
    return int(first), int(second)


def _flag(value):
    if isinstance(value, bool):
        return value

    token = str(value).lower()
    if token in ("yes", "true", "1", "y"):
        return True

    if token in ("no", "false", "0", "n"):
        return False

    raise ValueError(f"expected yes/no, got {value!r}")


def _yes(flag):
    return "yes" if flag else "no"


@dataclasses.dataclass(frozen=True)
class LayerSpec:
    kind: LayerKind
    filters: int = 0
    kernel: tuple = (1, 1)
    stride: tuple = (1, 1)
    padding: Padding = Padding.SAME
    ceil: bool = True
    bias: bool = True
    fn: Activation = Activation.IDENTITY
    alpha: float = 1.0
    rate: float = 0.0
    width: int = 0

    @classmethod
    def conv(cls, filters, kernel=(1, 9), padding=Padding.SAME, bias=True):
        return cls(LayerKind.CONV, filters=filters, kernel=_pair(kernel), padding=Padding(padding), bias=bias)

    @classmethod
    def maxpool(cls, kernel=(3, 3), stride=(3, 3), ceil=True):
        return cls(LayerKind.MAXPOOL, kernel=_pair(kernel), stride=_pair(stride), ceil=ceil)

    @classmethod
    def activation(cls, fn, alpha=1.0):
        return cls(LayerKind.ACTIVATION, fn=Activation(fn), alpha=alpha)

    @classmethod
    def flatten(cls):
        return cls(LayerKind.FLATTEN)

    @classmethod
    def dropout(cls, rate):
        return cls(LayerKind.DROPOUT, rate=rate)

    @classmethod
    def linear(cls, width, bias=True):
        return cls(LayerKind.LINEAR, width=width, bias=bias)

    def to_line(self):
        if self.kind is LayerKind.CONV:
            kh, kw = self.kernel
            return (
                f"conv filters={self.filters} kernel={kh}x{kw} "
                f"pad={self.padding.value} bias={_yes(self.bias)}"
            )

        if self.kind is LayerKind.MAXPOOL:
            return (
                f"maxpool kernel={self.kernel[0]}x{self.kernel[1]} "
                f"stride={self.stride[0]}x{self.stride[1]} ceil={_yes(self.ceil)}"
            )

        if self.kind is LayerKind.ACTIVATION:
            line = f"activation fn={self.fn.value}"
            if self.alpha != 1.0:
                line += f" alpha={self.alpha!r}"

            return line

        if self.kind is LayerKind.DROPOUT:
            return f"dropout rate={self.rate!r}"

        if self.kind is LayerKind.LINEAR:
            return f"linear width={self.width} bias={_yes(self.bias)}"

        return "flatten"

    @classmethod
    def from_line(cls, line, index=None):
        kind, *settings = line.split()
        try:
            options = dict(setting.split("=", 1) for setting in settings)
        except ValueError:
            raise ModelConfigError(index, f"settings must be key=value: {line!r}")

        try:
            kind = LayerKind(kind.lower())
            if kind is LayerKind.CONV:
                spec = cls.conv(
                    int(options.pop("filters")),
                    options.pop("kernel", "1x9"),
                    options.pop("pad", Padding.SAME.value),
                    _flag(options.pop("bias", "yes")),
                )

            elif kind is LayerKind.MAXPOOL:
                spec = cls.maxpool(
                    options.pop("kernel", "3x3"),
                    options.pop("stride", "3x3"),
                    _flag(options.pop("ceil", "yes")),
                )

            elif kind is LayerKind.ACTIVATION:
                spec = cls.activation(options.pop("fn"), float(options.pop("alpha", 1.0)))

            elif kind is LayerKind.DROPOUT:
                spec = cls.dropout(float(options.pop("rate")))

            elif kind is LayerKind.LINEAR:
                spec = cls.linear(int(options.pop("width")), _flag(options.pop("bias", "yes")))

            else:
                spec = cls.flatten()

        except KeyError as e:
            raise ModelConfigError(index, f"missing setting {e.args[0]!r}")

        except ValueError as e:
            raise ModelConfigError(index, str(e))

        if options:
            raise ModelConfigError(index, f"unknown settings {sorted(options)}")

        return spec

    def output_shape(self, shape, index=None):
        """
        Propagates an input shape (C, H, W) or (D,) through this layer
        """

        def fail(reason):
            raise ModelConfigError(index, f"{self.kind.value}: {reason} (input {shape})")

        if self.kind is LayerKind.CONV:
            if len(shape) != 3:
                fail("needs a channels x time x frequency input")

            if self.filters <= 0 or min(self.kernel) <= 0:
                fail("filters and kernel must be positive")

            _, h, w = shape
            if self.padding is Padding.VALID:
                h, w = h - self.kernel[0] + 1, w - self.kernel[1] + 1
                if h <= 0 or w <= 0:
                    fail("kernel larger than input")

            return self.filters, h, w

        if self.kind is LayerKind.MAXPOOL:
            if len(shape) != 3:
                fail("needs a channels x time x frequency input")

            if min(self.kernel) <= 0 or min(self.stride) <= 0:
                fail("kernel and stride must be positive")

            c, h, w = shape
            h = nn.pool_extent(h, self.kernel[0], self.stride[0], self.ceil)
            w = nn.pool_extent(w, self.kernel[1], self.stride[1], self.ceil)
            if h == 0 or w == 0:
                fail("pooling window larger than input")

            return c, h, w

        if self.kind is LayerKind.ACTIVATION:
            if self.fn is Activation.MFM:
                if shape[0] % 2:
                    fail(f"mfm needs an even extent, got {shape[0]}")

                return (shape[0] // 2, *shape[1:])

            return tuple(shape)

        if self.kind is LayerKind.FLATTEN:
            return (int(np.prod(shape)),)

        if self.kind is LayerKind.DROPOUT:
            if not 0 <= self.rate < 1:
                fail("rate must lie in [0, 1)")

            return tuple(shape)

        if len(shape) != 1:
            fail("linear layers need a flat input")

        if self.width <= 0:
            fail("width must be positive")

        return (self.width,)

    def parameter_shapes(self, shape):
        """(weight shape, bias shape or None) for an input shape, or None"""
        if self.kind is LayerKind.CONV:
            weight = (self.filters, shape[0], *self.kernel)
            return weight, (self.filters,) if self.bias else None

        if self.kind is LayerKind.LINEAR:
            return (shape[0], self.width), (self.width,) if self.bias else None

        return None


@dataclasses.dataclass(frozen=True)
class ModelConfig:
    input_shape: tuple
    layers: tuple
    labels: tuple = DEFAULT_LABELS

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.input_shape) != 3 or min(self.input_shape) <= 0:
            raise ModelConfigError(None, f"input shape must be C x T x F, got {self.input_shape}")

        shape_trace(self)

    def to_text(self):
        lines = [
            "input " + "x".join(str(d) for d in self.input_shape),
            "labels " + " ".join(self.labels),
        ]
        lines.extend(layer.to_line() for layer in self.layers)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        input_shape = None
        labels = DEFAULT_LABELS
        layers = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue

            head, _, rest = line.partition(" ")
            if head == "input":
                try:
                    input_shape = tuple(int(d) for d in rest.strip().lower().split("x"))
                except ValueError:
                    raise ModelConfigError(None, f"bad input shape {rest!r}")

            elif head == "labels":
                labels = tuple(rest.split())

            else:
                layers.append(LayerSpec.from_line(line, len(layers)))

        if input_shape is None:
            raise ModelConfigError(None, "missing 'input CxTxF' line")

        return cls(input_shape, tuple(layers), labels)

    @classmethod
    def load(cls, path):
        return cls.from_text(pathlib.Path(path).read_text(encoding="utf-8"))

    def save(self, path):
        pathlib.Path(path).write_text(self.to_text(), encoding="utf-8")

    def with_input_shape(self, input_shape):
        return dataclasses.replace(self, input_shape=tuple(input_shape))


def model3_default(input_shape=(1, 100, 129)):
    """
    Three conv(16, 1x9, same) -> mfm -> maxpool(3x3/3x3, ceil) stages,
    then flatten -> dropout(0.5) -> linear(32, no bias) -> linear(2)
    """
    stage = (
        LayerSpec.conv(16, (1, 9), Padding.SAME, bias=True),
        LayerSpec.activation(Activation.MFM),
        LayerSpec.maxpool((3, 3), (3, 3), ceil=True),
    )
    layers = stage * 3 + (
        LayerSpec.flatten(),
        LayerSpec.dropout(0.5),
        LayerSpec.linear(32, bias=False),
        LayerSpec.linear(2, bias=True),
    )
    return ModelConfig(tuple(input_shape), layers)


def with_activation(config, fn):
    """
    Replaces every non-linear activation layer with fn
    """
    fn = Activation(fn)
    layers = tuple(
        LayerSpec.activation(fn)
        if layer.kind is LayerKind.ACTIVATION and layer.fn is not Activation.IDENTITY
        else layer
        for layer in config.layers
    )
    return dataclasses.replace(config, layers=layers)


def shape_trace(config):
    """
    [(layer index, layer, output shape)] for every layer, C x T x F or (D,)
    """
    trace = []
    shape = tuple(config.input_shape)
    for index, layer in enumerate(config.layers):
        shape = layer.output_shape(shape, index)
        trace.append((index, layer, shape))

    if shape != (len(config.labels),):
        raise ModelConfigError(
            len(config.layers) - 1 if config.layers else None,
            f"network output {shape} does not match {len(config.labels)} labels",
        )

    return trace


def _parameter_layout(config):
    """
    [(layer index, weight name, weight shape, bias name or None, bias shape)]
    """
    layout = []
    counters = {LayerKind.CONV: 0, LayerKind.LINEAR: 0}
    shape = tuple(config.input_shape)
    for index, layer in enumerate(config.layers):
        shapes = layer.parameter_shapes(shape)
        if shapes is not None:
            counters[layer.kind] += 1
            prefix = f"{layer.kind.value}{counters[layer.kind]}"
            weight_shape, bias_shape = shapes
            layout.append(
                (
                    index,
                    f"{prefix}.weight",
                    weight_shape,
                    f"{prefix}.bias" if bias_shape is not None else None,
                    bias_shape,
                )
            )

        shape = layer.output_shape(shape, index)

    return layout


class Network:
    __slots__ = ("config", "params", "seed", "_layer_params")

    def __init__(self, config, params, seed=None):
        self.config = config
        self.params = dict(params)
        self.seed = seed
        self._layer_params = {}
        for index, weight, weight_shape, bias, bias_shape in _parameter_layout(config):
            for name, expected in ((weight, weight_shape), (bias, bias_shape)):
                if name is None:
                    continue

                if name not in self.params:
                    raise ModelConfigError(index, f"missing parameter {name}")

                if self.params[name].shape != tuple(expected):
                    raise ShapeError(tuple(expected), self.params[name].shape, what=name)

            self._layer_params[index] = (weight, bias)

    def __iter__(self):
        return iter(self.params.items())

    def parameter(self, name):
        return self.params[name]

    def snapshot(self):
        return {name: p.data.copy() for name, p in self.params.items()}

    def load_snapshot(self, values):
        for name, p in self.params.items():
            p.data[...] = values[name]

    def copy(self):
        params = {
            name: nn.Tensor(p.data, requires_grad=p.requires_grad, name=name)
            for name, p in self.params.items()
        }
        return Network(self.config, params, self.seed)

    @classmethod
    def from_arrays(cls, config, arrays, seed=None):
        params = {
            name: nn.Tensor(value, requires_grad=True, name=name)
            for name, value in arrays.items()
        }
        return cls(config, params, seed)

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()


def count_params(model):
    if isinstance(model, Network):
        return sum(p.size for p in model.params.values())

    total = 0
    for _, _, weight_shape, _, bias_shape in _parameter_layout(model):
        total += int(np.prod(weight_shape))
        if bias_shape is not None:
            total += int(np.prod(bias_shape))

    return total


def build(config, seed=0):
    """
    Xavier-uniform weights, zero biases, deterministic per seed
    """
    rng = make_rng(seed, "init")
    params = {}
    for _, weight, weight_shape, bias, bias_shape in _parameter_layout(config):
        params[weight] = nn.xavier_init(weight_shape, rng, name=weight)
        if bias is not None:
            params[bias] = nn.zeros(bias_shape, name=bias)

    return Network(config, params, seed)


def _as_batch(net, batch):
    if not isinstance(batch, nn.Tensor):
        batch = nn.Tensor(batch)

    if batch.ndim != 4 or batch.shape[1:] != net.config.input_shape:
        raise ShapeError(("N", *net.config.input_shape), batch.shape, what="batch")

    return batch


def forward(net, batch, training=False, rng=None, until=None):
    """
    Applies the layers in order to batch[N, C, T, F]; dropout is active only
    when training. With until, stops after that layer index.
    """
    x = _as_batch(net, batch)
    for index, layer in enumerate(net.config.layers):
        kind = layer.kind
        if kind is LayerKind.CONV:
            weight, bias = net._layer_params[index]
            x = nn.conv2d(
                x,
                net.params[weight],
                net.params[bias] if bias is not None else None,
                layer.padding,
            )

        elif kind is LayerKind.MAXPOOL:
            x = nn.maxpool2d(x, layer.kernel, layer.stride, layer.ceil)

        elif kind is LayerKind.ACTIVATION:
            x = nn.activation(x, layer.fn, layer.alpha)

        elif kind is LayerKind.FLATTEN:
            x = nn.flatten(x)

        elif kind is LayerKind.DROPOUT:
            x = nn.dropout(x, layer.rate, rng, training)

        else:
            weight, bias = net._layer_params[index]
            x = nn.linear(
                x,
                net.params[weight],
                net.params[bias] if bias is not None else None,
            )

        if until is not None and index == until:
            break

    return x


def embed(net, batch):
    """
    Inference-mode output of the penultimate linear layer (the 32-unit FC1 of
    Model 3), before any dropout that follows it
    """
    linear_layers = [
        index for index, layer in enumerate(net.config.layers) if layer.kind is LayerKind.LINEAR
    ]
    if len(linear_layers) < 2:
        raise ModelConfigError(None, "embedding needs at least two linear layers")

    return forward(net, batch, training=False, until=linear_layers[-2]).data


def posteriors(logits):
    z = logits.data if isinstance(logits, nn.Tensor) else np.asarray(logits)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def swap_output_units(net):
    """
    Copy of net whose output units are exchanged
    """
    out = net.copy()
    weight, bias = out._layer_params[max(out._layer_params)]
    out.params[weight].data[...] = out.params[weight].data[:, ::-1].copy()
    if bias is not None:
        out.params[bias].data[...] = out.params[bias].data[::-1].copy()

    return out
