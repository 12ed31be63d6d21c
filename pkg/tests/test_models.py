import numpy as np
import pytest

from numpy.testing import assert_allclose, assert_array_equal

from replayguard.enums import Activation, LayerKind, Padding
from replayguard.errors import ModelConfigError, ShapeError
from replayguard.models import *
from replayguard.nn import Tensor

from .conftest import tiny_config


MODEL3_TRACE = [
    (16, 100, 129),
    (8, 100, 129),
    (8, 34, 43),
    (16, 34, 43),
    (8, 34, 43),
    (8, 12, 15),
    (16, 12, 15),
    (8, 12, 15),
    (8, 4, 5),
    (160,),
    (160,),
    (32,),
    (2,),
]


def test_model3_parameter_count():
    config = model3_default()
    assert count_params(config) == 7682
    assert count_params(build(config)) == 7682


def test_model3_shape_trace():
    trace = shape_trace(model3_default())
    assert [shape for _, _, shape in trace] == MODEL3_TRACE
    assert [index for index, _, _ in trace] == list(range(13))


def test_model3_parameters():
    net = build(model3_default(), seed=0)
    assert sorted(net.params) == [
        "conv1.bias",
        "conv1.weight",
        "conv2.bias",
        "conv2.weight",
        "conv3.bias",
        "conv3.weight",
        "linear1.weight",
        "linear2.bias",
        "linear2.weight",
    ]
    assert net.params["conv1.weight"].shape == (16, 1, 1, 9)
    assert net.params["conv2.weight"].shape == (16, 8, 1, 9)
    assert net.params["linear1.weight"].shape == (160, 32)
    assert net.params["linear2.weight"].shape == (32, 2)
    for name in ("conv1.bias", "conv2.bias", "conv3.bias", "linear2.bias"):
        assert not net.params[name].data.any()


def test_floor_pooling_changes_parameter_count():
    config = model3_default()
    layers = tuple(
        LayerSpec.maxpool(layer.kernel, layer.stride, ceil=False) if layer.kind is LayerKind.MAXPOOL else layer
        for layer in config.layers
    )
    floor = ModelConfig(config.input_shape, layers)
    assert shape_trace(floor)[9][2] == (96,)
    assert count_params(floor) == 5634


@pytest.mark.parametrize(
    "config, expected",
    [
        (ModelConfig((1, 1, 2), (LayerSpec.flatten(), LayerSpec.linear(2))), 6),
        (
            ModelConfig(
                (1, 1, 9),
                (LayerSpec.conv(16), LayerSpec.flatten(), LayerSpec.linear(2, bias=False)),
            ),
            160 + 16 * 9 * 2,
        ),
    ],
)
def test_count_params_small(config, expected):
    assert count_params(config) == expected


def test_build_is_deterministic():
    config = model3_default()
    first, second = build(config, seed=5), build(config, seed=5)
    for name, p in first:
        assert_array_equal(p.data, second.params[name].data)

    other = build(config, seed=6)
    assert not np.array_equal(first.params["conv1.weight"].data, other.params["conv1.weight"].data)


def test_config_text_round_trip(tmp_path):
    config = model3_default()
    text = config.to_text()
    assert text.startswith("input 1x100x129\nlabels spoofed genuine\n")
    assert "conv filters=16 kernel=1x9 pad=same bias=yes\n" in text
    assert "maxpool kernel=3x3 stride=3x3 ceil=yes\n" in text
    assert "linear width=32 bias=no\n" in text
    assert ModelConfig.from_text(text) == config

    config.save(tmp_path / "model.cfg")
    assert ModelConfig.load(tmp_path / "model.cfg") == config


def test_config_text_accepts_defaults_and_comments():
    text = """
    # minimal network
    input 1x4x9
    conv filters=2
    activation fn=elu alpha=0.5
    flatten
    linear width=2
    """
    config = ModelConfig.from_text(text)
    assert config.layers[0] == LayerSpec.conv(2, (1, 9), Padding.SAME, bias=True)
    assert config.layers[1].alpha == 0.5
    assert config.labels == DEFAULT_LABELS


@pytest.mark.parametrize(
    "text, index",
    [
        ("input 1x4x9\nconv kernel=1x9\nflatten\nlinear width=2\n", 0),
        ("input 1x4x9\nconv filters=3\nactivation fn=mfm\nflatten\nlinear width=2\n", 1),
        ("input 1x4x9\nflatten\nconv filters=2\nlinear width=2\n", 1),
        ("input 1x4x9\nflatten\ndropout rate=1.5\nlinear width=2\n", 1),
        ("input 1x4x9\nflatten\nlinear width=2 colour=red\n", 1),
        ("input 1x4x9\nflatten\nsoftmax\n", 1),
        ("input 1x4x9\nflatten\nlinear width=3\n", 1),
    ],
)
def test_malformed_config_names_layer(text, index):
    with pytest.raises(ModelConfigError) as info:
        ModelConfig.from_text(text)

    assert info.value.index == index
    assert str(info.value).startswith(f"layer {index}:")


def test_config_requires_input_line():
    with pytest.raises(ModelConfigError):
        ModelConfig.from_text("flatten\nlinear width=2\n")

    with pytest.raises(ModelConfigError):
        ModelConfig((1, 0, 9), (LayerSpec.flatten(), LayerSpec.linear(2)))


def test_with_activation():
    relu = with_activation(model3_default(), Activation.RELU)
    trace = shape_trace(relu)
    assert trace[1][1].fn is Activation.RELU
    assert trace[1][2] == (16, 100, 129)
    assert trace[9][2] == (320,)
    assert relu.layers[0] == model3_default().layers[0]


def test_with_input_shape():
    config = model3_default().with_input_shape((1, 300, 129))
    assert shape_trace(config)[9][2] == (8 * 12 * 5,)


def test_forward_shapes_and_purity(rng):
    net = build(model3_default(), seed=1)
    batch = rng.normal(size=(3, 1, 100, 129))
    logits = forward(net, batch)
    assert logits.shape == (3, 2)
    assert_array_equal(forward(net, batch).data, logits.data)

    permuted = forward(net, batch[[2, 0, 1]])
    assert_allclose(permuted.data, logits.data[[2, 0, 1]], rtol=1e-12, atol=1e-12)

    with pytest.raises(ShapeError):
        forward(net, rng.normal(size=(3, 1, 99, 129)))


def test_forward_identical_rows(rng):
    net = build(tiny_config(), seed=2)
    row = rng.normal(size=(1, 1, 8, 10))
    logits = forward(net, np.repeat(row, 4, axis=0)).data
    assert_allclose(logits, np.repeat(logits[:1], 4, axis=0), rtol=1e-12, atol=1e-12)


def test_forward_training_uses_dropout(rng):
    net = build(tiny_config(dropout=0.5), seed=2)
    batch = rng.normal(size=(4, 1, 8, 10))
    first = forward(net, batch, training=True, rng=np.random.default_rng(0)).data
    again = forward(net, batch, training=True, rng=np.random.default_rng(0)).data
    assert_array_equal(first, again)
    assert not np.array_equal(first, forward(net, batch).data)


def test_zero_output_weights_give_even_posteriors(rng):
    net = build(tiny_config(), seed=2)
    net.params["linear2.weight"].data[...] = 0.0
    logits = forward(net, rng.normal(size=(5, 1, 8, 10)))
    assert_array_equal(logits.data, np.zeros((5, 2)))
    assert_array_equal(posteriors(logits), np.full((5, 2), 0.5))


def test_embed_returns_first_linear_layer(rng):
    net = build(model3_default(), seed=1)
    batch = rng.normal(size=(2, 1, 100, 129))
    embedding = embed(net, batch)
    assert embedding.shape == (2, 32)
    logits = embedding @ net.params["linear2.weight"].data + net.params["linear2.bias"].data
    assert_allclose(forward(net, batch).data, logits, rtol=1e-12, atol=1e-12)

    with pytest.raises(ModelConfigError):
        embed(build(ModelConfig((1, 1, 2), (LayerSpec.flatten(), LayerSpec.linear(2)))), np.zeros((1, 1, 1, 2)))


def test_swap_output_units(rng):
    net = build(tiny_config(), seed=4)
    net.params["linear2.bias"].data[...] = [0.25, -0.5]
    swapped = swap_output_units(net)
    batch = rng.normal(size=(3, 1, 8, 10))
    assert_allclose(forward(swapped, batch).data, forward(net, batch).data[:, ::-1], rtol=1e-12, atol=1e-12)
    assert net.params["linear2.bias"].data[0] == 0.25


def test_network_snapshot_and_copy():
    net = build(tiny_config(), seed=4)
    snapshot = net.snapshot()
    copy = net.copy()
    net.params["conv1.weight"].data[...] = 0.0
    assert copy.params["conv1.weight"].data.any()

    net.load_snapshot(snapshot)
    assert_array_equal(net.params["conv1.weight"].data, snapshot["conv1.weight"])


def test_network_validates_parameters():
    config = tiny_config()
    arrays = build(config).snapshot()
    restored = Network.from_arrays(config, arrays)
    assert count_params(restored) == count_params(config)

    bad = dict(arrays, **{"linear1.weight": np.zeros((3, 4))})
    with pytest.raises(ShapeError):
        Network.from_arrays(config, bad)

    missing = {k: v for k, v in arrays.items() if k != "linear2.bias"}
    with pytest.raises(ModelConfigError):
        Network.from_arrays(config, missing)


def test_tensor_batch_is_accepted(rng):
    net = build(tiny_config(), seed=4)
    batch = Tensor(rng.normal(size=(2, 1, 8, 10)))
    assert forward(net, batch).shape == (2, 2)
