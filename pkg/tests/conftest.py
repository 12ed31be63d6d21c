import numpy as np
import pytest

from replayguard.audio import Waveform, write_wav
from replayguard.enums import Activation, Subset
from replayguard.models import LayerSpec, ModelConfig
from replayguard.synth import SynthConfig, generate_synthetic_corpus


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tone():
    """Builds a Waveform of a 440 Hz tone lasting the given seconds"""

    def _tone(seconds, sample_rate=16000, amplitude=0.5):
        t = np.arange(int(round(seconds * sample_rate))) / sample_rate
        return Waveform(amplitude * np.sin(2 * np.pi * 440 * t), sample_rate)

    return _tone


@pytest.fixture
def wav_file(tmp_path, tone):
    def _wav_file(name, seconds, sample_rate=16000):
        path = tmp_path / name
        write_wav(path, tone(seconds, sample_rate))
        return path

    return _wav_file


def tiny_config(activation=Activation.MFM, dropout=0.5, input_shape=(1, 8, 10)):
    """
    A Model-3-shaped network small enough for finite differences:
    conv -> activation -> maxpool -> flatten -> dropout -> linear -> linear
    """
    filters = 4 if activation is Activation.MFM else 2
    return ModelConfig(
        input_shape,
        (
            LayerSpec.conv(filters, (1, 3)),
            LayerSpec.activation(activation),
            LayerSpec.maxpool((3, 3), (3, 3), ceil=True),
            LayerSpec.flatten(),
            LayerSpec.dropout(dropout),
            LayerSpec.linear(4, bias=False),
            LayerSpec.linear(2),
        ),
    )


@pytest.fixture
def tiny_model_config():
    return tiny_config()


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Train and dev subsets of 8 + 8 and 4 + 4 short synthetic files"""
    root = tmp_path_factory.mktemp("corpus")
    base = SynthConfig(n_genuine=8, n_spoof=8, min_duration=1.0, max_duration=1.6, seed=3)
    train = generate_synthetic_corpus(base, root / "train", Subset.TRAIN)
    dev = generate_synthetic_corpus(
        SynthConfig(n_genuine=4, n_spoof=4, min_duration=1.0, max_duration=1.6, seed=3, file_prefix="D_"),
        root / "dev",
        Subset.DEV,
    )
    return root, train, dev
