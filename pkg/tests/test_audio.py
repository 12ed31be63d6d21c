import math

import numpy as np
import pytest
import soundfile

from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from replayguard.audio import *
from replayguard.errors import *


def test_waveform_rejects_invalid_samples():
    with pytest.raises(EmptyWaveformError):
        Waveform(np.zeros(0))

    with pytest.raises(AudioError):
        Waveform(np.array([0.0, 1.5]))

    with pytest.raises(AudioError):
        Waveform(np.array([0.0, np.nan]))


def test_pad_whole_second_is_identity(tone):
    w = tone(1.0)
    assert pad_or_truncate_whole_seconds(w) is w


def test_pad_repeats_cyclically(tone):
    w = tone(1.3)
    assert len(w) == 20800
    padded = pad_or_truncate_whole_seconds(w)
    assert len(padded) == 32000
    assert_array_equal(padded.samples[:20800], w.samples)
    assert_array_equal(padded.samples[20800:32000], w.samples[:11200])


def test_pad_quarter_second_gives_four_copies(rng):
    w = Waveform(rng.uniform(-1, 1, 4000))
    padded = pad_or_truncate_whole_seconds(w)
    assert_array_equal(padded.samples, np.tile(w.samples, 4))


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=40000))
def test_pad_is_idempotent(n):
    w = Waveform(np.linspace(-0.5, 0.5, n))
    once = pad_or_truncate_whole_seconds(w)
    assert len(once) == math.ceil(n / 16000) * 16000
    assert_array_equal(pad_or_truncate_whole_seconds(once).samples, once.samples)


def test_fix_length(tone, rng):
    four = tone(4.0)
    assert_array_equal(fix_length(four, 1).samples, four.samples[:16000])

    three = tone(3.0)
    assert fix_length(three, 3) is three

    two = Waveform(rng.uniform(-1, 1, 32000))
    extended = fix_length(two, 3)
    assert len(extended) == 48000
    assert_array_equal(extended.samples[32000:], two.samples[:16000])

    with pytest.raises(ValueError):
        fix_length(two, 0)


@pytest.mark.parametrize(
    "cfg, seconds, shape",
    [
        (SpectrogramConfig.split_model(), 1.0, (100, 129)),
        (SpectrogramConfig.first_second_model(), 1.0, (100, 257)),
        (SpectrogramConfig.split_model(), 3.0, (300, 129)),
        (SpectrogramConfig.large_fft_model(), 4.0, (400, 1025)),
    ],
)
def test_spectrogram_shapes(tone, cfg, seconds, shape):
    spec = log_power_spectrogram(tone(seconds), cfg)
    assert spec.shape == shape
    assert spec.frame_hop_seconds == pytest.approx(0.01)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=256, max_value=5000))
def test_spectrogram_shape_law(n):
    w = Waveform(np.sin(np.arange(n) * 0.1) * 0.3)
    assert log_power_spectrogram(w).shape == (n // 160, 129)


def test_spectrogram_of_silence_is_log_floor():
    spec = log_power_spectrogram(Waveform(np.zeros(16000)))
    assert_allclose(spec.values, np.log(1e-10), rtol=0, atol=0)


def test_spectrogram_matches_direct_dft(rng):
    w = Waveform(rng.uniform(-0.5, 0.5, 1600))
    spec = log_power_spectrogram(w)
    frame = w.samples[480:736] * np.hanning(257)[:-1]
    power = np.abs(np.fft.fft(frame))[:129] ** 2
    assert_allclose(spec.values[3], np.log(power + 1e-10), rtol=1e-9)


def test_spectrogram_is_deterministic(rng):
    w = Waveform(rng.uniform(-1, 1, 8000))
    assert_array_equal(log_power_spectrogram(w).values, log_power_spectrogram(w).values)


def test_spectrogram_errors(tone):
    with pytest.raises(ShortWaveformError):
        log_power_spectrogram(Waveform(np.zeros(255)))

    with pytest.raises(SampleRateError):
        log_power_spectrogram(tone(1.0, sample_rate=8000))


def test_spectrogram_config_invariants():
    with pytest.raises(ValueError):
        SpectrogramConfig(fft_size=256, window_size=512)

    with pytest.raises(ValueError):
        SpectrogramConfig(hop=0)

    with pytest.raises(ValueError):
        SpectrogramConfig(log_floor=0)


def test_fit_normalizer_population_std():
    spec = Spectrogram(np.array([[0.0, 4.0], [2.0, 4.0]]))
    stats = fit_normalizer([spec])
    assert_allclose(stats.mean, [1.0, 4.0])
    assert_allclose(stats.std, [1.0, 1e-8])


def test_fit_normalizer_pools_frames(rng):
    specs = [Spectrogram(rng.normal(size=(n, 5))) for n in (3, 7, 11)]
    pooled = fit_normalizer([Spectrogram(np.concatenate([s.values for s in specs]))])
    stats = fit_normalizer(specs)
    assert_allclose(stats.mean, pooled.mean)
    assert_allclose(stats.std, pooled.std)


def test_fit_normalizer_errors(rng):
    with pytest.raises(ValueError):
        fit_normalizer([])

    with pytest.raises(ShapeError):
        fit_normalizer([Spectrogram(np.zeros((2, 3))), Spectrogram(np.zeros((2, 4)))])


def test_normalize(rng):
    spec = Spectrogram(rng.normal(3.0, 2.0, size=(50, 6)))
    out = normalize(spec, fit_normalizer([spec]))
    assert_allclose(out.values.mean(axis=0), 0.0, atol=1e-9)
    assert_allclose(out.values.std(axis=0), 1.0, atol=1e-9)

    assert_array_equal(normalize(spec, NormStats.identity(6)).values, spec.values)

    single = Spectrogram(np.array([[5.0]]))
    assert normalize(single, NormStats([3.0], [2.0])).values[0, 0] == 1.0

    with pytest.raises(ShapeError):
        normalize(spec, NormStats.identity(5))


@pytest.mark.parametrize(
    "frames, wind, shift, starts",
    [
        (300, 100, 100, [0, 100, 200]),
        (100, 100, 100, [0]),
        (250, 100, 50, [0, 50, 100, 150]),
    ],
)
def test_split_examples(frames, wind, shift, starts):
    spec = Spectrogram(np.arange(frames * 3, dtype=float).reshape(frames, 3))
    splits = split_spectrogram(spec, SplitConfig(wind, shift))
    assert len(splits) == len(starts)
    for split, start in zip(splits, starts):
        assert_array_equal(split.values, spec.values[start : start + wind])


@settings(max_examples=500, deadline=None)
@given(st.data())
def test_split_count_law(data):
    wind = data.draw(st.integers(min_value=1, max_value=40))
    shift = data.draw(st.integers(min_value=1, max_value=wind))
    frames = data.draw(st.integers(min_value=wind, max_value=200))
    spec = Spectrogram(np.arange(frames * 2, dtype=float).reshape(frames, 2))

    splits = split_spectrogram(spec, SplitConfig(wind, shift))
    assert len(splits) == (frames - wind) // shift + 1
    for i, split in enumerate(splits):
        assert_array_equal(split.values, spec.values[i * shift : i * shift + wind])

    if shift == wind:
        tiled = np.concatenate([split.values for split in splits])
        assert_array_equal(tiled, spec.values[: len(splits) * wind])


def test_split_too_short():
    with pytest.raises(ShapeError):
        split_spectrogram(Spectrogram(np.zeros((99, 129))), SplitConfig())


def test_split_config_invariants():
    with pytest.raises(ValueError):
        SplitConfig(100, 101)

    with pytest.raises(ValueError):
        SplitConfig(0, 0)


def test_short_utterance_gives_three_splits(tone):
    w = pad_or_truncate_whole_seconds(tone(2.4))
    splits = split_spectrogram(log_power_spectrogram(w), SplitConfig())
    assert [s.shape for s in splits] == [(100, 129)] * 3


def test_wav_round_trip(tmp_path):
    pcm = np.array([-32768, -1, 0, 1, 12345, 32767], dtype=np.int16)
    w = Waveform(pcm / 32768.0)
    write_wav(tmp_path / "x.wav", w)
    assert_array_equal(read_wav(tmp_path / "x.wav").samples, w.samples)
    assert soundfile.info(str(tmp_path / "x.wav")).subtype == "PCM_16"


def test_read_wav_rejects_bad_files(tmp_path):
    soundfile.write(str(tmp_path / "stereo.wav"), np.zeros((100, 2), dtype=np.int16), 16000, subtype="PCM_16")
    with pytest.raises(AudioFormatError):
        read_wav(tmp_path / "stereo.wav")

    soundfile.write(str(tmp_path / "rate.wav"), np.zeros(100, dtype=np.int16), 8000, subtype="PCM_16")
    with pytest.raises(SampleRateError):
        read_wav(tmp_path / "rate.wav")

    soundfile.write(str(tmp_path / "float.wav"), np.zeros(100), 16000, subtype="FLOAT")
    with pytest.raises(AudioFormatError):
        read_wav(tmp_path / "float.wav")

    with pytest.raises(AudioFormatError):
        read_wav(tmp_path / "missing.wav")
