import dataclasses
import logging

import numpy as np
import soundfile

from scipy.signal import get_window

from .errors import *


__all__ = (
    "DEFAULT_SAMPLE_RATE",
    "Waveform",
    "SpectrogramConfig",
    "Spectrogram",
    "NormStats",
    "SplitConfig",
    "read_wav",
    "write_wav",
    "pad_or_truncate_whole_seconds",
    "fix_length",
    "log_power_spectrogram",
    "fit_normalizer",
    "normalize",
    "split_spectrogram",
)

log = logging.getLogger(__name__)

DEFAULT_SAMPLE_RATE = 16000
STD_FLOOR = 1e-8
PCM_SCALE = 32768.0


@dataclasses.dataclass(frozen=True, eq=False)
class Waveform:
    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if samples.size == 0:
            raise EmptyWaveformError()

        if self.sample_rate <= 0:
            raise SampleRateError(self.sample_rate, DEFAULT_SAMPLE_RATE)

        if not np.all(np.isfinite(samples)):
            raise AudioError("waveform contains non-finite samples")

        if np.max(np.abs(samples)) > 1.0:
            raise AudioError("waveform samples outside [-1, 1]")

        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self):
        return self.samples.size / self.sample_rate


@dataclasses.dataclass(frozen=True)
class SpectrogramConfig:
    fft_size: int = 256
    window_size: int = 256
    hop: int = 160
    log_floor: float = 1e-10
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        if self.fft_size <= 0 or self.fft_size % 2:
            raise ValueError(f"fft_size must be a positive even number, got {self.fft_size}")

        if not 0 < self.window_size <= self.fft_size:
            raise ValueError("window_size must be in (0, fft_size]")

        if self.hop <= 0:
            raise ValueError("hop must be positive")

        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")

    @property
    def n_bins(self):
        return self.fft_size // 2 + 1

    @property
    def frame_hop_seconds(self):
        return self.hop / self.sample_rate

    @classmethod
    def split_model(cls):
        """256-point FFT, 10 ms hop: 100 x 129 per second"""
        return cls(256, 256, 160)

    @classmethod
    def first_second_model(cls):
        """512-point FFT, 10 ms hop: 100 x 257 per second"""
        return cls(512, 512, 160)

    @classmethod
    def large_fft_model(cls):
        """2048-point FFT, 10 ms hop: 400 x 1025 for four seconds"""
        return cls(2048, 2048, 160)


@dataclasses.dataclass(frozen=True, eq=False)
class Spectrogram:
    values: np.ndarray
    frame_hop_seconds: float = 0.01

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ShapeError("T x F matrix", values.shape)

        if not np.all(np.isfinite(values)):
            raise NonFiniteError("spectrogram")

        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape

    @property
    def n_frames(self):
        return self.values.shape[0]

    @property
    def n_bins(self):
        return self.values.shape[1]


@dataclasses.dataclass(frozen=True, eq=False)
class NormStats:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        std = np.asarray(self.std, dtype=np.float64).reshape(-1)
        if mean.shape != std.shape:
            raise ShapeError(mean.shape, std.shape, what="normalizer length")

        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", np.maximum(std, STD_FLOOR))

    @property
    def n_bins(self):
        return self.mean.size

    @classmethod
    def identity(cls, n_bins):
        return cls(np.zeros(n_bins), np.ones(n_bins))


@dataclasses.dataclass(frozen=True)
class SplitConfig:
    spec_wind: int = 100
    wind_shift: int = 100

    def __post_init__(self):
        if self.spec_wind <= 0 or self.wind_shift <= 0:
            raise ValueError("spec_wind and wind_shift must be positive")

        if self.wind_shift > self.spec_wind:
            raise ValueError("wind_shift must not exceed spec_wind")

    def count(self, n_frames):
        if n_frames < self.spec_wind:
            return 0

        return (n_frames - self.spec_wind) // self.wind_shift + 1


def read_wav(path, expected_rate=DEFAULT_SAMPLE_RATE):
    """
    Reads 16-bit mono PCM, mapping samples to [-1, 1) by division by 32768
    """
    try:
        info = soundfile.info(str(path))
    except RuntimeError as e:
        raise AudioFormatError(path, str(e))

    if info.channels != 1:
        raise AudioFormatError(path, f"{info.channels} channels, expected mono")

    if info.subtype != "PCM_16":
        raise AudioFormatError(path, f"subtype {info.subtype}, expected PCM_16")

    if expected_rate is not None and info.samplerate != expected_rate:
        raise SampleRateError(info.samplerate, expected_rate)

    data, rate = soundfile.read(str(path), dtype="int16", always_2d=False)
    if data.size == 0:
        raise EmptyWaveformError()

    return Waveform(data.astype(np.float64) / PCM_SCALE, rate)


def write_wav(path, waveform):
    pcm = np.clip(np.rint(waveform.samples * PCM_SCALE), -32768, 32767).astype(np.int16)
    soundfile.write(str(path), pcm, waveform.sample_rate, subtype="PCM_16", format="WAV")


def pad_or_truncate_whole_seconds(w):
    """
    Extends w cyclically to the next whole number of seconds
    """
    n = len(w)
    target = -(-n // w.sample_rate) * w.sample_rate
    if target == n:
        return w

    return Waveform(np.resize(w.samples, target), w.sample_rate)


def fix_length(w, seconds):
    if seconds <= 0:
        raise ValueError("seconds must be positive")

    target = int(round(seconds * w.sample_rate))
    if target == len(w):
        return w

    if target < len(w):
        return Waveform(w.samples[:target], w.sample_rate)

    return Waveform(np.resize(w.samples, target), w.sample_rate)


def log_power_spectrogram(w, cfg=SpectrogramConfig()):
    if w.sample_rate != cfg.sample_rate:
        raise SampleRateError(w.sample_rate, cfg.sample_rate)

    n = len(w)
    if n < cfg.window_size:
        raise ShortWaveformError(n, cfg.window_size)

    n_frames = n // cfg.hop
    needed = (n_frames - 1) * cfg.hop + cfg.window_size
    samples = w.samples
    if needed > n:
        samples = np.concatenate([samples, np.zeros(needed - n)])

    frames = np.lib.stride_tricks.sliding_window_view(samples, cfg.window_size)
    frames = frames[:: cfg.hop][:n_frames]

    window = get_window("hann", cfg.window_size)
    spectrum = np.fft.rfft(frames * window, n=cfg.fft_size, axis=-1)
    power = spectrum.real ** 2 + spectrum.imag ** 2
    return Spectrogram(np.log(power + cfg.log_floor), cfg.frame_hop_seconds)


def fit_normalizer(specs):
    specs = list(specs)
    if not specs:
        raise ValueError("cannot fit a normalizer on no spectrograms")

    n_bins = specs[0].n_bins
    for spec in specs:
        if spec.n_bins != n_bins:
            raise ShapeError(n_bins, spec.n_bins, what="frequency bins")

    pooled = np.concatenate([spec.values for spec in specs], axis=0)
    log.debug("fitting normalizer on %d frames x %d bins", pooled.shape[0], n_bins)
    return NormStats(pooled.mean(axis=0), pooled.std(axis=0))


def normalize(spec, stats):
    if spec.n_bins != stats.n_bins:
        raise ShapeError(stats.n_bins, spec.n_bins, what="frequency bins")

    return Spectrogram((spec.values - stats.mean) / stats.std, spec.frame_hop_seconds)


def split_spectrogram(spec, cfg=SplitConfig()):
    """
    Cuts spec into spec_wind-frame windows every wind_shift frames,
    dropping trailing frames that do not fill a window
    """
    k = cfg.count(spec.n_frames)
    if k == 0:
        raise ShapeError(
            f">= {cfg.spec_wind} frames", spec.n_frames, what="frame count"
        )

    return [
        Spectrogram(
            spec.values[i * cfg.wind_shift : i * cfg.wind_shift + cfg.spec_wind],
            spec.frame_hop_seconds,
        )
        for i in range(k)
    ]
