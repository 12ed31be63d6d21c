import dataclasses
import logging
import pathlib

import numpy as np

from scipy.signal import butter, lfilter

from .audio import DEFAULT_SAMPLE_RATE, Waveform, write_wav
from .corpus import CorpusManifest, ProtocolEntry, write_protocol
from .enums import Label, Subset
from .util import make_rng, ordered_map


__all__ = (
    "PROTOCOL_NAME",
    "SynthConfig",
    "pink_noise",
    "genuine_signal",
    "replay_channel",
    "channel_parameters",
    "synthesize_entry",
    "generate_synthetic_corpus",
)

log = logging.getLogger(__name__)

PROTOCOL_NAME = "protocol.txt"

# Smith's -3 dB/octave approximation
_PINK_B = np.array([0.049922035, -0.095993537, 0.050612699, -0.004408786])
_PINK_A = np.array([1.0, -2.494956002, 2.017265875, -0.522189400])


@dataclasses.dataclass(frozen=True)
class SynthConfig:
    n_genuine: int = 200
    n_spoof: int = 200
    min_duration: float = 1.0
    max_duration: float = 3.0
    sample_rate: int = DEFAULT_SAMPLE_RATE
    cutoff_hz: float = 2000.0
    noise_level: float = 0.003
    gain_range: tuple = (0.3, 0.9)
    clip_drive: float = 2.5
    snr_db: float = 20.0
    genuine_leading_silence: float = 0.0
    file_prefix: str = "T_"
    n_speakers: int = 10
    n_environments: int = 3
    n_playback: int = 4
    n_recording: int = 4
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gain_range", tuple(float(g) for g in self.gain_range))
        if self.n_genuine <= 0 or self.n_spoof <= 0:
            raise ValueError("class counts must be positive")

        if not 0 < self.min_duration <= self.max_duration:
            raise ValueError("durations must satisfy 0 < min_duration <= max_duration")

        if not 0 < self.cutoff_hz < self.sample_rate / 2:
            raise ValueError("cutoff_hz must lie below the Nyquist frequency")

        low, high = self.gain_range
        if not 0 < low <= high <= 1:
            raise ValueError("gain_range must satisfy 0 < low <= high <= 1")

        if self.noise_level < 0 or self.clip_drive <= 0 or self.genuine_leading_silence < 0:
            raise ValueError("noise_level, clip_drive and genuine_leading_silence out of range")

        if min(self.n_speakers, self.n_environments, self.n_playback, self.n_recording) <= 0:
            raise ValueError("id pool sizes must be positive")

    @property
    def total(self):
        return self.n_genuine + self.n_spoof


def pink_noise(n, rng):
    white = rng.standard_normal(n)
    pink = lfilter(_PINK_B, _PINK_A, white)
    return pink / np.std(pink)


def genuine_signal(cfg, rng):
    """
    3 to 5 harmonics of a slowly gliding f0 under a syllable-like envelope,
    plus pink noise at cfg.snr_db
    """
    n = int(round(rng.uniform(cfg.min_duration, cfg.max_duration) * cfg.sample_rate))
    t = np.arange(n) / cfg.sample_rate

    f0 = rng.uniform(100.0, 250.0) * (1.0 + 0.05 * np.sin(2 * np.pi * rng.uniform(0.5, 2.0) * t))
    phase = 2 * np.pi * np.cumsum(f0) / cfg.sample_rate
    voiced = np.zeros(n)
    for harmonic in range(1, rng.integers(3, 6) + 1):
        voiced += rng.uniform(0.2, 1.0) / harmonic * np.sin(harmonic * phase + rng.uniform(0, 2 * np.pi))

    envelope = 0.6 + 0.4 * np.sin(2 * np.pi * rng.uniform(2.0, 5.0) * t + rng.uniform(0, 2 * np.pi))
    voiced *= envelope

    noise = pink_noise(n, rng)
    noise *= np.sqrt(np.mean(voiced ** 2) / 10 ** (cfg.snr_db / 10))
    return voiced + noise


def channel_parameters(cfg, environment, playback, recording):
    """
    Replay channel settings of one (environment, playback, recording)
    configuration, perturbed deterministically per device id
    """
    env_rng = make_rng(cfg.seed, "environment", environment)
    play_rng = make_rng(cfg.seed, "playback", playback)
    rec_rng = make_rng(cfg.seed, "recording", recording)
    return {
        "cutoff_hz": cfg.cutoff_hz * play_rng.uniform(0.8, 1.2),
        "clip_drive": cfg.clip_drive * play_rng.uniform(0.8, 1.2),
        "highpass_hz": rec_rng.uniform(50.0, 150.0),
        "noise_level": cfg.noise_level * env_rng.uniform(0.5, 1.5),
    }


def replay_channel(x, cfg, params, rng):
    """
    First-order low-pass, tanh clipping, recording high-pass and additive
    white noise
    """
    nyquist = cfg.sample_rate / 2
    b, a = butter(1, params["cutoff_hz"] / nyquist, btype="low")
    y = lfilter(b, a, x / np.max(np.abs(x)))

    drive = params["clip_drive"]
    y = np.tanh(drive * y) / np.tanh(drive)

    b, a = butter(1, params["highpass_hz"] / nyquist, btype="high")
    y = lfilter(b, a, y)
    return y + params["noise_level"] * rng.standard_normal(y.size)


def _peak_scaled(x, gain):
    return x * (gain / np.max(np.abs(x)))


def synthesize_entry(cfg, subset, index):
    """
    (ProtocolEntry, Waveform) for one file; a pure function of
    (cfg, subset, index)
    """
    rng = make_rng(cfg.seed, Subset(subset).value, index)
    label = Label.GENUINE if index < cfg.n_genuine else Label.SPOOF
    file_id = f"{cfg.file_prefix}{1000001 + index}.wav"
    speaker = f"M{rng.integers(1, cfg.n_speakers + 1):04d}"
    phrase = f"S{rng.integers(1, 11):02d}"

    x = genuine_signal(cfg, rng)
    gain = rng.uniform(*cfg.gain_range)
    if label is Label.GENUINE:
        samples = _peak_scaled(x, gain)
        if cfg.genuine_leading_silence > 0:
            silence = np.zeros(int(round(cfg.genuine_leading_silence * cfg.sample_rate)))
            samples = np.concatenate([silence, samples])

        entry = ProtocolEntry(file_id, label, speaker, phrase)

    else:
        environment = f"E{rng.integers(1, cfg.n_environments + 1):02d}"
        playback = f"P{rng.integers(1, cfg.n_playback + 1):02d}"
        recording = f"R{rng.integers(1, cfg.n_recording + 1):02d}"
        params = channel_parameters(cfg, environment, playback, recording)
        samples = _peak_scaled(replay_channel(x, cfg, params, rng), gain)
        entry = ProtocolEntry(file_id, label, speaker, phrase, environment, playback, recording)

    return entry, Waveform(samples, cfg.sample_rate)


def generate_synthetic_corpus(cfg, destination, subset=Subset.TRAIN, workers=1, quiet=True):
    """
    Writes cfg.total 16-bit mono WAV files and protocol.txt into destination
    """
    destination = pathlib.Path(destination)
    destination.mkdir(parents=True, exist_ok=True)

    def _generate(index):
        entry, waveform = synthesize_entry(cfg, subset, index)
        write_wav(destination / entry.file_id, waveform)
        return entry

    entries = ordered_map(_generate, range(cfg.total), workers, desc=f"synth {Subset(subset).value}", quiet=quiet)
    write_protocol(entries, destination / PROTOCOL_NAME)
    log.info(
        "wrote %d genuine and %d spoofed files to %s", cfg.n_genuine, cfg.n_spoof, destination
    )
    return CorpusManifest(subset, entries, destination)
