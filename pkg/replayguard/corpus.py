import collections
import dataclasses
import logging
import pathlib

import numpy as np
import soundfile

from .audio import Waveform
from .enums import Label, Subset
from .errors import AudioFormatError, DuplicateEntryError, ProtocolError


__all__ = (
    "PLACEHOLDER",
    "DEFAULT_BLACKLIST",
    "ProtocolEntry",
    "CorpusManifest",
    "ConfigurationStats",
    "ConfigurationComparison",
    "SubsetSummary",
    "parse_protocol",
    "format_protocol",
    "write_protocol",
    "apply_blacklist",
    "trim_leading_zeros",
    "configuration_stats",
    "compare_configurations",
    "subset_summary",
)

log = logging.getLogger(__name__)

PLACEHOLDER = "-"

# files without any speech in the 2017 v1 training subset
DEFAULT_BLACKLIST = frozenset({"T_1001658.wav", "T_1000150.wav"})


class ProtocolEntry:
    """
    One protocol line: file id, label, speaker, phrase and the spoofing
    configuration (environment, playback and recording device ids)
    """

    __slots__ = ("file_id", "label", "speaker", "phrase", "environment", "playback", "recording")

    def __init__(
        self,
        file_id,
        label,
        speaker=PLACEHOLDER,
        phrase=PLACEHOLDER,
        environment=PLACEHOLDER,
        playback=PLACEHOLDER,
        recording=PLACEHOLDER,
    ):
        if not file_id:
            raise ValueError("file id must not be empty")

        self.file_id = file_id
        self.label = Label(label)
        self.speaker = speaker
        self.phrase = phrase
        self.environment = environment
        self.playback = playback
        self.recording = recording

    def _fields(self):
        return tuple(getattr(self, slot) for slot in self.__slots__)

    def __eq__(self, other):
        return isinstance(other, ProtocolEntry) and other._fields() == self._fields()

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash(self._fields())

    def __repr__(self):
        return f"<ProtocolEntry {self.to_line()!r}>"

    @property
    def is_genuine(self):
        return self.label is Label.GENUINE

    @property
    def configuration(self):
        return f"{self.environment} {self.playback} {self.recording}"

    @property
    def stem(self):
        return pathlib.PurePath(self.file_id).stem

    def to_line(self):
        return " ".join(
            [self.file_id, self.label.token, self.speaker, self.phrase]
            + [self.environment, self.playback, self.recording]
        )

    @classmethod
    def from_line(cls, line, line_number=None):
        fields = line.split()
        if len(fields) < 2:
            raise ProtocolError(line_number, line, "expected at least file id and label")

        if len(fields) > 7:
            raise ProtocolError(line_number, line, f"{len(fields)} fields, at most 7 expected")

        try:
            label = Label.parse(fields[1])
        except ValueError:
            raise ProtocolError(line_number, line, f"unknown label {fields[1]!r}")

        fields += [PLACEHOLDER] * (7 - len(fields))
        return cls(fields[0], label, *fields[2:])


def parse_protocol(path):
    entries = []
    text = pathlib.Path(path).read_text(encoding="utf-8")
    for number, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            entries.append(ProtocolEntry.from_line(line, number))

    return entries


def format_protocol(entries):
    return "".join(entry.to_line() + "\n" for entry in entries)


def write_protocol(entries, path):
    pathlib.Path(path).write_text(format_protocol(entries), encoding="utf-8")


@dataclasses.dataclass(frozen=True, eq=False)
class CorpusManifest:
    subset: Subset
    entries: tuple
    audio_root: pathlib.Path

    def __post_init__(self):
        object.__setattr__(self, "subset", Subset(self.subset))
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "audio_root", pathlib.Path(self.audio_root))
        seen = set()
        for entry in self.entries:
            if entry.file_id in seen:
                raise DuplicateEntryError(entry.file_id)

            seen.add(entry.file_id)

    @classmethod
    def load(cls, protocol, audio_root=None, subset=Subset.TRAIN, blacklist=()):
        """
        Parses a protocol file; audio defaults to the protocol's directory
        """
        protocol = pathlib.Path(protocol)
        entries = apply_blacklist(parse_protocol(protocol), blacklist)
        return cls(subset, entries, audio_root if audio_root is not None else protocol.parent)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def audio_path(self, entry):
        return self.audio_root / entry.file_id

    def count(self, label):
        return sum(1 for entry in self.entries if entry.label is Label(label))


def apply_blacklist(entries, blacklist=DEFAULT_BLACKLIST):
    blacklist = frozenset(blacklist)
    kept = []
    for entry in entries:
        if entry.file_id in blacklist:
            log.debug("dropping blacklisted file %s", entry.file_id)
            continue

        kept.append(entry)

    return kept


def trim_leading_zeros(w, enabled=False):
    """
    Drops the exactly-zero prefix of w when enabled; an all-zero signal
    keeps a single zero sample
    """
    if not enabled:
        return w

    nonzero = np.flatnonzero(w.samples)
    start = nonzero[0] if nonzero.size else w.samples.size - 1
    if start == 0:
        return w

    log.debug("trimmed %d leading zero samples", start)
    return Waveform(w.samples[start:], w.sample_rate)


@dataclasses.dataclass(frozen=True)
class ConfigurationStats:
    environment: collections.Counter
    playback: collections.Counter
    recording: collections.Counter
    configuration: collections.Counter

    @property
    def total(self):
        return sum(self.configuration.values())


def configuration_stats(entries):
    """
    Spoof-entry counts per environment, playback device, recording device
    and joint "Exx Pyy Rzz" configuration
    """
    stats = ConfigurationStats(
        collections.Counter(),
        collections.Counter(),
        collections.Counter(),
        collections.Counter(),
    )
    for entry in entries:
        if entry.is_genuine:
            continue

        stats.environment[entry.environment] += 1
        stats.playback[entry.playback] += 1
        stats.recording[entry.recording] += 1
        stats.configuration[entry.configuration] += 1

    return stats


@dataclasses.dataclass(frozen=True)
class ConfigurationComparison:
    unseen_environments: frozenset
    unseen_playback: frozenset
    unseen_recording: frozenset
    unseen_configurations: frozenset
    shared_configurations: frozenset


def compare_configurations(reference, other):
    """
    Which ids and joint configurations of other never occur in reference
    """
    if not isinstance(reference, ConfigurationStats):
        reference = configuration_stats(reference)

    if not isinstance(other, ConfigurationStats):
        other = configuration_stats(other)

    return ConfigurationComparison(
        frozenset(other.environment) - frozenset(reference.environment),
        frozenset(other.playback) - frozenset(reference.playback),
        frozenset(other.recording) - frozenset(reference.recording),
        frozenset(other.configuration) - frozenset(reference.configuration),
        frozenset(other.configuration) & frozenset(reference.configuration),
    )


@dataclasses.dataclass(frozen=True)
class SubsetSummary:
    subset: Subset
    speakers: int
    genuine: int
    spoofed: int
    hours: float


def subset_summary(manifest, durations=True):
    """
    Speaker and class counts; hours of audio from the WAV headers unless
    durations is off
    """
    seconds = 0.0 if durations else None
    for entry in manifest if durations else ():
        path = manifest.audio_path(entry)
        try:
            seconds += soundfile.info(str(path)).duration
        except RuntimeError as e:
            raise AudioFormatError(path, str(e))

    speakers = {entry.speaker for entry in manifest if entry.speaker != PLACEHOLDER}
    return SubsetSummary(
        manifest.subset,
        len(speakers),
        manifest.count(Label.GENUINE),
        manifest.count(Label.SPOOF),
        seconds / 3600.0 if durations else None,
    )
