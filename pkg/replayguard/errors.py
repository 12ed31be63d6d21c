__all__ = (
    "ReplayGuardError",
    "AudioError",
    "EmptyWaveformError",
    "ShortWaveformError",
    "SampleRateError",
    "AudioFormatError",
    "ShapeError",
    "NonFiniteError",
    "NonFiniteGradientError",
    "ModelConfigError",
    "TrainingError",
    "NonFiniteLossError",
    "EmptyDatasetError",
    "EERError",
    "ScoreFormatError",
    "ProtocolError",
    "DuplicateEntryError",
    "CacheFormatError",
    "CheckpointError",
    "ConfigError",
)


class ReplayGuardError(Exception):
    pass


class AudioError(ReplayGuardError):
    pass


class EmptyWaveformError(AudioError):
    def __init__(self):
        super().__init__("waveform has no samples")


class ShortWaveformError(AudioError):
    def __init__(self, length, window_size):
        self.length = length
        self.window_size = window_size
        super().__init__(
            f"waveform of {length} samples is shorter than one window ({window_size})"
        )


class SampleRateError(AudioError):
    def __init__(self, sample_rate, expected):
        self.sample_rate = sample_rate
        self.expected = expected
        super().__init__(f"sample rate {sample_rate} Hz, expected {expected} Hz")


class AudioFormatError(AudioError):
    def __init__(self, path, reason):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")


class ShapeError(ReplayGuardError):
    def __init__(self, expected, actual, what="shape"):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what} mismatch: expected {expected}, got {actual}")


class NonFiniteError(ReplayGuardError):
    def __init__(self, op):
        self.op = op
        super().__init__(f"non-finite values produced by {op}")


class NonFiniteGradientError(ReplayGuardError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"non-finite gradient for parameter {name}, step aborted")


class ModelConfigError(ReplayGuardError):
    def __init__(self, index, reason):
        self.index = index
        self.reason = reason
        if index is None:
            super().__init__(reason)

        else:
            super().__init__(f"layer {index}: {reason}")


class TrainingError(ReplayGuardError):
    pass


class NonFiniteLossError(TrainingError):
    def __init__(self, batch_index, epoch=None):
        self.batch_index = batch_index
        self.epoch = epoch
        where = f"batch {batch_index}"
        if epoch is not None:
            where = f"epoch {epoch}, {where}"

        super().__init__(f"non-finite loss at {where}")


class EmptyDatasetError(TrainingError):
    def __init__(self, what="dataset"):
        super().__init__(f"{what} is empty")


class EERError(ReplayGuardError):
    pass


class ScoreFormatError(ReplayGuardError):
    def __init__(self, line_number, line):
        self.line_number = line_number
        self.line = line
        super().__init__(f"malformed score line {line_number}: {line!r}")


class ProtocolError(ReplayGuardError):
    def __init__(self, line_number, line, reason="malformed line"):
        self.line_number = line_number
        self.line = line
        super().__init__(f"protocol line {line_number}: {reason}: {line!r}")


class DuplicateEntryError(ReplayGuardError):
    def __init__(self, file_id):
        self.file_id = file_id
        super().__init__(f"duplicate file id {file_id}")


class CacheFormatError(ReplayGuardError):
    def __init__(self, path, reason):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")


class CheckpointError(ReplayGuardError):
    def __init__(self, path, reason):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")


class ConfigError(ReplayGuardError):
    def __init__(self, section, key, reason):
        self.section = section
        self.key = key
        self.reason = reason
        super().__init__(f"[{section}] {key}: {reason}")
