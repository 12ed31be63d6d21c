import configparser
import dataclasses
import logging
import pathlib

import orjson

from .audio import SpectrogramConfig, SplitConfig
from .corpus import DEFAULT_BLACKLIST
from .enums import Activation, EERMethod, Representation
from .errors import ConfigError
from .models import ModelConfig, model3_default, with_activation
from .nn import AdamHyper
from .synth import SynthConfig
from .trainer import TrainConfig


__all__ = (
    "MODEL3",
    "PathsConfig",
    "RepresentationConfig",
    "ModelSettings",
    "ScoringConfig",
    "CorpusConfig",
    "ExperimentConfig",
    "load_experiment",
    "write_run_manifest",
)

log = logging.getLogger(__name__)

MODEL3 = "model3"
SCORING_BACKENDS = ("softmax", "gaussian")


@dataclasses.dataclass(frozen=True)
class PathsConfig:
    train_protocol: str = None
    dev_protocol: str = None
    train_audio: str = None
    dev_audio: str = None
    output_dir: str = "runs"


@dataclasses.dataclass(frozen=True)
class RepresentationConfig:
    mode: Representation = Representation.SPLIT
    spec_wind: int = 100
    wind_shift: int = 100
    seconds: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "mode", Representation(self.mode))
        if self.seconds <= 0:
            raise ConfigError("representation", "seconds", "must be positive")

        try:
            SplitConfig(self.spec_wind, self.wind_shift)
        except ValueError as e:
            raise ConfigError("representation", "spec_wind", str(e))

    @property
    def split(self):
        return SplitConfig(self.spec_wind, self.wind_shift)

    def n_frames(self, spectrogram):
        if self.mode is Representation.SPLIT:
            return self.spec_wind

        return int(round(self.seconds * spectrogram.sample_rate)) // spectrogram.hop

    def input_shape(self, spectrogram):
        return 1, self.n_frames(spectrogram), spectrogram.n_bins


@dataclasses.dataclass(frozen=True)
class ModelSettings:
    config: str = MODEL3
    activation: Activation = Activation.MFM

    def __post_init__(self):
        object.__setattr__(self, "activation", Activation(self.activation))

    def resolve(self, input_shape):
        """
        ModelConfig for the given input shape; a layer file keeps its own
        activations unless another than mfm is asked for
        """
        if self.config == MODEL3:
            config = model3_default(input_shape)

        else:
            config = ModelConfig.load(self.config).with_input_shape(input_shape)

        if self.activation is not Activation.MFM:
            config = with_activation(config, self.activation)

        return config


@dataclasses.dataclass(frozen=True)
class ScoringConfig:
    method: EERMethod = EERMethod.ROCCH
    backend: str = "softmax"

    def __post_init__(self):
        object.__setattr__(self, "method", EERMethod(self.method))
        if self.backend not in SCORING_BACKENDS:
            raise ConfigError("scoring", "backend", f"expected one of {SCORING_BACKENDS}")


@dataclasses.dataclass(frozen=True)
class CorpusConfig:
    trim_leading_zeros: bool = False
    blacklist: tuple = tuple(sorted(DEFAULT_BLACKLIST))

    def __post_init__(self):
        object.__setattr__(self, "blacklist", tuple(self.blacklist))


def _coerce(section, key, raw, default):
    """
    Parses raw the way the default value is typed
    """
    try:
        if isinstance(default, bool):
            value = raw.strip().lower()
            if value in ("yes", "true", "on", "1"):
                return True

            if value in ("no", "false", "off", "0"):
                return False

            raise ValueError(f"expected yes/no, got {raw!r}")

        if isinstance(default, tuple):
            items = [item.strip() for item in raw.replace(",", " ").split()]
            return tuple(type(default[0])(item) if default else item for item in items)

        if isinstance(default, (int, float)):
            return type(default)(raw)

        if hasattr(default, "value"):
            return type(default)(raw.strip().lower())

        return raw.strip()

    except ValueError as e:
        raise ConfigError(section, key, str(e))


def _section(parser, name, cls, skip=(), ignore=()):
    if not parser.has_section(name):
        return {}

    fields = {f.name: f for f in dataclasses.fields(cls) if f.name not in skip}
    values = {}
    for key, raw in parser.items(name):
        if key in ignore:
            continue

        if key not in fields:
            raise ConfigError(name, key, "unknown key")

        default = fields[key].default
        values[key] = _coerce(name, key, raw, "" if default is None else default)

    return values


def _build(section, cls, values):
    try:
        return cls(**values)
    except ConfigError:
        raise

    except (TypeError, ValueError) as e:
        raise ConfigError(section, "*", str(e))


_SECTIONS = ("paths", "spectrogram", "representation", "model", "train", "scoring", "corpus", "synth")
_HYPER_KEYS = ("learning_rate", "beta1", "beta2", "epsilon")


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    paths: PathsConfig = PathsConfig()
    spectrogram: SpectrogramConfig = SpectrogramConfig()
    representation: RepresentationConfig = RepresentationConfig()
    model: ModelSettings = ModelSettings()
    train: TrainConfig = TrainConfig()
    scoring: ScoringConfig = ScoringConfig()
    corpus: CorpusConfig = CorpusConfig()
    synth: SynthConfig = SynthConfig()

    @property
    def input_shape(self):
        return self.representation.input_shape(self.spectrogram)

    def model_config(self):
        return self.model.resolve(self.input_shape)

    @classmethod
    def from_parser(cls, parser):
        unknown = set(parser.sections()) - set(_SECTIONS)
        if unknown:
            raise ConfigError(sorted(unknown)[0], "*", "unknown section")

        train = _section(parser, "train", TrainConfig, skip=("hyper",), ignore=_HYPER_KEYS)
        hyper = {}
        if parser.has_section("train"):
            for key in _HYPER_KEYS:
                if parser.has_option("train", key):
                    default = getattr(AdamHyper(), key)
                    hyper[key] = _coerce("train", key, parser.get("train", key), default)

        train["hyper"] = _build("train", AdamHyper, hyper)
        return cls(
            _build("paths", PathsConfig, _section(parser, "paths", PathsConfig)),
            _build("spectrogram", SpectrogramConfig, _section(parser, "spectrogram", SpectrogramConfig)),
            _build("representation", RepresentationConfig, _section(parser, "representation", RepresentationConfig)),
            _build("model", ModelSettings, _section(parser, "model", ModelSettings)),
            _build("train", TrainConfig, train),
            _build("scoring", ScoringConfig, _section(parser, "scoring", ScoringConfig)),
            _build("corpus", CorpusConfig, _section(parser, "corpus", CorpusConfig)),
            _build("synth", SynthConfig, _section(parser, "synth", SynthConfig)),
        )

    @classmethod
    def from_text(cls, text):
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as e:
            raise ConfigError("*", "*", str(e).splitlines()[0])

        return cls.from_parser(parser)

    @classmethod
    def load(cls, path):
        return cls.from_text(pathlib.Path(path).read_text(encoding="utf-8"))

    def to_dict(self):
        data = dataclasses.asdict(self)
        data["train"].update(data["train"].pop("hyper"))
        return data

    @classmethod
    def from_dict(cls, data):
        data = {section: dict(values) for section, values in data.items()}
        train = data.get("train", {})
        hyper = {key: train.pop(key) for key in _HYPER_KEYS if key in train}
        train["hyper"] = AdamHyper(**hyper)
        classes = {
            "paths": PathsConfig,
            "spectrogram": SpectrogramConfig,
            "representation": RepresentationConfig,
            "model": ModelSettings,
            "train": TrainConfig,
            "scoring": ScoringConfig,
            "corpus": CorpusConfig,
            "synth": SynthConfig,
        }
        sections = {}
        for name, values in data.items():
            if name not in classes:
                continue

            sections[name] = _build(name, classes[name], values)

        return cls(**sections)

    def replace(self, section, **changes):
        """
        Copy with some fields of one section replaced; None values are ignored
        """
        changes = {key: value for key, value in changes.items() if value is not None}
        if not changes:
            return self

        if section == "train":
            hyper = {key: changes.pop(key) for key in _HYPER_KEYS if key in changes}
            if hyper:
                changes["hyper"] = dataclasses.replace(self.train.hyper, **hyper)

        current = getattr(self, section)
        try:
            updated = dataclasses.replace(current, **changes)
        except (TypeError, ValueError) as e:
            raise ConfigError(section, ",".join(sorted(changes)), str(e))

        return dataclasses.replace(self, **{section: updated})


def _default(value):
    if isinstance(value, pathlib.PurePath):
        return str(value)

    raise TypeError


def load_experiment(path=None):
    """
    ExperimentConfig from an INI file or a JSON run manifest; defaults
    when path is None
    """
    if path is None:
        return ExperimentConfig()

    path = pathlib.Path(path)
    if path.suffix == ".json":
        data = orjson.loads(path.read_bytes())
        return ExperimentConfig.from_dict(data["config"])

    return ExperimentConfig.load(path)


def write_run_manifest(path, config, **extra):
    """
    JSON record of every setting of a run, enough to re-run it
    """
    data = {"config": config.to_dict(), **extra}
    pathlib.Path(path).write_bytes(
        orjson.dumps(data, default=_default, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS)
    )
    log.debug("wrote run manifest %s", path)
