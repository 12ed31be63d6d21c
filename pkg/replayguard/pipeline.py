import dataclasses
import logging
import pathlib

import numpy as np

from .audio import (
    fit_normalizer,
    fix_length,
    log_power_spectrogram,
    normalize,
    pad_or_truncate_whole_seconds,
    read_wav,
    split_spectrogram,
)
from .cache import LocalFeatureCache, load_norm_stats, save_norm_stats
from .config import load_experiment, write_run_manifest
from .corpus import CorpusManifest, trim_leading_zeros
from .enums import Activation, Label, Representation, Subset
from .errors import CacheFormatError, ConfigError, ShapeError
from .models import ModelConfig, Network, build, count_params, embed
from .nn import load_checkpoint, save_checkpoint
from .scoring import (
    GaussianBackend,
    ScoreSet,
    TrialScore,
    backend_utterance_score,
    eer,
    fit_gaussian_backend,
    score_utterance,
    write_scores,
)
from .trainer import LabeledExample, Trainer
from .util import ordered_map


__all__ = (
    "RUN_FILES",
    "Featurizer",
    "RunResult",
    "SweepRow",
    "SWEEP_AXES",
    "load_manifest",
    "fit_norm",
    "featurize_manifest",
    "load_examples",
    "compute_examples",
    "fit_backend",
    "score_examples",
    "prepare_run",
    "run_experiment",
    "load_run",
    "sweep",
)

log = logging.getLogger(__name__)

RUN_FILES = {
    "checkpoint": "best.ckpt",
    "model": "model.cfg",
    "norm": "norm.npz",
    "log": "train.log",
    "manifest": "run.json",
    "scores": "dev_scores.txt",
    "backend": "backend.npz",
}

SWEEP_AXES = {
    "batch": (8, 16, 32, 64),
    "activation": (Activation.MFM, Activation.RELU, Activation.ELU),
    "representation": (Representation.SPLIT, Representation.SINGLE),
}


class Featurizer:
    """
    Audio file to network inputs: read, optional leading-zero trim, length
    adjustment, log-power spectrogram, normalization, splitting
    """

    def __init__(self, spectrogram, representation, trim=False, norm=None):
        self.spectrogram = spectrogram
        self.representation = representation
        self.trim = trim
        self.norm = norm

    @classmethod
    def from_config(cls, config, norm=None):
        return cls(
            config.spectrogram,
            config.representation,
            config.corpus.trim_leading_zeros,
            norm,
        )

    def with_norm(self, norm):
        return Featurizer(self.spectrogram, self.representation, self.trim, norm)

    def waveform(self, path):
        w = trim_leading_zeros(read_wav(path, self.spectrogram.sample_rate), self.trim)
        if self.representation.mode is Representation.SPLIT:
            return pad_or_truncate_whole_seconds(w)

        return fix_length(w, self.representation.seconds)

    def raw_spectrogram(self, path):
        return log_power_spectrogram(self.waveform(path), self.spectrogram)

    def splits(self, spec):
        if self.norm is not None:
            spec = normalize(spec, self.norm)

        if self.representation.mode is Representation.SPLIT:
            return split_spectrogram(spec, self.representation.split)

        expected = self.representation.n_frames(self.spectrogram)
        if spec.n_frames != expected:
            raise ShapeError(expected, spec.n_frames, what="single spectrogram frames")

        return [spec]

    def __call__(self, path):
        return self.splits(self.raw_spectrogram(path))


def load_manifest(config, subset):
    """
    CorpusManifest of the train or dev subset named in the [paths] section
    """
    subset = Subset(subset)
    protocol = getattr(config.paths, f"{subset.value}_protocol")
    if not protocol:
        raise ConfigError("paths", f"{subset.value}_protocol", "not set")

    audio = getattr(config.paths, f"{subset.value}_audio", None) or None
    return CorpusManifest.load(protocol, audio, subset, config.corpus.blacklist)


def fit_norm(manifest, featurizer, workers=1, quiet=True):
    """
    Normalizer fitted on the whole length-adjusted spectrograms of a
    training manifest
    """
    specs = ordered_map(
        lambda entry: featurizer.raw_spectrogram(manifest.audio_path(entry)),
        manifest.entries,
        workers,
        desc="fit-norm",
        quiet=quiet,
    )
    log.info("fitted normalizer on %d utterances", len(specs))
    return fit_normalizer(specs)


def featurize_manifest(manifest, featurizer, cache, workers=1, quiet=True):
    """
    Stores the splits of every utterance in cache; returns the split counts
    in manifest order
    """
    results = ordered_map(
        lambda entry: featurizer(manifest.audio_path(entry)),
        manifest.entries,
        workers,
        desc=f"featurize {manifest.subset.value}",
        quiet=quiet,
    )
    counts = []
    for entry, splits in zip(manifest.entries, results):
        cache.store(entry.file_id, splits)
        counts.append(len(splits))

    log.info(
        "featurized %d %s utterances into %d samples",
        len(counts),
        manifest.subset.value,
        sum(counts),
    )
    return counts


def load_examples(manifest, cache):
    examples = []
    for entry in manifest:
        splits = cache.get(entry.file_id)
        if splits is None:
            raise CacheFormatError(entry.file_id, "no cached features, featurize first")

        examples.append(LabeledExample(entry.file_id, splits, entry.label))

    return examples


def compute_examples(manifest, featurizer, workers=1, quiet=True):
    cache = LocalFeatureCache()
    featurize_manifest(manifest, featurizer, cache, workers, quiet)
    return load_examples(manifest, cache)


def fit_backend(net, examples):
    """
    Gaussian back-end over the split embeddings of a labelled set
    """
    by_class = {Label.GENUINE: [], Label.SPOOF: []}
    for example in examples:
        by_class[example.label].append(embed(net, example.arrays()[:, None]))

    return fit_gaussian_backend(
        {
            label: np.concatenate(chunks) if chunks else np.empty((0, 0))
            for label, chunks in by_class.items()
        }
    )


def score_examples(net, examples, backend=None, workers=1, quiet=True):
    """
    One TrialScore per utterance: mean split LLR from the network, or from
    the Gaussian back-end when one is given
    """

    def _score(example):
        if backend is None:
            return score_utterance(net, example.splits)

        return backend_utterance_score(backend, net, example.splits)

    values = ordered_map(_score, examples, workers, desc="score", quiet=quiet)
    return ScoreSet(
        TrialScore(example.utterance_id, value, example.label)
        for example, value in zip(examples, values)
    )


@dataclasses.dataclass
class RunResult:
    network: object
    logs: list
    scores: ScoreSet
    eer: float
    output_dir: pathlib.Path

    @property
    def best_epoch(self):
        return min(self.logs, key=lambda entry: entry.dev_loss).epoch


def prepare_run(config, workers=1, quiet=True):
    """
    (train examples, dev examples, normalizer) for an experiment config
    """
    train_manifest = load_manifest(config, Subset.TRAIN)
    dev_manifest = load_manifest(config, Subset.DEV)
    featurizer = Featurizer.from_config(config)
    norm = fit_norm(train_manifest, featurizer, workers, quiet)
    featurizer = featurizer.with_norm(norm)
    train_set = compute_examples(train_manifest, featurizer, workers, quiet)
    dev_set = compute_examples(dev_manifest, featurizer, workers, quiet)
    return train_set, dev_set, norm


def run_experiment(config, output_dir, train_set, dev_set, norm=None, workers=1, quiet=True):
    """
    Builds and trains a model, writes the run directory (best checkpoint,
    epoch log, model config, normalizer, run manifest, dev scores) and
    returns the dev EER
    """
    output_dir = pathlib.Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    model_config = config.model_config()
    net = build(model_config, seed=config.train.seed)
    log.info("model with %d parameters, input %s", count_params(net), model_config.input_shape)

    model_config.save(output_dir / RUN_FILES["model"])
    if norm is not None:
        save_norm_stats(output_dir / RUN_FILES["norm"], norm)

    trainer = Trainer(config.train)
    epoch_log = open(output_dir / RUN_FILES["log"], "w", encoding="utf-8")

    @trainer.listener
    def on_epoch_end(entry):
        epoch_log.write(entry.to_line() + "\n")
        epoch_log.flush()

    @trainer.listener
    def on_best_improved(epoch, network, state):
        save_checkpoint(output_dir / RUN_FILES["checkpoint"], network.params, state)
        log.debug("epoch %d is the new best, checkpoint written", epoch)

    try:
        net, logs = trainer.train(net, train_set, dev_set)
    finally:
        epoch_log.close()

    backend = None
    if config.scoring.backend == "gaussian":
        backend = fit_backend(net, train_set)
        backend.save(output_dir / RUN_FILES["backend"])

    scores = score_examples(net, dev_set, backend, workers, quiet)
    write_scores(scores, output_dir / RUN_FILES["scores"])
    result = eer(scores, config.scoring.method)

    write_run_manifest(
        output_dir / RUN_FILES["manifest"],
        config,
        parameters=count_params(net),
        epochs=len(logs),
        best_epoch=min(logs, key=lambda entry: entry.dev_loss).epoch,
        dev_eer=result,
    )
    log.info("dev EER %.2f%% (%s)", 100 * result, config.scoring.method.value)
    return RunResult(net, logs, scores, result, output_dir)


def load_run(run_dir):
    """
    (config, network, normalizer or None, backend or None) of a run directory
    """
    run_dir = pathlib.Path(run_dir)
    config = load_experiment(run_dir / RUN_FILES["manifest"])
    model_config = ModelConfig.load(run_dir / RUN_FILES["model"])
    params, _ = load_checkpoint(run_dir / RUN_FILES["checkpoint"])
    net = Network.from_arrays(model_config, params, seed=config.train.seed)
    norm_path = run_dir / RUN_FILES["norm"]
    norm = load_norm_stats(norm_path) if norm_path.is_file() else None
    backend_path = run_dir / RUN_FILES["backend"]
    backend = GaussianBackend.load(backend_path) if backend_path.is_file() else None
    return config, net, norm, backend


@dataclasses.dataclass(frozen=True)
class SweepRow:
    setting: str
    dev_eer: float
    best_epoch: int
    epochs: int


def _sweep_config(config, axis, setting):
    if axis == "batch":
        return config.replace("train", batch_size=int(setting))

    if axis == "activation":
        return config.replace("model", activation=Activation(setting))

    return config.replace("representation", mode=Representation(setting))


def sweep(config, axis, output_dir, settings=None, workers=1, quiet=True):
    """
    Trains and scores one model per setting of axis with the shared base
    seed; returns one SweepRow per setting
    """
    if axis not in SWEEP_AXES:
        raise ConfigError("sweep", "axis", f"expected one of {sorted(SWEEP_AXES)}")

    settings = tuple(SWEEP_AXES[axis] if settings is None else settings)
    if not settings:
        raise ConfigError("sweep", axis, "no settings to sweep")

    output_dir = pathlib.Path(output_dir)
    prepared = {}
    rows = []
    for setting in settings:
        run_config = _sweep_config(config, axis, setting)
        label = getattr(setting, "value", str(setting))
        key = run_config.representation
        if key not in prepared:
            prepared[key] = prepare_run(run_config, workers, quiet)

        train_set, dev_set, norm = prepared[key]
        log.info("sweep %s=%s", axis, label)
        result = run_experiment(
            run_config, output_dir / f"{axis}-{label}", train_set, dev_set, norm, workers, quiet
        )
        rows.append(SweepRow(label, result.eer, result.best_epoch, len(result.logs)))

    return rows
