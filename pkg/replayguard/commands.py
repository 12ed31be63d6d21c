import dataclasses
import logging
import pathlib

import orjson

from . import pipeline
from .cache import DiskFeatureCache, load_norm_stats, save_norm_stats
from .cmd import App, CommaList, Module, path_exists
from .config import MODEL3, load_experiment
from .corpus import CorpusManifest, compare_configurations, configuration_stats, subset_summary
from .enums import Activation, EERMethod, Representation, Subset
from .models import ModelConfig, count_params, model3_default, shape_trace
from .scoring import eer, read_scores, write_scores
from .synth import PROTOCOL_NAME, generate_synthetic_corpus


__all__ = (
    "CorpusCommands",
    "FeatureCommands",
    "TrainingCommands",
    "EvaluationCommands",
    "ModelCommands",
    "create_app",
    "main",
)

log = logging.getLogger(__name__)

EXPERIMENT_FILE = "experiment.ini"


def _representation(config, single=False, seconds=None, spec_wind=None, wind_shift=None):
    config = config.replace("representation", seconds=seconds, spec_wind=spec_wind, wind_shift=wind_shift)
    if single:
        config = config.replace("representation", mode=Representation.SINGLE)

    return config


def _format_shape(shape):
    return "x".join(str(d) for d in shape)


class CorpusCommands(Module):
    @Module.command()
    def synth(
        self,
        ctx,
        out: pathlib.Path,
        *,
        config: str = None,
        seed: int = None,
        train_count: int = 200,
        dev_count: int = 50,
        leading_silence: float = None,
        workers: int = 1,
    ):
        """
        Generate a synthetic genuine/replayed corpus with train and dev subsets

        Each subset gets its WAV files and a protocol.txt; an experiment.ini
        pointing at both is written next to them.
        """
        experiment = load_experiment(config).replace(
            "synth", seed=seed, genuine_leading_silence=leading_silence
        )
        subsets = {
            Subset.TRAIN: dataclasses.replace(
                experiment.synth, n_genuine=train_count, n_spoof=train_count, file_prefix="T_"
            ),
            Subset.DEV: dataclasses.replace(
                experiment.synth, n_genuine=dev_count, n_spoof=dev_count, file_prefix="D_"
            ),
        }
        for subset, synth_config in subsets.items():
            manifest = generate_synthetic_corpus(
                synth_config, out / subset.value, subset, workers, ctx.quiet
            )
            stats = configuration_stats(manifest)
            ctx.echo(
                f"{subset.value}: {synth_config.n_genuine} genuine, {synth_config.n_spoof} spoofed, "
                f"{len(stats.configuration)} configurations -> {out / subset.value}"
            )

        root = out.resolve()
        (out / EXPERIMENT_FILE).write_text(
            "[paths]\n"
            f"train_protocol = {root / Subset.TRAIN.value / PROTOCOL_NAME}\n"
            f"dev_protocol = {root / Subset.DEV.value / PROTOCOL_NAME}\n"
            f"output_dir = {root / 'runs'}\n",
            encoding="utf-8",
        )

    @Module.command()
    @path_exists("protocol", "audio", "reference")
    def stats(
        self,
        ctx,
        protocol,
        *,
        audio: str = None,
        subset: Subset = Subset.TRAIN,
        reference: str = None,
        durations: bool = False,
        blacklist: CommaList = (),
    ):
        """
        Summarize a protocol: class counts and spoofing configurations

        With --reference, also list the ids and configurations that the
        reference protocol never contains.
        """
        manifest = CorpusManifest.load(protocol, audio, subset, blacklist)
        summary = subset_summary(manifest, durations=durations)
        ctx.echo(f"subset: {summary.subset.value}")
        ctx.echo(f"speakers: {summary.speakers}")
        ctx.echo(f"genuine: {summary.genuine}")
        ctx.echo(f"spoofed: {summary.spoofed}")
        if summary.hours is not None:
            ctx.echo(f"hours: {summary.hours:.2f}")

        stats = configuration_stats(manifest)
        for title, counter in (
            ("environments", stats.environment),
            ("playback devices", stats.playback),
            ("recording devices", stats.recording),
            ("configurations", stats.configuration),
        ):
            ctx.echo(f"{title}: {len(counter)}")
            for key, count in sorted(counter.items()):
                ctx.echo(f"  {key}\t{count}")

        if reference:
            comparison = compare_configurations(CorpusManifest.load(reference, subset=Subset.TRAIN), manifest)
            for title, values in (
                ("unseen environments", comparison.unseen_environments),
                ("unseen playback devices", comparison.unseen_playback),
                ("unseen recording devices", comparison.unseen_recording),
                ("unseen configurations", comparison.unseen_configurations),
                ("shared configurations", comparison.shared_configurations),
            ):
                ctx.echo(f"{title}: {' '.join(sorted(values)) or '-'}")


class FeatureCommands(Module):
    @Module.command()
    @path_exists("protocol", "audio", "norm", "config")
    def featurize(
        self,
        ctx,
        protocol,
        out: pathlib.Path,
        *,
        audio: str = None,
        subset: Subset = Subset.TRAIN,
        norm: str = None,
        config: str = None,
        single: bool = False,
        seconds: float = None,
        spec_wind: int = None,
        wind_shift: int = None,
        fft_size: int = None,
        workers: int = 1,
    ):
        """
        Write the spectrogram splits of every utterance as SPG1 files

        --norm applies normalizer statistics fitted on the training data.
        """
        experiment = _representation(load_experiment(config), single, seconds, spec_wind, wind_shift)
        experiment = experiment.replace("spectrogram", fft_size=fft_size, window_size=fft_size)
        manifest = CorpusManifest.load(protocol, audio, subset, experiment.corpus.blacklist)
        featurizer = pipeline.Featurizer.from_config(
            experiment, load_norm_stats(norm) if norm else None
        )
        cache = DiskFeatureCache(out, experiment.spectrogram.frame_hop_seconds)
        counts = pipeline.featurize_manifest(manifest, featurizer, cache, workers, ctx.quiet)
        shape = experiment.input_shape[1:]
        ctx.echo(f"{len(counts)} utterances, {sum(counts)} samples of {_format_shape(shape)} -> {out}")

    @featurize.command(name="fit-norm")
    @path_exists("protocol", "audio", "config")
    def fit_norm(
        self,
        ctx,
        protocol,
        out: pathlib.Path,
        *,
        audio: str = None,
        config: str = None,
        single: bool = False,
        seconds: float = None,
        fft_size: int = None,
        workers: int = 1,
    ):
        """
        Fit per-bin mean and standard deviation on a training protocol
        """
        experiment = _representation(load_experiment(config), single, seconds)
        experiment = experiment.replace("spectrogram", fft_size=fft_size, window_size=fft_size)
        manifest = CorpusManifest.load(protocol, audio, Subset.TRAIN, experiment.corpus.blacklist)
        stats = pipeline.fit_norm(manifest, pipeline.Featurizer.from_config(experiment), workers, ctx.quiet)
        save_norm_stats(out, stats)
        ctx.echo(f"normalizer over {stats.n_bins} bins -> {out}")


class TrainingCommands(Module):
    @staticmethod
    def _experiment(config, **overrides):
        experiment = load_experiment(config)
        experiment = _representation(
            experiment, overrides.pop("single", False), overrides.pop("seconds", None)
        )
        experiment = experiment.replace("model", activation=overrides.pop("activation", None))
        experiment = experiment.replace("corpus", trim_leading_zeros=overrides.pop("trim", None) or None)
        return experiment.replace("train", **overrides)

    @Module.command()
    @path_exists("config")
    def train(
        self,
        ctx,
        *,
        config: str = None,
        output: pathlib.Path = None,
        batch_size: int = None,
        max_epochs: int = None,
        patience: int = None,
        learning_rate: float = None,
        seed: int = None,
        activation: Activation = None,
        single: bool = False,
        seconds: float = None,
        trim: bool = False,
        workers: int = 1,
    ):
        """
        Train a model and write its run directory

        The run directory holds the best checkpoint, the epoch log, the model
        and normalizer files, dev scores and run.json, which can be passed
        back as --config to repeat the run.
        """
        experiment = self._experiment(
            config,
            batch_size=batch_size,
            max_epochs=max_epochs,
            patience=patience,
            learning_rate=learning_rate,
            seed=seed,
            activation=activation,
            single=single,
            seconds=seconds,
            trim=trim,
        )
        train_set, dev_set, norm = pipeline.prepare_run(experiment, workers, ctx.quiet)
        result = pipeline.run_experiment(
            experiment,
            output or experiment.paths.output_dir,
            train_set,
            dev_set,
            norm,
            workers,
            ctx.quiet,
        )
        ctx.echo(f"epochs: {len(result.logs)}, best epoch: {result.best_epoch}")
        ctx.echo(f"EER: {100 * result.eer:.2f}%")

    @Module.command()
    @path_exists("config")
    def sweep(
        self,
        ctx,
        axis,
        *,
        config: str = None,
        values: CommaList = None,
        output: pathlib.Path = None,
        max_epochs: int = None,
        patience: int = None,
        seed: int = None,
        workers: int = 1,
    ):
        """
        Train one model per setting of batch, activation or representation

        Prints a setting / dev EER table and writes sweep.json.
        """
        experiment = self._experiment(config, max_epochs=max_epochs, patience=patience, seed=seed)
        output = output or pathlib.Path(experiment.paths.output_dir) / f"sweep-{axis}"
        rows = pipeline.sweep(experiment, axis, output, values, workers, ctx.quiet)

        ctx.echo(f"{axis}\tEER\tbest epoch\tepochs")
        for row in rows:
            ctx.echo(f"{row.setting}\t{100 * row.dev_eer:.2f}%\t{row.best_epoch}\t{row.epochs}")

        pathlib.Path(output).mkdir(parents=True, exist_ok=True)
        (pathlib.Path(output) / "sweep.json").write_bytes(
            orjson.dumps(
                {"axis": axis, "rows": [dataclasses.asdict(row) for row in rows]},
                option=orjson.OPT_INDENT_2,
            )
        )


class EvaluationCommands(Module):
    @Module.command()
    @path_exists("run_dir", "protocol", "audio", "features")
    def score(
        self,
        ctx,
        run_dir,
        protocol,
        out: pathlib.Path,
        *,
        audio: str = None,
        features: str = None,
        subset: Subset = Subset.DEV,
        backend: str = "softmax",
        workers: int = 1,
    ):
        """
        Score every utterance of a protocol with a trained run

        The score is the mean split LLR; --backend gaussian scores the
        32-dimensional embeddings with per-class Gaussians fitted on the
        run's training data (fitted once, then stored in the run directory).
        """
        experiment, net, norm, gaussian = pipeline.load_run(run_dir)
        manifest = CorpusManifest.load(protocol, audio, subset, experiment.corpus.blacklist)
        if features:
            cache = DiskFeatureCache(features, experiment.spectrogram.frame_hop_seconds)
            examples = pipeline.load_examples(manifest, cache)

        else:
            featurizer = pipeline.Featurizer.from_config(experiment, norm)
            examples = pipeline.compute_examples(manifest, featurizer, workers, ctx.quiet)

        if backend == "gaussian" and gaussian is None:
            featurizer = pipeline.Featurizer.from_config(experiment, norm)
            train_manifest = pipeline.load_manifest(experiment, Subset.TRAIN)
            train_set = pipeline.compute_examples(train_manifest, featurizer, workers, ctx.quiet)
            gaussian = pipeline.fit_backend(net, train_set)
            gaussian.save(pathlib.Path(run_dir) / pipeline.RUN_FILES["backend"])
            log.info("fitted Gaussian back-end on %d training utterances", len(train_set))

        elif backend not in ("softmax", "gaussian"):
            raise ValueError(f"unknown backend {backend!r}")

        scores = pipeline.score_examples(
            net, examples, gaussian if backend == "gaussian" else None, workers, ctx.quiet
        )
        write_scores(scores, out)
        ctx.echo(f"{len(scores)} scores -> {out}")

    @Module.command()
    @path_exists("scores")
    def eer(self, ctx, scores, *, method: EERMethod = EERMethod.ROCCH):
        """
        Equal error rate of a labelled score file, in percent
        """
        ctx.echo(f"EER: {100 * eer(read_scores(scores), method):.2f}%")


class ModelCommands(Module):
    @Module.command()
    def inspect(self, ctx, model=MODEL3, *, input_shape: str = None):
        """
        Print the parameter count and the layer-by-layer output shapes
        """
        config = model3_default() if model == MODEL3 else ModelConfig.load(model)
        if input_shape:
            config = config.with_input_shape(int(d) for d in input_shape.lower().split("x"))

        ctx.echo(f"params: {count_params(config)}")
        ctx.echo(f"input\t{_format_shape(config.input_shape)}")
        for index, layer, shape in shape_trace(config):
            ctx.echo(f"{index}\t{layer.to_line()}\t{_format_shape(shape)}")


def create_app(out=None, err=None):
    app = App(out=out, err=err)
    for module in (CorpusCommands, FeatureCommands, TrainingCommands, EvaluationCommands, ModelCommands):
        app.add_module(module)

    return app


def main(argv=None):
    return create_app().run(argv)
