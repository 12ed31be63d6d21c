import dataclasses
import logging
import math
import time

import numpy as np

from . import nn
from .enums import Label
from .errors import EmptyDatasetError, NonFiniteError, NonFiniteLossError, ShapeError
from .models import forward
from .util import make_rng


__all__ = (
    "LabeledExample",
    "TrainConfig",
    "EpochLog",
    "EarlyStopping",
    "Trainer",
    "to_samples",
    "make_batches",
    "run_epoch",
    "evaluate_loss",
    "train",
)

log = logging.getLogger(__name__)


def _values(split):
    return split.values if hasattr(split, "values") else np.asarray(split, dtype=np.float64)


@dataclasses.dataclass(frozen=True, eq=False)
class LabeledExample:
    utterance_id: str
    splits: tuple
    label: Label

    def __post_init__(self):
        splits = tuple(self.splits)
        if not splits:
            raise ValueError(f"{self.utterance_id} has no splits")

        shape = _values(splits[0]).shape
        for split in splits:
            if _values(split).shape != shape:
                raise ShapeError(shape, _values(split).shape, what=f"split of {self.utterance_id}")

        object.__setattr__(self, "splits", splits)
        object.__setattr__(self, "label", Label(self.label))

    def arrays(self):
        return np.stack([_values(split) for split in self.splits])


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    max_epochs: int = 300
    patience: int = 30
    hyper: nn.AdamHyper = nn.AdamHyper()
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")

        if self.max_epochs < 1 or self.patience < 1:
            raise ValueError("max_epochs and patience must be at least 1")

        # patience beyond max_epochs can never trigger a stop
        object.__setattr__(self, "patience", min(self.patience, self.max_epochs))


@dataclasses.dataclass(frozen=True)
class EpochLog:
    epoch: int
    train_loss: float
    dev_loss: float
    seconds: float

    def to_line(self):
        return f"{self.epoch}\t{self.train_loss:.6f}\t{self.dev_loss:.6f}\t{self.seconds:.3f}"


class EarlyStopping:
    """
    Strict improvement of the best validation loss, no minimum delta; stops
    after patience consecutive epochs without one
    """

    def __init__(self, patience):
        self.patience = patience
        self.best_loss = math.inf
        self.best_epoch = None
        self.bad_epochs = 0

    def update(self, epoch, loss):
        if loss < self.best_loss:
            self.best_loss = loss
            self.best_epoch = epoch
            self.bad_epochs = 0
            return True

        self.bad_epochs += 1
        return False

    @property
    def should_stop(self):
        return self.bad_epochs >= self.patience


def to_samples(examples):
    """
    Every split becomes one sample carrying its utterance's label
    """
    examples = list(examples)
    if not examples:
        raise EmptyDatasetError("example set")

    x = np.concatenate([example.arrays() for example in examples])[:, None]
    y = np.concatenate(
        [np.full(len(example.splits), int(example.label)) for example in examples]
    )
    return x, y


def make_batches(examples, batch_size, rng):
    x, y = to_samples(examples)
    order = rng.permutation(len(y))
    return [
        (x[order[start : start + batch_size]], y[order[start : start + batch_size]])
        for start in range(0, len(y), batch_size)
    ]


def run_epoch(net, batches, hyper, rng, state=None, epoch=None):
    """
    One Adam step per batch with dropout active; returns the network, the
    optimizer state and the sample-weighted mean loss
    """
    state = state if state is not None else nn.AdamState.fresh(net.params)
    total = 0.0
    count = 0
    for index, (x, y) in enumerate(batches):
        net.zero_grad()
        try:
            loss = nn.cross_entropy(forward(net, x, training=True, rng=rng), y)
        except NonFiniteError:
            raise NonFiniteLossError(index, epoch)

        value = loss.item()
        if not math.isfinite(value):
            raise NonFiniteLossError(index, epoch)

        loss.backward()
        nn.adam_step(net.params, state, hyper)
        total += value * len(y)
        count += len(y)

    return net, state, total / count


def evaluate_loss(net, examples, batch_size=256):
    """
    Inference-mode mean cross entropy over all splits of all examples
    """
    x, y = to_samples(examples)
    total = 0.0
    for start in range(0, len(y), batch_size):
        logits = forward(net, x[start : start + batch_size], training=False)
        loss, _ = nn.softmax_cross_entropy(logits, y[start : start + batch_size])
        total += loss * len(y[start : start + batch_size])

    return total / len(y)


class Trainer:
    """
    Runs the training recipe and reports progress to listeners

    Events: EPOCH_END(EpochLog), BEST_IMPROVED(epoch, network, adam_state)
    """

    def __init__(self, config=TrainConfig()):
        self.config = config
        self._listeners = {}

    def add_listener(self, event, callback):
        event = event.upper()
        if event not in self._listeners:
            self._listeners[event] = [callback]

        else:
            self._listeners[event].append(callback)

    def listener(self, func):
        event = func.__name__.replace("on_", "", 1)
        self.add_listener(event, func)

        return func

    def _dispatch(self, event, *args):
        for listener in self._listeners.get(event, ()):
            listener(*args)

    def train(self, net, train_set, dev_set):
        train_set = list(train_set)
        dev_set = list(dev_set)
        if not train_set:
            raise EmptyDatasetError("training set")

        if not dev_set:
            raise EmptyDatasetError("validation set")

        cfg = self.config
        stopping = EarlyStopping(cfg.patience)
        state = nn.AdamState.fresh(net.params)
        best = net.snapshot()
        logs = []

        for epoch in range(1, cfg.max_epochs + 1):
            started = time.perf_counter()
            batches = make_batches(train_set, cfg.batch_size, make_rng(cfg.seed, "shuffle", epoch))
            net, state, train_loss = run_epoch(
                net, batches, cfg.hyper, make_rng(cfg.seed, "dropout", epoch), state, epoch
            )
            dev_loss = evaluate_loss(net, dev_set)
            entry = EpochLog(epoch, train_loss, dev_loss, time.perf_counter() - started)
            logs.append(entry)

            improved = stopping.update(epoch, dev_loss)
            log.info(
                "epoch %d train %.4f dev %.4f (%.1fs)%s",
                epoch,
                train_loss,
                dev_loss,
                entry.seconds,
                " *" if improved else "",
            )
            self._dispatch("EPOCH_END", entry)
            if improved:
                best = net.snapshot()
                self._dispatch("BEST_IMPROVED", epoch, net, state)

            if stopping.should_stop:
                log.info(
                    "no improvement for %d epochs, stopping; best epoch %d (dev %.4f)",
                    stopping.bad_epochs,
                    stopping.best_epoch,
                    stopping.best_loss,
                )
                break

        result = net.copy()
        result.load_snapshot(best)
        return result, logs


def train(net, train_set, dev_set, cfg=TrainConfig()):
    return Trainer(cfg).train(net, train_set, dev_set)
