import dataclasses
import logging
import pathlib

import numpy as np

from scipy.stats import norm

from . import nn
from .enums import EERMethod, Label
from .errors import EERError, ScoreFormatError, ShapeError
from .models import embed, forward


__all__ = (
    "PROBABILITY_CLAMP",
    "VARIANCE_FLOOR",
    "TrialScore",
    "ScoreSet",
    "GaussianBackend",
    "posterior_to_llr",
    "logits_to_llr",
    "split_llrs",
    "score_utterance",
    "pav",
    "rocch",
    "rocch_eer",
    "interpolated_eer",
    "eer",
    "fit_gaussian_backend",
    "gaussian_llr",
    "backend_utterance_score",
    "read_scores",
    "write_scores",
)

log = logging.getLogger(__name__)

PROBABILITY_CLAMP = 1e-12
VARIANCE_FLOOR = 1e-6


@dataclasses.dataclass(frozen=True)
class TrialScore:
    utterance_id: str
    score: float
    label: Label = None

    def __post_init__(self):
        object.__setattr__(self, "score", float(self.score))
        if not np.isfinite(self.score):
            raise ValueError(f"score for {self.utterance_id} is not finite")


class ScoreSet(list):
    """
    Ordered list of TrialScore with class-wise views for evaluation
    """

    def by_label(self, label):
        return np.array([t.score for t in self if t.label is label], dtype=np.float64)

    @property
    def genuine(self):
        return self.by_label(Label.GENUINE)

    @property
    def spoofed(self):
        return self.by_label(Label.SPOOF)

    @property
    def scores(self):
        return np.array([t.score for t in self], dtype=np.float64)

    @property
    def labelled(self):
        return all(t.label is not None for t in self)


def posterior_to_llr(p_genuine):
    p = np.clip(p_genuine, PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
    return np.log(p) - np.log1p(-p)


def logits_to_llr(logits):
    """
    ln(p/(1-p)) of a softmax pair, exactly z_genuine - z_spoof
    """
    z = logits.data if isinstance(logits, nn.Tensor) else np.asarray(logits)
    return z[:, Label.GENUINE] - z[:, Label.SPOOF]


def _stack(splits):
    return np.stack([s.values if hasattr(s, "values") else np.asarray(s) for s in splits])[:, None]


def split_llrs(net, splits):
    return logits_to_llr(forward(net, _stack(splits), training=False))


def score_utterance(net, splits):
    """
    Mean of the per-split LLRs, inference mode
    """
    if len(splits) == 0:
        raise ValueError("an utterance needs at least one split")

    return float(np.mean(split_llrs(net, splits)))


def pav(y):
    """
    Pool-adjacent-violators: the non-decreasing fit of y as (values, widths),
    equal neighbours merged into one block
    """
    values = []
    widths = []
    for v in np.asarray(y, dtype=np.float64):
        values.append(v)
        widths.append(1)
        while len(values) > 1 and values[-2] >= values[-1]:
            w = widths[-2] + widths[-1]
            v = (values[-2] * widths[-2] + values[-1] * widths[-1]) / w
            values[-2:] = [v]
            widths[-2:] = [w]

    return np.array(values), np.array(widths, dtype=np.int64)


def _split_classes(scores):
    if isinstance(scores, tuple) and len(scores) == 2:
        genuine, spoofed = scores

    else:
        scores = ScoreSet(scores)
        genuine, spoofed = scores.genuine, scores.spoofed

    genuine = np.asarray(genuine, dtype=np.float64).reshape(-1)
    spoofed = np.asarray(spoofed, dtype=np.float64).reshape(-1)
    if genuine.size == 0 or spoofed.size == 0:
        raise EERError("EER needs at least one genuine and one spoofed trial")

    return genuine, spoofed


def rocch(genuine, spoofed):
    """
    (p_miss, p_fa) vertices of the ROC convex hull; genuine scores precede
    spoofed ones on ties so that tied trials are pooled
    """
    n_gen, n_spoof = genuine.size, spoofed.size
    ideal = np.concatenate([np.ones(n_gen), np.zeros(n_spoof)])
    order = np.argsort(np.concatenate([genuine, spoofed]), kind="stable")
    ideal = ideal[order]
    _, widths = pav(ideal)

    p_miss = np.zeros(widths.size + 1)
    p_fa = np.zeros(widths.size + 1)
    left = 0
    miss = 0.0
    fa = float(n_spoof)
    total = n_gen + n_spoof
    for i, width in enumerate(widths):
        p_miss[i] = miss / n_gen
        p_fa[i] = fa / n_spoof
        left += width
        miss = ideal[:left].sum()
        fa = total - left - ideal[left:].sum()

    p_miss[-1] = miss / n_gen
    p_fa[-1] = fa / n_spoof
    return p_miss, p_fa


def rocch_eer(genuine, spoofed):
    p_miss, p_fa = rocch(genuine, spoofed)
    best = 0.0
    for i in range(p_fa.size - 1):
        xx = p_fa[i : i + 2]
        yy = p_miss[i : i + 2]
        if xx[0] == xx[1] or yy[0] == yy[1]:
            # axis-parallel hull segments meet the diagonal only at a vertex
            # that a neighbouring segment already covers
            continue

        # line a*p_fa + b*p_miss = 1 through both vertices crosses the
        # diagonal at 1 / (a + b)
        a, b = np.linalg.solve(np.column_stack([xx, yy]), np.ones(2))
        best = max(best, 1.0 / (a + b))

    return float(best)


def interpolated_eer(genuine, spoofed):
    """
    Operating points after each distinct score; the first point where
    p_fa - p_miss <= 0, linearly interpolated with its predecessor
    """
    thresholds = np.unique(np.concatenate([genuine, spoofed]))
    gen_sorted = np.sort(genuine)
    spoof_sorted = np.sort(spoofed)
    rejected_gen = np.searchsorted(gen_sorted, thresholds, side="right")
    rejected_spoof = np.searchsorted(spoof_sorted, thresholds, side="right")
    p_miss = np.concatenate([[0.0], rejected_gen / genuine.size])
    p_fa = np.concatenate([[1.0], 1.0 - rejected_spoof / spoofed.size])

    gap = p_fa - p_miss
    k = int(np.argmax(gap <= 0))
    if gap[k] == 0:
        return float(p_miss[k])

    t = gap[k - 1] / (gap[k - 1] - gap[k])
    return float(p_miss[k - 1] + t * (p_miss[k] - p_miss[k - 1]))


def eer(scores, method=EERMethod.ROCCH):
    """
    Equal error rate of a labelled ScoreSet (or a (genuine, spoofed) pair of
    score arrays) as a fraction in [0, 0.5]
    """
    genuine, spoofed = _split_classes(scores)
    if EERMethod(method) is EERMethod.ROCCH:
        return rocch_eer(genuine, spoofed)

    return interpolated_eer(genuine, spoofed)


@dataclasses.dataclass(frozen=True, eq=False)
class GaussianBackend:
    genuine_mean: np.ndarray
    genuine_var: np.ndarray
    spoof_mean: np.ndarray
    spoof_var: np.ndarray

    @property
    def dimension(self):
        return self.genuine_mean.size

    def to_arrays(self):
        return {
            "genuine_mean": self.genuine_mean,
            "genuine_var": self.genuine_var,
            "spoof_mean": self.spoof_mean,
            "spoof_var": self.spoof_var,
        }

    def save(self, path):
        with open(path, "wb") as f:
            np.savez(f, **self.to_arrays())

    @classmethod
    def load(cls, path):
        with np.load(path) as data:
            return cls(**{key: data[key] for key in data.files})


def _moments(samples, label):
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise ValueError(f"{Label(label).token} class needs at least two embeddings")

    return samples.mean(axis=0), np.maximum(samples.var(axis=0), VARIANCE_FLOOR)


def fit_gaussian_backend(embeddings_by_class):
    """
    Maximum-likelihood diagonal Gaussian per class, variances floored
    """
    genuine_mean, genuine_var = _moments(embeddings_by_class[Label.GENUINE], Label.GENUINE)
    spoof_mean, spoof_var = _moments(embeddings_by_class[Label.SPOOF], Label.SPOOF)
    if genuine_mean.shape != spoof_mean.shape:
        raise ShapeError(genuine_mean.shape, spoof_mean.shape, what="embedding dimension")

    return GaussianBackend(genuine_mean, genuine_var, spoof_mean, spoof_var)


def gaussian_llr(backend, embedding):
    x = np.asarray(embedding, dtype=np.float64)
    if x.shape[-1] != backend.dimension:
        raise ShapeError(backend.dimension, x.shape[-1], what="embedding dimension")

    genuine = norm.logpdf(x, backend.genuine_mean, np.sqrt(backend.genuine_var)).sum(axis=-1)
    spoofed = norm.logpdf(x, backend.spoof_mean, np.sqrt(backend.spoof_var)).sum(axis=-1)
    return genuine - spoofed


def backend_utterance_score(backend, net, splits):
    return float(np.mean(gaussian_llr(backend, embed(net, _stack(splits)))))


def write_scores(scores, path, with_labels=None):
    """
    One trial per line: utt_id<TAB>score, or utt_id<TAB>label<TAB>score when
    every trial carries a label
    """
    if with_labels is None:
        with_labels = len(scores) > 0 and all(t.label is not None for t in scores)

    with open(path, "w", encoding="utf-8") as f:
        for trial in scores:
            if with_labels:
                f.write(f"{trial.utterance_id}\t{trial.label.token}\t{trial.score!r}\n")

            else:
                f.write(f"{trial.utterance_id}\t{trial.score!r}\n")


def read_scores(path):
    scores = ScoreSet()
    text = pathlib.Path(path).read_text(encoding="utf-8")
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue

        fields = line.strip().split("\t") if "\t" in line else line.split()
        try:
            if len(fields) == 2:
                scores.append(TrialScore(fields[0], float(fields[1])))

            elif len(fields) == 3:
                scores.append(TrialScore(fields[0], float(fields[2]), Label.parse(fields[1])))

            else:
                raise ValueError("expected 2 or 3 fields")

        except ValueError:
            raise ScoreFormatError(number, line)

    return scores
