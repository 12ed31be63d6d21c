import math

from fractions import Fraction

import numpy as np
import pytest

from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from replayguard.enums import EERMethod, Label
from replayguard.errors import EERError, ScoreFormatError, ShapeError
from replayguard.models import build, embed, forward
from replayguard.scoring import *

from .conftest import tiny_config


def _operating_points(genuine, spoofed):
    """(p_fa, p_miss) for accept-if-score-above-threshold at every cut"""
    cuts = [-math.inf] + sorted(set(genuine) | set(spoofed))
    points = []
    for t in cuts:
        p_miss = sum(1 for s in genuine if s <= t) / len(genuine)
        p_fa = sum(1 for s in spoofed if s > t) / len(spoofed)
        points.append((p_fa, p_miss))

    return points


def _hull_eer_oracle(genuine, spoofed):
    """
    Smallest max(p_fa, p_miss) over all mixtures of two operating points,
    i.e. where the convex hull of the ROC meets the diagonal
    """
    points = _operating_points(genuine, spoofed)
    best = min(max(a, b) for a, b in points)
    for a_i, b_i in points:
        for a_j, b_j in points:
            d_i, d_j = a_i - b_i, a_j - b_j
            if d_i * d_j < 0:
                lam = d_j / (d_j - d_i)
                best = min(best, lam * a_i + (1 - lam) * a_j)

    return best


def _sweep_crossing_oracle(genuine, spoofed):
    """
    Walk the threshold upwards over the scores and the midpoints between them,
    counting errors exactly. At the first threshold where false acceptance no
    longer exceeds misses, intersect the segment from the previous point with
    the diagonal p_fa = p_miss.
    """
    values = sorted(set(genuine) | set(spoofed))
    thresholds = [Fraction(values[0]) - 1]
    for low, high in zip(values, values[1:] + [values[-1] + 2]):
        thresholds += [Fraction(low), (Fraction(low) + Fraction(high)) / 2]

    previous = None
    for t in thresholds:
        x = Fraction(sum(1 for s in spoofed if s > t), len(spoofed))
        y = Fraction(sum(1 for s in genuine if s <= t), len(genuine))
        if x <= y:
            if x == y:
                return float(y)

            x1, y1 = previous
            return float((x1 * y - x * y1) / ((x1 - x) - (y1 - y)))

        previous = (x, y)

    raise AssertionError("sweep never reached p_fa <= p_miss")


score_lists = st.lists(st.integers(min_value=0, max_value=12), min_size=1, max_size=25)


def test_posterior_to_llr():
    assert posterior_to_llr(0.5) == pytest.approx(0.0, abs=1e-15)
    assert posterior_to_llr(0.9) == pytest.approx(math.log(9))
    assert np.isfinite(posterior_to_llr(1.0))
    assert np.isfinite(posterior_to_llr(0.0))

    p = np.linspace(0.01, 0.99, 50)
    assert np.all(np.diff(posterior_to_llr(p)) > 0)


def test_logits_to_llr():
    assert_array_equal(logits_to_llr(np.array([[1.0, 2.0]])), [1.0])

    logits = np.array([[0.3, -1.2], [2.0, 0.5]])
    p_genuine = np.exp(logits[:, 1]) / np.exp(logits).sum(axis=1)
    assert_allclose(logits_to_llr(logits), posterior_to_llr(p_genuine), rtol=1e-12)


def test_score_utterance(rng):
    net = build(tiny_config(), seed=5)
    splits = [rng.normal(size=(8, 10)) for _ in range(3)]
    llrs = split_llrs(net, splits)
    assert llrs.shape == (3,)
    assert score_utterance(net, splits) == pytest.approx(llrs.mean())
    assert score_utterance(net, splits[:1]) == pytest.approx(llrs[0])
    assert score_utterance(net, splits[::-1]) == pytest.approx(score_utterance(net, splits))

    logits = forward(net, np.stack(splits)[:, None]).data
    assert_allclose(llrs, logits[:, 1] - logits[:, 0], rtol=1e-12, atol=1e-12)

    with pytest.raises(ValueError):
        score_utterance(net, [])


@pytest.mark.parametrize(
    "genuine, spoofed, rocch_value, interpolated_value",
    [
        ([2, 3], [0, 1], 0.0, 0.0),
        ([0, 1], [0, 1], 0.5, 0.5),
        ([1, 3], [0, 2], 0.25, 0.5),
        ([0, 0], [1, 1], 0.5, 1.0),
    ],
)
def test_eer_examples(genuine, spoofed, rocch_value, interpolated_value):
    pair = (np.array(genuine, float), np.array(spoofed, float))
    assert eer(pair) == pytest.approx(rocch_value)
    assert eer(pair, EERMethod.INTERPOLATED) == pytest.approx(interpolated_value)


def test_eer_of_score_set():
    scores = ScoreSet(
        [
            TrialScore("a", 1.0, Label.GENUINE),
            TrialScore("b", 3.0, Label.GENUINE),
            TrialScore("c", 0.0, Label.SPOOF),
            TrialScore("d", 2.0, Label.SPOOF),
        ]
    )
    assert_array_equal(scores.genuine, [1.0, 3.0])
    assert_array_equal(scores.spoofed, [0.0, 2.0])
    assert eer(scores) == pytest.approx(0.25)
    assert eer(scores, "interpolated") == pytest.approx(0.5)


def test_eer_needs_both_classes():
    with pytest.raises(EERError):
        eer((np.array([1.0]), np.array([])))

    with pytest.raises(EERError):
        eer([TrialScore("a", 1.0)])


def test_pav():
    values, widths = pav([0, 1, 0, 1])
    assert_allclose(values, [0.0, 0.5, 1.0])
    assert_array_equal(widths, [1, 2, 1])

    values, widths = pav([1, 1, 0, 0])
    assert_allclose(values, [0.5])
    assert_array_equal(widths, [4])


def test_rocch_vertices():
    p_miss, p_fa = rocch(np.array([1.0, 3.0]), np.array([0.0, 2.0]))
    assert_allclose(p_fa, [1.0, 0.5, 0.0, 0.0])
    assert_allclose(p_miss, [0.0, 0.0, 0.5, 1.0])


@settings(max_examples=1000, deadline=None)
@given(score_lists, score_lists)
def test_eer_matches_brute_force(genuine, spoofed):
    pair = (np.array(genuine, float), np.array(spoofed, float))
    rocch_value = eer(pair)
    interpolated_value = eer(pair, EERMethod.INTERPOLATED)

    assert rocch_value == pytest.approx(_hull_eer_oracle(genuine, spoofed), abs=1e-9)
    assert interpolated_value == pytest.approx(_sweep_crossing_oracle(genuine, spoofed), abs=1e-9)
    assert 0.0 <= rocch_value <= 0.5
    assert rocch_value <= interpolated_value + 1e-12


@settings(max_examples=100, deadline=None)
@given(score_lists, score_lists)
def test_eer_is_invariant_under_increasing_maps(genuine, spoofed):
    g, s = np.array(genuine, float), np.array(spoofed, float)
    for method in EERMethod:
        base = eer((g, s), method)
        assert eer((3 * g - 7, 3 * s - 7), method) == pytest.approx(base, abs=1e-12)
        assert eer((np.exp(g / 4), np.exp(s / 4)), method) == pytest.approx(base, abs=1e-12)


def test_separable_scores_have_zero_eer(rng):
    genuine = rng.uniform(1.0, 2.0, 40)
    spoofed = rng.uniform(-2.0, 0.5, 60)
    assert eer((genuine, spoofed)) == 0.0
    assert eer((genuine, spoofed), EERMethod.INTERPOLATED) == 0.0


def test_gaussian_backend_moments():
    backend = fit_gaussian_backend(
        {
            Label.GENUINE: np.array([[0.0, 0.0], [2.0, 2.0]]),
            Label.SPOOF: np.array([[5.0, 1.0], [5.0, 3.0]]),
        }
    )
    assert_allclose(backend.genuine_mean, [1.0, 1.0])
    assert_allclose(backend.genuine_var, [1.0, 1.0])
    assert_allclose(backend.spoof_var, [VARIANCE_FLOOR, 1.0])
    assert backend.dimension == 2


def test_gaussian_llr_closed_form():
    backend = GaussianBackend(np.array([0.0]), np.array([1.0]), np.array([2.0]), np.array([1.0]))
    assert gaussian_llr(backend, np.array([0.0])) == pytest.approx(2.0)
    assert gaussian_llr(backend, np.array([1.0])) == pytest.approx(0.0)

    # walking from the genuine mean towards the spoof mean
    llrs = gaussian_llr(backend, np.linspace(0.0, 2.0, 6)[:, None])
    assert np.all(np.diff(llrs) < 0)

    with pytest.raises(ShapeError):
        gaussian_llr(backend, np.zeros(2))


def test_gaussian_backend_symmetry_and_separation(rng):
    same = rng.normal(size=(50, 3))
    backend = fit_gaussian_backend({Label.GENUINE: same, Label.SPOOF: same.copy()})
    assert_allclose(gaussian_llr(backend, rng.normal(size=(5, 3))), 0.0, atol=1e-12)

    genuine = rng.normal(4.0, 1.0, size=(50, 3))
    spoofed = rng.normal(-4.0, 1.0, size=(50, 3))
    backend = fit_gaussian_backend({Label.GENUINE: genuine, Label.SPOOF: spoofed})
    assert np.all(gaussian_llr(backend, genuine) > 0)
    assert np.all(gaussian_llr(backend, spoofed) < 0)

    with pytest.raises(ValueError):
        fit_gaussian_backend({Label.GENUINE: genuine[:1], Label.SPOOF: spoofed})


def test_gaussian_backend_file(tmp_path, rng):
    backend = fit_gaussian_backend(
        {Label.GENUINE: rng.normal(size=(10, 4)), Label.SPOOF: rng.normal(size=(10, 4))}
    )
    backend.save(tmp_path / "backend.npz")
    loaded = GaussianBackend.load(tmp_path / "backend.npz")
    for key, value in backend.to_arrays().items():
        assert_array_equal(loaded.to_arrays()[key], value)


def test_backend_utterance_score(rng):
    net = build(tiny_config(), seed=5)
    splits = [rng.normal(size=(8, 10)) for _ in range(2)]
    backend = fit_gaussian_backend(
        {Label.GENUINE: rng.normal(size=(10, 4)), Label.SPOOF: rng.normal(1.0, 1.0, size=(10, 4))}
    )
    expected = gaussian_llr(backend, embed(net, np.stack(splits)[:, None])).mean()
    assert backend_utterance_score(backend, net, splits) == pytest.approx(expected)


def test_score_file_round_trip(tmp_path, rng):
    scores = ScoreSet(
        TrialScore(f"D_{i}", rng.normal(), Label(i % 2)) for i in range(20)
    )
    write_scores(scores, tmp_path / "scores.txt")
    first = (tmp_path / "scores.txt").read_text().splitlines()[0]
    assert first.split("\t")[:2] == ["D_0", "spoof"]
    assert read_scores(tmp_path / "scores.txt") == scores

    unlabelled = ScoreSet(TrialScore(t.utterance_id, t.score) for t in scores)
    write_scores(unlabelled, tmp_path / "plain.txt")
    assert len((tmp_path / "plain.txt").read_text().splitlines()[0].split("\t")) == 2
    assert read_scores(tmp_path / "plain.txt") == unlabelled


def test_read_scores_formats(tmp_path):
    path = tmp_path / "scores.txt"
    path.write_text("a genuine 0.123456789\n\nb 1.5\n")
    scores = read_scores(path)
    assert scores[0] == TrialScore("a", 0.123456789, Label.GENUINE)
    assert abs(scores[0].score - 0.1234567891) < 1e-8
    assert scores[1].label is None

    path.write_text("")
    assert read_scores(path) == ScoreSet()


@pytest.mark.parametrize("line", ["a\tgenuine\tnope", "a", "a\tb\tc\td", "a\tunknown\t1.0", "a\tnan"])
def test_read_scores_rejects_malformed_lines(tmp_path, line):
    path = tmp_path / "scores.txt"
    path.write_text(f"ok\t1.0\n{line}\n")
    with pytest.raises(ScoreFormatError) as info:
        read_scores(path)

    assert info.value.line_number == 2
