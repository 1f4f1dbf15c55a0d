import csv
import itertools

import numpy as np
import pytest

from driftkit.data import Sample
from driftkit.errors import InsufficientDataError
from driftkit.model import TrainerConfig
from driftkit.synth import SynthConfig, generate
from driftkit.tuning import (
    GRID_CSV_COLUMNS,
    GridPoint,
    default_grid,
    grid_search,
    reference_vectors,
    score_alerts,
    write_grid_csv,
)


def planted_dev_set(seed=0, n=1500, span_days=60.0, dim=64, sep=5.0, delta1=4.0,
                    pulse_offsets=(6.0, 10.0), pulse_len=2.0):
    """Stationary stream with covariate pulses aligned to the 2-day windowing
    of the tuning half (last 30% of the dev stream)."""
    samples = generate(SynthConfig(n_samples=n, span_days=span_days, dim=dim,
                                   class_sep=sep, seed=seed))
    k = int(np.floor(0.7 * n + 1e-9))
    t0 = samples[k].timestamp
    out = []
    for i, s in enumerate(samples):
        segments = s.segments
        if i >= k:
            off = (s.timestamp - t0).total_seconds() / 86400.0
            if any(a <= off < a + pulse_len for a in pulse_offsets):
                segments = segments.copy()
                segments[:, 0] += delta1
        out.append(Sample(s.sample_id, s.subject_id, s.timestamp, s.label, segments))
    return out


class TestScoreAlerts:
    def test_exact_match_gives_one(self):
        acc, sens, spec = score_alerts([True, False, True], [True, False, True])
        assert (acc, sens, spec) == (1.0, 1.0, 1.0)

    def test_degenerate_always_alarm(self):
        acc, sens, spec = score_alerts([True, False, True, False],
                                       [True, True, True, True])
        assert (acc, sens, spec) == (0.5, 1.0, 0.0)

    def test_no_positive_labels_sensitivity_zero(self):
        acc, sens, spec = score_alerts([False, False], [False, False])
        assert (acc, sens, spec) == (1.0, 0.0, 1.0)

    def test_tolerance_window(self):
        labels = [False, True, False, False]
        alerts = [False, False, True, False]
        assert score_alerts(labels, alerts, tolerance=0)[0] == 0.5
        acc, sens, spec = score_alerts(labels, alerts, tolerance=1)
        assert sens == 1.0  # alert at 2 covers the label at 1


class TestDefaultGrid:
    def test_cartesian_size(self):
        grid = default_grid(window_len_days=(7.0,), overlap=(0.0, 0.5), min_batch=(0,),
                            cusum_drift=(0.2,), cusum_threshold=(0.5, 0.9),
                            reference=("all",), kernel=("gaussian",))
        assert len(grid) == 4
        assert all(isinstance(p, GridPoint) for p in grid)

    def test_paper_defaults_shape(self):
        grid = default_grid()
        assert len(grid) == 3 * 8 * 4 * 4 * 6 * 3 * 3


class TestReferenceVectors:
    def test_modes(self, rng):
        samples = generate(SynthConfig(n_samples=50, span_days=5.0, dim=4, seed=2))
        all_ = reference_vectors(samples, "all")
        pos = reference_vectors(samples, "positive")
        neg = reference_vectors(samples, "negative")
        assert all_.shape[0] == 50
        assert pos.shape[0] + neg.shape[0] == 50

    def test_empty_mode_rejected(self, rng):
        samples = generate(SynthConfig(n_samples=20, span_days=5.0, dim=4, seed=2))
        for s in samples:
            s.label = 1
        with pytest.raises(InsufficientDataError):
            reference_vectors(samples, "negative")


@pytest.fixture(scope="module")
def planted_result():
    samples = planted_dev_set()
    grid = [GridPoint(w, ov, 0, dr, th, "all", "gaussian")
            for w, ov, dr, th in itertools.product(
                (1.5, 2.0, 3.0), (0.0, 0.5), (0.2, 0.3), (0.5, 0.7))]
    scores, benchmark = grid_search(samples, grid, TrainerConfig(seed=0))
    return samples, grid, scores, benchmark


class TestGridSearch:

    def test_planted_point_ranks_first(self, planted_result):
        _, _, scores, benchmark = planted_result
        assert benchmark == 1.0
        top = scores[0]
        assert top.accuracy == 1.0
        assert (top.point.window_len_days, top.point.overlap) == (2.0, 0.0)
        assert (top.point.cusum_drift, top.point.cusum_threshold) == (0.2, 0.5)

    def test_ranking_is_monotone(self, planted_result):
        _, _, scores, _ = planted_result
        keys = [(-s.accuracy, -s.sensitivity, s.point.cusum_drift, s.point.cusum_threshold)
                for s in scores]
        assert keys == sorted(keys)

    def test_deterministic(self, planted_result):
        samples, grid, scores, benchmark = planted_result
        scores2, benchmark2 = grid_search(samples, grid, TrainerConfig(seed=0))
        assert benchmark2 == benchmark
        assert [(s.point, s.accuracy, s.sensitivity, s.specificity) for s in scores] == \
               [(s.point, s.accuracy, s.sensitivity, s.specificity) for s in scores2]

    def test_csv_layout(self, planted_result, tmp_path):
        _, _, scores, _ = planted_result
        path = tmp_path / "grid.csv"
        write_grid_csv(scores, path)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == GRID_CSV_COLUMNS
        assert len(rows) == len(scores) + 1
        assert rows[1][:7] == ["2.0", "0.0", "0", "0.2", "0.5", "all", "gaussian"]
        assert float(rows[1][7]) == 1.0

    def test_insufficient_data(self):
        samples = generate(SynthConfig(n_samples=30, span_days=10.0, dim=4, seed=1,
                                       n_subjects=1))
        with pytest.raises(InsufficientDataError):
            grid_search(samples, [GridPoint(2.0, 0.0, 0, 0.2, 0.5, "all", "gaussian")],
                        TrainerConfig(seed=0))

    def test_permuting_scores_permutes_only_ties(self, planted_result, rng):
        _, _, scores, _ = planted_result
        key = lambda s: (-s.accuracy, -s.sensitivity,
                         s.point.cusum_drift, s.point.cusum_threshold)
        shuffled = list(scores)
        rng.shuffle(shuffled)
        shuffled.sort(key=key)
        assert [key(s) for s in shuffled] == [key(s) for s in scores]
