import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from driftkit.errors import EmptyInputError, LengthMismatchError
from driftkit.metrics import (
    ConfusionMatrix,
    MetricsRecord,
    auc_score,
    compute_metrics,
    label_drift_batches,
)


def auc_pair_counting(scores, labels):
    """Oracle: concordant pairs + half ties over all pos/neg pairs."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    if not pos or not neg:
        return None
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


class TestAuc:
    def test_perfect_separation(self):
        rec = compute_metrics([0.9, 0.8, 0.1], [1, 1, 0])
        assert rec.auc == 1.0
        assert rec.balanced_accuracy == 1.0

    def test_oracle_equivalence_with_ties(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 51))
            scores = np.round(rng.random(n), 1)  # coarse grid forces ties
            labels = rng.integers(0, 2, n)
            got = auc_score(scores, labels)
            want = auc_pair_counting(scores.tolist(), labels.tolist())
            if want is None:
                assert got is None
            else:
                assert got == pytest.approx(want, abs=1e-12)

    def test_rank_invariance_under_monotone_transform(self, rng):
        scores = rng.random(30)
        labels = rng.integers(0, 2, 30)
        labels[0], labels[1] = 0, 1
        a = auc_score(scores, labels)
        b = auc_score(np.exp(5 * scores), labels)
        assert a == pytest.approx(b, abs=1e-12)

    def test_single_class_undefined(self):
        assert auc_score([0.2, 0.4], [1, 1]) is None


class TestComputeMetrics:
    def test_worked_confusion_example(self):
        # tp=2 fn=0 tn=1 fp=1
        scores = [0.9, 0.8, 0.6, 0.4]
        labels = [1, 1, 0, 0]
        rec = compute_metrics(scores, labels)
        cm = ConfusionMatrix.from_scores(scores, labels)
        assert (cm.tp, cm.fn, cm.tn, cm.fp) == (2, 0, 1, 1)
        assert rec.sensitivity == 1.0
        assert rec.specificity == 0.5
        assert rec.balanced_accuracy == 0.75

    def test_balanced_accuracy_identity(self, rng):
        for _ in range(30):
            n = int(rng.integers(4, 40))
            scores = rng.random(n)
            labels = rng.integers(0, 2, n)
            rec = compute_metrics(scores, labels)
            if not rec.single_class:
                assert rec.balanced_accuracy == (rec.sensitivity + rec.specificity) / 2.0

    def test_accuracy_f1_formulas(self, rng):
        scores = rng.random(25)
        labels = rng.integers(0, 2, 25)
        labels[:2] = [0, 1]
        rec = compute_metrics(scores, labels)
        cm = ConfusionMatrix.from_scores(scores, labels)
        assert rec.accuracy == (cm.tp + cm.tn) / cm.total
        if rec.precision + (rec.sensitivity or 0.0) > 0:
            want = 2 * rec.precision * rec.sensitivity / (rec.precision + rec.sensitivity)
            assert rec.f1 == pytest.approx(want, abs=1e-12)

    def test_single_class_fallback_flagged(self):
        rec = compute_metrics([0.9, 0.2], [1, 1])
        assert rec.single_class
        assert rec.auc is None
        assert rec.specificity is None
        assert rec.balanced_accuracy == rec.sensitivity == 0.5

    def test_errors(self):
        with pytest.raises(LengthMismatchError):
            compute_metrics([0.5], [1, 0])
        with pytest.raises(EmptyInputError):
            compute_metrics([], [])


def _rec(ba):
    return MetricsRecord(auc=None, accuracy=ba, balanced_accuracy=ba, sensitivity=ba,
                         specificity=ba, f1=ba, precision=ba)


class TestLabelDriftBatches:
    def test_strict_inequality(self):
        flags = label_drift_batches(0.7, [_rec(0.7), _rec(0.7)])
        assert flags == [False, False]

    def test_worked_example(self):
        flags = label_drift_batches(0.66, [_rec(0.70), _rec(0.60), _rec(0.66)])
        assert flags == [False, True, False]

    def test_benchmark_one_flags_imperfect(self):
        flags = label_drift_batches(1.0, [_rec(0.99), _rec(1.0), _rec(0.5)])
        assert flags == [True, False, True]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.integers(0, 1)), min_size=2, max_size=50))
def test_auc_matches_pair_counting_property(pairs):
    scores = [p for p, _ in pairs]
    labels = [y for _, y in pairs]
    got = auc_score(scores, labels)
    want = auc_pair_counting(scores, labels)
    if want is None:
        assert got is None
    else:
        assert got == pytest.approx(want, abs=1e-9)
