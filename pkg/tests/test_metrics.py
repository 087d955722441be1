import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from voxflow import (Confusion, EmptySet, IdMismatch, OneClassOnly,
                     Prediction, PredictionSet, confusion, fold_mean, fpr,
                     mcc, pooled_cv, roc_auc, tpr)


def make_set(scores, labels, folds=None):
    folds = folds or [None] * len(scores)
    return PredictionSet(tuple(
        Prediction(f"s{i}", float(s), int(y), fold)
        for i, (s, y, fold) in enumerate(zip(scores, labels, folds))))


def random_set(rng, n, fold=None):
    scores = rng.random(n)
    labels = rng.integers(0, 2, size=n)
    if labels.min() == labels.max():
        labels[0] = 1 - labels[0]
    return make_set(scores, labels, [fold] * n)


# --- confusion ------------------------------------------------------------------

def test_confusion_simple():
    p = make_set([0.9, 0.1], [1, 0])
    c = confusion(p, 0.5)
    assert (c.tp, c.fp, c.tn, c.fn) == (1, 0, 1, 0)


def test_confusion_threshold_zero_predicts_all_positive():
    p = make_set([0.0, 0.3, 0.9], [0, 1, 0])
    c = confusion(p, 0.0)
    assert c.tn == 0 and c.fn == 0
    assert c.tp + c.fp == 3


def test_confusion_threshold_is_closed():
    p = make_set([0.5], [1])
    assert confusion(p, 0.5).tp == 1


def test_confusion_empty_set():
    with pytest.raises(EmptySet):
        confusion(PredictionSet(()), 0.5)


def test_confusion_matches_brute_tally():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(1, 60))
        scores = rng.random(n).round(2)
        labels = rng.integers(0, 2, size=n)
        t = float(rng.random())
        c = confusion(make_set(scores, labels), t)
        assert (c.tp, c.fp, c.tn, c.fn) == oracles.confusion_tally(scores, labels, t)


# --- mcc / tpr / fpr ---------------------------------------------------------------

def test_mcc_perfect_and_inverted():
    assert mcc(Confusion(1, 0, 1, 0)) == 1.0
    assert mcc(Confusion(0, 1, 0, 1)) == -1.0


def test_mcc_worked_value():
    assert abs(mcc(Confusion(2, 1, 3, 0)) - 6 / np.sqrt(72)) < 1e-12


def test_mcc_degenerate_is_zero():
    assert mcc(Confusion(0, 0, 5, 5)) == 0.0
    assert mcc(Confusion(3, 2, 0, 0)) == 0.0


def test_mcc_scale_invariance():
    base = Confusion(3, 2, 8, 1)
    for a in (2, 5, 11):
        scaled = Confusion(3 * a, 2 * a, 8 * a, 1 * a)
        assert abs(mcc(scaled) - mcc(base)) < 1e-12


def test_tpr_fpr_values_and_degenerate():
    c = Confusion(3, 2, 8, 1)
    assert tpr(c) == 0.75
    assert fpr(c) == 0.2
    z = Confusion(0, 0, 5, 5)
    assert tpr(z) == 0.0
    assert fpr(z) == 0.0
    assert tpr(Confusion(1, 0, 1, 0)) == 1.0
    assert fpr(Confusion(1, 0, 1, 0)) == 0.0


# --- roc_auc -----------------------------------------------------------------------

def test_auc_perfect_separation():
    p = make_set([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])
    assert roc_auc(p) == 1.0


def test_auc_pure_ties():
    p = make_set([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1])
    assert roc_auc(p) == 0.5


def test_auc_worked_value():
    p = make_set([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
    assert abs(roc_auc(p) - 0.75) < 1e-12


def test_auc_one_class_only():
    with pytest.raises(OneClassOnly):
        roc_auc(make_set([0.1, 0.9], [1, 1]))


def test_auc_matches_pairwise_oracle_with_ties():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(2, 80))
        scores = rng.integers(0, 10, size=n) / 10.0  # force ties
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        got = roc_auc(make_set(scores, labels))
        assert abs(got - oracles.auc_pairwise(scores, labels)) < 1e-12


def test_auc_complement_symmetry():
    rng = np.random.default_rng(2)
    scores = rng.random(60)
    labels = rng.integers(0, 2, size=60)
    labels[0], labels[1] = 0, 1
    a = roc_auc(make_set(scores, labels))
    b = roc_auc(make_set(scores, 1 - labels))
    assert abs(a + b - 1.0) < 1e-12


@given(st.integers(min_value=0, max_value=2**32))
@settings(max_examples=20, deadline=None)
def test_auc_invariant_under_monotone_transform(seed):
    rng = np.random.default_rng(seed)
    n = 40
    scores = rng.random(n)
    labels = rng.integers(0, 2, size=n)
    labels[:2] = [0, 1]
    a = roc_auc(make_set(scores, labels))
    b = roc_auc(make_set(scores**3 * 0.5 + 0.1, labels))
    assert abs(a - b) < 1e-12


def test_auc_matches_trapezoid_sweep():
    rng = np.random.default_rng(3)
    scores = rng.integers(0, 20, size=100) / 20.0
    labels = rng.integers(0, 2, size=100)
    labels[:2] = [0, 1]
    got = roc_auc(make_set(scores, labels))
    assert abs(got - oracles.roc_trapezoid(scores, labels)) < 1e-9


# --- pooled_cv ----------------------------------------------------------------------

def test_pooled_cv_single_fold_equals_direct():
    rng = np.random.default_rng(4)
    p = random_set(rng, 50)
    conf, m, a = pooled_cv([p], 0.5)
    assert conf == confusion(p, 0.5)
    assert m == mcc(conf)
    assert a == roc_auc(p)


def test_pooled_cv_duplicated_fold_keeps_mcc():
    rng = np.random.default_rng(5)
    p = random_set(rng, 40, fold=0)
    q = make_set([r.score for r in p], [r.label for r in p], [1] * len(p))
    _, m1, _ = pooled_cv([p], 0.5)
    _, m2, _ = pooled_cv([p, q], 0.5)
    assert abs(m1 - m2) < 1e-12


def test_pooled_cv_matches_concatenation_oracle():
    rng = np.random.default_rng(6)
    folds = [random_set(rng, int(rng.integers(10, 40)), fold=k)
             for k in range(5)]
    conf, m, a = pooled_cv(folds, 0.5)
    all_scores = np.concatenate([f.scores() for f in folds])
    all_labels = np.concatenate([f.labels() for f in folds])
    tally = oracles.confusion_tally(all_scores, all_labels, 0.5)
    assert (conf.tp, conf.fp, conf.tn, conf.fn) == tally
    assert abs(m - oracles.mcc_formula(*tally)) < 1e-12
    assert abs(a - oracles.auc_pairwise(all_scores, all_labels)) < 1e-12


def test_pooled_cv_empty():
    with pytest.raises(EmptySet):
        pooled_cv([], 0.5)


# --- fold_mean -----------------------------------------------------------------------

def test_fold_mean_single_model_identity():
    rng = np.random.default_rng(7)
    p = random_set(rng, 20)
    out = fold_mean([p])
    assert [(r.sample_id, r.score, r.label) for r in out] == \
           [(r.sample_id, r.score, r.label) for r in p]


def test_fold_mean_averages():
    a = make_set([0.2, 0.4], [1, 0])
    b = make_set([0.6, 0.0], [1, 0])
    out = fold_mean([a, b])
    assert [r.score for r in out] == [0.4, 0.2]
    assert [r.label for r in out] == [1, 0]


def test_fold_mean_idempotent_on_identical_sets():
    p = make_set([0.3, 0.7, 0.1], [0, 1, 0])
    out = fold_mean([p, p, p])
    assert np.allclose([r.score for r in out], [0.3, 0.7, 0.1], atol=1e-12)


def test_fold_mean_id_mismatch():
    a = make_set([0.2], [1])
    b = PredictionSet((Prediction("other", 0.5, 1),))
    with pytest.raises(IdMismatch):
        fold_mean([a, b])


# --- containers -----------------------------------------------------------------------

def test_prediction_validation():
    with pytest.raises(ValueError):
        Prediction("a", 1.2, 1)
    with pytest.raises(ValueError):
        Prediction("a", 0.5, 2)


def test_duplicate_ids_rejected_within_fold():
    with pytest.raises(ValueError, match="duplicate"):
        PredictionSet((Prediction("a", 0.1, 0, 0), Prediction("a", 0.2, 1, 0)))
    # same id in different folds is allowed
    PredictionSet((Prediction("a", 0.1, 0, 0), Prediction("a", 0.2, 1, 1)))
