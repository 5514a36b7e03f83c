import time

import pytest
from hypothesis import given
from hypothesis import strategies as st

from needle.metrics import (Confusion, KeySetMismatch, confusion, f_omega,
                            precision, recall, scores)


def brute_force_tally(pred, truth):
    """Independent per-document tally used as the oracle."""
    tp = sum(1 for k in truth if pred[k] == 1 and truth[k] == 1)
    fp = sum(1 for k in truth if pred[k] == 1 and truth[k] == 0)
    fn = sum(1 for k in truth if pred[k] == 0 and truth[k] == 1)
    tn = sum(1 for k in truth if pred[k] == 0 and truth[k] == 0)
    return tp, fp, fn, tn


def brute_force_scores(tp, fp, fn):
    p = tp / (tp + fp) if tp + fp else None
    r = tp / (tp + fn) if tp + fn else None
    if p is None or r is None or p + r == 0:
        f = None
    else:
        f = 2 * p * r / (p + r)
    return p, r, f


def test_confusion_identity_prediction():
    truth = {f"d{i}": int(i < 3) for i in range(10)}
    c = confusion(truth, truth)
    assert (c.tp, c.tn, c.fp, c.fn) == (3, 7, 0, 0)


def test_confusion_all_negative_prediction():
    truth = {f"d{i}": int(i < 4) for i in range(12)}
    pred = {k: 0 for k in truth}
    c = confusion(pred, truth)
    assert (c.fn, c.tp, c.fp) == (4, 0, 0)


def test_confusion_random_case_matches_oracle():
    import random
    rng = random.Random(7)
    truth = {f"d{i}": rng.randint(0, 1) for i in range(50)}
    pred = {k: rng.randint(0, 1) for k in truth}
    c = confusion(pred, truth)
    assert (c.tp, c.fp, c.fn, c.tn) == brute_force_tally(pred, truth)


def test_confusion_key_mismatch():
    with pytest.raises(KeySetMismatch):
        confusion({"a": 1}, {"a": 1, "b": 0})


def test_f1_of_equal_precision_recall():
    # P = R = 0.5: tp=1, fp=1, fn=1
    assert f_omega(Confusion(1, 1, 1, 0), 1.0) == pytest.approx(0.5)


def test_f1_hand_computed():
    # P=1, R=0.25 -> F1 = 2*1*0.25/1.25 = 0.4
    assert f_omega(Confusion(1, 0, 3, 5), 1.0) == pytest.approx(0.4)


def test_undefined_precision_and_f1():
    c = Confusion(0, 0, 4, 6)
    assert precision(c) is None
    assert recall(c) == 0.0
    assert f_omega(c) is None
    assert scores(c).as_zero().to_dict() == {"precision": 0.0, "recall": 0.0,
                                             "f1": 0.0}


def test_undefined_recall():
    assert recall(Confusion(0, 2, 0, 8)) is None


def test_f1_undefined_when_both_zero():
    # P and R defined but both 0 -> harmonic mean undefined
    assert f_omega(Confusion(0, 2, 3, 5)) is None


def test_omega_weighting():
    c = Confusion(2, 2, 6, 0)  # P = 0.5, R = 0.25
    f2 = f_omega(c, 2.0)
    assert f2 == pytest.approx(5 * 0.5 * 0.25 / (4 * 0.5 + 0.25))
    with pytest.raises(ValueError):
        f_omega(c, 0.0)


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50),
       st.integers(0, 50))
def test_score_bounds_and_ordering(tp, fp, fn, tn):
    c = Confusion(tp, fp, fn, tn)
    p, r, f = precision(c), recall(c), f_omega(c)
    for v in (p, r, f):
        if v is not None:
            assert 0.0 <= v <= 1.0
    if f is not None:
        assert min(p, r) - 1e-12 <= f <= max(p, r) + 1e-12


@given(st.integers(1, 30), st.integers(0, 30), st.integers(0, 30))
def test_f1_increasing_in_tp(tp, fp, fn):
    # strictly increasing while there is any error mass to improve on
    lo = f_omega(Confusion(tp, fp, fn, 0))
    hi = f_omega(Confusion(tp + 1, fp, fn, 0))
    if lo is not None and hi is not None:
        if fp + fn > 0:
            assert hi > lo
        else:
            assert hi == lo == 1.0


def test_acceptance_scale_oracle_equivalence_under_one_second():
    import random
    rng = random.Random(2024)
    start = time.perf_counter()
    undefined_seen = 0
    for _ in range(1000):
        n = rng.randint(5, 200)
        truth = {f"d{i}": rng.randint(0, 1) for i in range(n)}
        pred = {k: rng.choice([0, 0, 0, 1]) for k in truth}
        c = confusion(pred, truth)
        tp, fp, fn, tn = brute_force_tally(pred, truth)
        assert (c.tp, c.fp, c.fn, c.tn) == (tp, fp, fn, tn)
        ep, er, ef = brute_force_scores(tp, fp, fn)
        s = scores(c)
        assert s.precision == ep and s.recall == er
        assert s.f1 == pytest.approx(ef) if ef is not None else s.f1 is None
        if s.f1 is None:
            undefined_seen += 1
    assert time.perf_counter() - start < 1.0
