import random

import pytest

from oracles import brute_accuracy, brute_kappa, brute_majority
from tabaudit.data import PredictionRecord, PredictionSet
from tabaudit.errors import InputError
from tabaudit.metrics import (
    accuracy,
    audit_dataset,
    cohen_kappa,
    lift,
    majority_baseline,
    recovery,
)


def make_preds(truth, preds, dataset="d", model="m"):
    records = tuple(
        PredictionRecord(i, t, p) for i, (t, p) in enumerate(zip(truth, preds))
    )
    return PredictionSet(dataset, model, records)


def random_prediction_set(rng, allow_invalid=True, min_classes=1):
    n = rng.randint(max(1, min_classes), 50)
    k = rng.randint(max(1, min_classes), 5)
    classes = [f"c{i}" for i in range(k)]
    truth = [rng.choice(classes) for _ in range(n)]
    while len(set(truth)) < min_classes:
        truth = [rng.choice(classes) for _ in range(n)]
    preds = []
    for _ in range(n):
        if allow_invalid and rng.random() < 0.1:
            preds.append(None)
        else:
            preds.append(rng.choice(classes))
    return truth, preds


# -- majority baseline ----------------------------------------------------------


def test_majority_single_class():
    assert majority_baseline(["A", "A", "A"]) == 1.0


def test_majority_tie():
    assert majority_baseline(["A", "B"]) == 0.5


def test_majority_two_thirds():
    assert majority_baseline(["A", "A", "B"]) == 2 / 3


def test_majority_empty():
    with pytest.raises(InputError):
        majority_baseline([])


# -- accuracy --------------------------------------------------------------------


def test_accuracy_perfect():
    ps = make_preds(["a", "b"], ["a", "b"])
    assert accuracy(ps) == 1.0


def test_accuracy_all_invalid():
    ps = make_preds(["a", "b"], [None, None])
    assert accuracy(ps) == 0.0


def test_accuracy_four_of_five():
    ps = make_preds(list("aabbb"), list("aabba"))
    assert accuracy(ps) == 0.8


# -- lift ------------------------------------------------------------------------


def test_lift_paper_rows():
    assert lift(0.958, 0.959) == pytest.approx(-0.001)
    assert lift(0.845, 0.932) == pytest.approx(-0.087)


def test_lift_identity_zero():
    for x in (0.0, 0.25, 1.0):
        assert lift(x, x) == 0.0


# -- kappa -----------------------------------------------------------------------


def test_kappa_perfect_two_classes():
    ps = make_preds(["a", "b", "a"], ["a", "b", "a"])
    assert cohen_kappa(ps) == 1.0


def test_kappa_constant_majority_prediction():
    ps = make_preds(list("aaab"), ["a"] * 4)
    assert cohen_kappa(ps) == 0.0


def test_kappa_example():
    ps = make_preds(list("AAABB"), list("AABBB"))
    assert cohen_kappa(ps) == pytest.approx(0.32 / 0.52, abs=1e-12)


def test_kappa_degenerate_agreement():
    ps = make_preds(["a", "a"], ["a", "a"])
    assert cohen_kappa(ps) == 1.0


def test_kappa_brute_force_equivalence():
    rng = random.Random(12)
    for _ in range(300):
        truth, preds = random_prediction_set(rng, min_classes=1)
        ps = make_preds(truth, preds)
        if set(truth) == {truth[0]} and all(p == truth[0] for p in preds):
            assert cohen_kappa(ps) == 1.0
            continue
        assert cohen_kappa(ps) == pytest.approx(brute_kappa(truth, preds), abs=1e-12)


def test_label_permutation_invariance():
    rng = random.Random(9)
    for _ in range(50):
        truth, preds = random_prediction_set(rng, min_classes=2)
        ps = make_preds(truth, preds)
        mapping = {c: f"z{c}" for c in set(truth) | {p for p in preds if p}}
        ps2 = make_preds(
            [mapping[t] for t in truth],
            [mapping[p] if p is not None else None for p in preds],
        )
        m1, m2 = audit_dataset(ps), audit_dataset(ps2)
        assert m1.accuracy == m2.accuracy
        assert m1.majority_baseline == m2.majority_baseline
        assert m1.lift == m2.lift
        assert m1.kappa == pytest.approx(m2.kappa, abs=1e-14)


# -- recovery --------------------------------------------------------------------


def test_recovery_identity():
    assert recovery(0.42, 0.42) == 100.0


def test_recovery_reported_values():
    assert recovery(58.6, 63.5) == pytest.approx(92.3, abs=0.2)
    assert recovery(47.7, 63.5) == pytest.approx(75.1, abs=0.2)


def test_recovery_zero_reference():
    with pytest.raises(InputError):
        recovery(0.5, 0.0)


# -- audit_dataset ----------------------------------------------------------------


def test_audit_imbalance_rider_pattern():
    truth = ["0"] * 959 + ["1"] * 41
    ps = make_preds(truth, ["0"] * 1000)
    m = audit_dataset(ps)
    assert m.accuracy == 0.959
    assert m.majority_baseline == 0.959
    assert m.lift == 0.0
    assert m.kappa == 0.0
    assert m.n == 1000


def test_audit_perfect_balanced_binary():
    ps = make_preds(["a", "b"] * 10, ["a", "b"] * 10)
    m = audit_dataset(ps)
    assert (m.accuracy, m.majority_baseline, m.lift, m.kappa) == (1.0, 0.5, 0.5, 1.0)


def test_audit_kappa_embedded():
    ps = make_preds(list("AAABB"), list("AABBB"))
    assert audit_dataset(ps).kappa == pytest.approx(0.6154, abs=1e-4)


def test_lift_identity_exact():
    rng = random.Random(4)
    for _ in range(100):
        truth, preds = random_prediction_set(rng)
        m = audit_dataset(make_preds(truth, preds))
        assert m.lift == m.accuracy - m.majority_baseline


def test_constant_prediction_law():
    rng = random.Random(8)
    for _ in range(100):
        truth, _ = random_prediction_set(rng, min_classes=2)
        target = rng.choice(sorted(set(truth)))
        m = audit_dataset(make_preds(truth, [target] * len(truth)))
        assert m.kappa == 0.0
        assert m.lift <= 0.0
        counts = {c: truth.count(c) for c in set(truth)}
        if counts[target] == max(counts.values()):
            assert m.lift == 0.0
        else:
            assert m.lift < 0.0


def test_oracle_equivalence_all_metrics():
    rng = random.Random(77)
    for _ in range(200):
        truth, preds = random_prediction_set(rng, min_classes=2)
        ps = make_preds(truth, preds)
        m = audit_dataset(ps)
        assert m.accuracy == pytest.approx(brute_accuracy(truth, preds), abs=1e-12)
        assert m.majority_baseline == pytest.approx(brute_majority(truth), abs=1e-12)
        assert m.kappa == pytest.approx(brute_kappa(truth, preds), abs=1e-12)
