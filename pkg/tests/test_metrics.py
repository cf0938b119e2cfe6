import itertools
import math

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixboost import metrics as mt
from mixboost.data import make_splits
from mixboost.training import TrainConfig, train


@pytest.fixture(scope="module")
def trained():
    sp = make_splits(500, 100, seed=1)
    model, _ = train(TrainConfig(epochs=6, batch_size=32, channels=(8, 16, 16), augmentation="none", lam=0.0), sp)
    return model, sp


@pytest.fixture(scope="module")
def bundle(trained):
    _, sp = trained
    return mt.build_eval_bundle(sp.test.images, sp.test_labels, seed=0, num_sequences=10, T=4,
                                num_ood=40, pgd_count=20)


# --- error rates ----------------------------------------------------------


def test_error_rate_cases():
    y = np.arange(100) % 10
    assert mt.error_rate(y, y) == 0
    assert mt.error_rate((y + 1) % 10, y) == 1.0
    preds = np.random.default_rng(0).integers(0, 10, 1000)
    e = mt.error_rate(preds, np.arange(1000) % 10)
    assert abs(e - 0.9) <= 3 * math.sqrt(0.9 * 0.1 / 1000)
    with pytest.raises(ValueError):
        mt.error_rate([], [])


class _Oracle:
    """Predicts a label stored in the red channel's first pixel."""

    num_classes = 10

    def predict_logits(self, x, chunk=None):
        lab = np.rint(np.asarray(x)[:, 0, 0, 0] * 10).astype(int) % 10
        return np.eye(10)[lab] * 5.0


def _coded_images(labels):
    x = np.zeros((len(labels), 3, 32, 32))
    x[:, 0, 0, 0] = np.asarray(labels) / 10
    return x


def test_mini_mce_definition():
    y = np.arange(20) % 10
    good = _coded_images(y)
    half = _coded_images(np.where(np.arange(20) < 10, y, (y + 1) % 10))
    bad = _coded_images((y + 1) % 10)
    m = _Oracle()
    assert mt.mini_mce(m, {("k", 1): good, ("k", 2): good}, y) == 0
    assert mt.mini_mce(m, [half], y) == mt.clean_error(m, half, y) == 0.5
    assert mt.mini_mce(m, [half, bad], y) == (0.5 + 1.0) / 2
    assert mt.mini_mce(m, [bad, half, good], y) == mt.mini_mce(m, [good, bad, half], y)
    with pytest.raises(ValueError):
        mt.mini_mce(m, [], y)


def test_flip_rate_cases():
    assert mt.flip_rate([[3, 3, 3, 3]] * 4) == 0
    assert mt.flip_rate([[1, 2, 1, 2, 1], [0, 5, 0, 5, 0]]) == 1.0
    assert mt.flip_rate([[1, 1, 1, 4, 4]]) == 0.25
    with pytest.raises(ValueError):
        mt.flip_rate([[1], [2]])


# --- calibration ----------------------------------------------------------


def test_rms_calibration_cases():
    assert mt.rms_calibration(np.ones(50), np.ones(50)) == 0
    assert abs(mt.rms_calibration(np.ones(40), np.arange(40) % 2) - 0.5) < 1e-12
    conf = np.r_[np.full(10, 0.6), np.full(10, 0.8)]
    corr = np.r_[np.arange(10) < 6, np.arange(10) < 8]
    assert mt.rms_calibration(conf, corr, num_bins=2) < 1e-12
    with pytest.raises(ValueError):
        mt.rms_calibration([], [])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.booleans()), min_size=1, max_size=60), st.integers(1, 15))
def test_rms_calibration_range(pairs, bins):
    conf, corr = zip(*pairs)
    assert 0 <= mt.rms_calibration(conf, corr, bins) <= 1


# --- PGD ------------------------------------------------------------------


def test_pgd_eps_zero_is_identity(trained):
    model, sp = trained
    x = sp.test.images[:8]
    out = mt.pgd_attack(model, x, sp.test_labels[:8], mt.PgdConfig(epsilon=0.0))
    assert np.array_equal(out, x)


@pytest.mark.parametrize("eps", [1 / 255, 8 / 255, 0.1])
def test_pgd_constraints(trained, eps):
    model, sp = trained
    x = sp.test.images[:16].copy()
    x[0] = 0.0  # corner cases at the box edges
    x[1] = 1.0
    adv = mt.pgd_attack(model, x, sp.test_labels[:16], mt.PgdConfig(epsilon=eps, step_size=eps / 3), seed=3)
    assert np.max(np.abs(adv - x)) <= eps + 1e-12
    assert adv.min() >= 0 and adv.max() <= 1


def test_pgd_hurts_a_trained_model(trained):
    model, sp = trained
    x, y = sp.test.images[:100], sp.test_labels[:100]
    clean = mt.clean_error(model, x, y)
    assert clean < 0.6
    assert mt.pgd_error(model, x, y, mt.PgdConfig()) >= clean


# --- OOD ------------------------------------------------------------------


def test_auroc_and_fpr_cases():
    assert mt.auroc([0.9, 0.8], [0.1, 0.2, 0.3]) == 1.0
    assert mt.fpr_at_tpr([0.9, 0.8], [0.1, 0.2, 0.3]) == 0.0
    s = [0.3, 0.5, 0.5, 0.9]
    assert mt.auroc(s, s) == 0.5
    a, b = [0.9, 0.8, 0.7, 0.6], [0.65, 0.5, 0.4, 0.3]
    pairs = sum(1.0 if x > y else 0.5 if x == y else 0.0 for x in a for y in b)
    assert pairs / 16 == 15 / 16
    assert abs(mt.auroc(a, b) - 15 / 16) < 1e-12
    # 95% of 4 in-dist scores needs all four: threshold 0.6, one OOD score above
    assert mt.fpr_at_tpr(a, b) == 0.25


def test_fpr_threshold_on_twenty():
    ind = np.arange(1, 21) / 20  # 0.05 .. 1.0
    ood = np.array([0.05, 0.1, 0.12, 0.5])
    # 19 of 20 accepted -> threshold 0.1
    assert mt.fpr_at_tpr(ind, ood) == 0.75


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=20), st.lists(st.floats(0, 1), min_size=1, max_size=20))
def test_auroc_matches_pair_count(a, b):
    pairs = sum(1.0 if x > y else 0.5 if x == y else 0.0 for x in a for y in b)
    assert abs(mt.auroc(a, b) - pairs / (len(a) * len(b))) < 1e-12


# --- Wilcoxon -------------------------------------------------------------


def _midranks(v):
    v = list(v)
    order = sorted(range(len(v)), key=lambda i: v[i])
    ranks = [0.0] * len(v)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and v[order[j + 1]] == v[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _oracle_wilcoxon(d):
    d = [x for x in d if x != 0]
    r = _midranks([abs(x) for x in d])
    w = sum(ri for ri, x in zip(r, d) if x > 0)
    hits = 0
    for signs in itertools.product((False, True), repeat=len(d)):
        if sum(ri for ri, s in zip(r, signs) if s) >= w - 1e-9:
            hits += 1
    return w, hits / 2 ** len(d)


def test_wilcoxon_hand_cases():
    w, p, sig = mt.wilcoxon_signed_rank([0.3] * 5)
    assert w == 15 and abs(p - 1 / 32) < 1e-12 and sig
    w, p, sig = mt.wilcoxon_signed_rank([1, -1, 2, -2, 3, -3])
    assert not sig and w == 10.5
    with pytest.raises(ValueError):
        mt.wilcoxon_signed_rank([1, 2, 0, 0, 3])


def test_wilcoxon_matches_enumeration_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(5, 11))
        d = np.round(rng.normal(0.3, 1, n), 1)  # rounding creates ties and zeros
        if np.count_nonzero(d) < 5:
            continue
        w, p, _ = mt.wilcoxon_signed_rank(d)
        ow, op = _oracle_wilcoxon(d)
        assert w == ow and abs(p - op) < 1e-12


def test_wilcoxon_normal_branch_agrees_with_scipy():
    from scipy.stats import wilcoxon

    d = np.random.default_rng(1).normal(0.2, 1, 40)
    w, p, _ = mt.wilcoxon_signed_rank(d)
    ref = wilcoxon(d, alternative="greater", method="approx", correction=False)
    assert abs(p - ref.pvalue) < 1e-12


# --- full report ----------------------------------------------------------


def test_untrained_model_is_near_chance(bundle):
    from mixboost.nn import TinyCnn

    model = TinyCnn.create(10, (8, 16, 16), seed=5)
    rep = mt.full_report(model, bundle)
    n = len(bundle.labels)
    assert abs(rep.clean_error - 0.9) <= 3 * math.sqrt(0.9 * 0.1 / n) + 1e-12


def test_full_report_contract(trained, bundle):
    model, _ = trained
    rep = mt.full_report(model, bundle, seed=2)
    assert rep.metadata["failures"] == {}
    for f in mt.REPORT_FIELDS:
        assert 0 <= getattr(rep, f) <= 1
    jsonschema.validate(rep.to_dict(), mt.REPORT_SCHEMA)
    again = mt.SafetyReport.from_json(rep.to_json())
    assert again == rep and again.to_json() == rep.to_json()
    assert mt.full_report(model, bundle, seed=2).to_json() == rep.to_json()


def test_full_report_marks_failures(trained, bundle):
    import dataclasses

    model, _ = trained
    broken = dataclasses.replace(bundle, sequences=np.zeros((2, 1, 3, 32, 32)))
    rep = mt.full_report(model, broken)
    assert rep.mfr is None and "mfr" in rep.metadata["failures"]
    assert rep.clean_error is not None


def test_report_rejects_unknown_schema():
    with pytest.raises(ValueError):
        mt.SafetyReport.from_dict({"schema_version": 99})
