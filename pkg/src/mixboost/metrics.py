"""Safety and robustness metrics.

Conventions: ``mce`` is the unnormalised mean error over corruption kinds and
severities; RMS calibration uses equal-mass bins; the OOD score is the
maximum softmax probability, with in-distribution treated as positive.
"""

import itertools
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import norm, rankdata

from .data.corruptions import KINDS, corruption_suite, sequence_suite
from .data.synth import synth_ood
from .nn.autodiff import Tensor, softmax
from .nn.model import cross_entropy

SCHEMA_VERSION = 1
REPORT_FIELDS = (
    "clean_error", "mce", "mfr", "rms_clean", "rms_corrupt", "pgd_error", "auroc", "fpr_at_95tpr",
)


def error_rate(predictions, labels):
    predictions, labels = np.asarray(predictions), np.asarray(labels)
    if len(labels) == 0:
        raise ValueError("empty label set")
    return float(np.mean(predictions != labels))


def clean_error(model, images, labels):
    return error_rate(model.predict_logits(images).argmax(axis=1), labels)


def mini_mce(model, corruption_sets, labels):
    """Mean error over a dict/list of corrupted image sets sharing ``labels``."""
    sets = list(corruption_sets.values()) if isinstance(corruption_sets, dict) else list(corruption_sets)
    if not sets:
        raise ValueError("no corruption sets given")
    return float(np.mean([clean_error(model, s, labels) for s in sets]))


def flip_rate(predictions):
    """Mean over sequences of adjacent-frame prediction changes / (T - 1).

    ``predictions`` is ``(num_sequences, T)``.
    """
    p = np.atleast_2d(np.asarray(predictions))
    if p.shape[1] < 2:
        raise ValueError("sequences need T >= 2")
    return float(np.mean((p[:, 1:] != p[:, :-1]).sum(axis=1) / (p.shape[1] - 1)))


def mini_mfr(model, sequences):
    """``sequences``: ``(N, T, 3, H, W)``."""
    N, T = sequences.shape[:2]
    preds = model.predict_logits(sequences.reshape((N * T,) + sequences.shape[2:])).argmax(axis=1)
    return flip_rate(preds.reshape(N, T))


def rms_calibration(confidences, correct, num_bins=10):
    """sqrt(sum_b (n_b / n) * (acc_b - conf_b)^2) over equal-mass bins."""
    conf = np.asarray(confidences, dtype=np.float64)
    corr = np.asarray(correct, dtype=np.float64)
    if conf.size == 0:
        raise ValueError("no predictions")
    if num_bins < 1:
        raise ValueError("num_bins must be >= 1")
    order = np.argsort(conf, kind="stable")
    conf, corr = conf[order], corr[order]
    total = 0.0
    for chunk in np.array_split(np.arange(len(conf)), min(num_bins, len(conf))):
        if len(chunk) == 0:
            continue
        gap = corr[chunk].mean() - conf[chunk].mean()
        total += len(chunk) / len(conf) * gap * gap
    return math.sqrt(total)


def calibration_inputs(logits, labels):
    probs = softmax(logits, axis=1)
    return probs.max(axis=1), probs.argmax(axis=1) == np.asarray(labels)


@dataclass(frozen=True)
class PgdConfig:
    epsilon: float = 8 / 255
    step_size: float = 2 / 255
    num_steps: int = 10
    random_start: bool = True

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.num_steps < 1:
            raise ValueError("num_steps must be >= 1")


def input_gradient(model, images, labels):
    x = Tensor(images, requires_grad=True)
    loss = cross_entropy(model(x), labels)
    loss.backward()
    return x.grad


def pgd_attack(model, images, labels, config=PgdConfig(), seed=0):
    """Untargeted L-inf PGD on the cross-entropy, projected onto the eps-ball and [0, 1]."""
    x0 = np.asarray(images, dtype=np.float64)
    eps = config.epsilon
    if eps == 0:
        return x0.copy()
    lo, hi = np.maximum(x0 - eps, 0.0), np.minimum(x0 + eps, 1.0)
    x = x0.copy()
    if config.random_start:
        rng = np.random.default_rng([seed, 0x96D])
        x = np.clip(x0 + rng.uniform(-eps, eps, size=x0.shape), lo, hi)
    for _ in range(config.num_steps):
        g = input_gradient(model, x, labels)
        x = np.clip(x + config.step_size * np.sign(g), lo, hi)
    return x


def pgd_error(model, images, labels, config=PgdConfig(), seed=0, chunk=100):
    preds = []
    for s in range(0, len(images), chunk):
        adv = pgd_attack(model, images[s:s + chunk], labels[s:s + chunk], config, seed + s)
        preds.append(model.predict_logits(adv).argmax(axis=1))
    return error_rate(np.concatenate(preds), labels)


def auroc(in_scores, out_scores):
    """P(in > out) + 0.5 P(in == out), via ranks (ties get average rank)."""
    a, b = np.asarray(in_scores, dtype=np.float64), np.asarray(out_scores, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("both score sets must be nonempty")
    ranks = rankdata(np.concatenate([a, b]))
    u = ranks[: a.size].sum() - a.size * (a.size + 1) / 2
    return float(u / (a.size * b.size))


def fpr_at_tpr(in_scores, out_scores, tpr=0.95):
    """Fraction of OOD scores >= the largest threshold accepting ``tpr`` of in-dist."""
    a = np.sort(np.asarray(in_scores, dtype=np.float64))[::-1]
    b = np.asarray(out_scores, dtype=np.float64)
    k = max(1, int(math.ceil(tpr * a.size - 1e-9)))
    threshold = a[k - 1]
    return float(np.mean(b >= threshold))


def ood_scores(model, in_images, ood_images):
    s_in = softmax(model.predict_logits(in_images), axis=1).max(axis=1)
    s_out = softmax(model.predict_logits(ood_images), axis=1).max(axis=1)
    return auroc(s_in, s_out), fpr_at_tpr(s_in, s_out)


def _signed_rank_stats(d):
    d = np.asarray(d, dtype=np.float64)
    d = d[d != 0]
    ranks = rankdata(np.abs(d))
    return d, ranks, float(ranks[d > 0].sum())


def wilcoxon_signed_rank(diffs, alpha=0.05, alternative="greater"):
    """Wilcoxon signed-rank test on paired differences.

    Zero differences are dropped and tied magnitudes get mid-ranks. For up to
    12 nonzero differences the null distribution of ``W+`` is enumerated over
    all sign patterns; above that a normal approximation with tie correction
    is used. Returns ``(W+, p_value, significant)``.
    """
    d, ranks, w = _signed_rank_stats(diffs)
    n = len(d)
    if n < 5:
        raise ValueError("need at least 5 nonzero paired differences")
    if n <= 12:
        # exact: W+ = sum of ranks whose sign is positive, over all 2^n patterns
        signs = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.float64)
        null = signs @ ranks
        eps = 1e-9
        p_greater = float(np.mean(null >= w - eps))
        p_less = float(np.mean(null <= w + eps))
    else:
        mu = n * (n + 1) / 4
        _, counts = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24 - (counts**3 - counts).sum() / 48
        z = (w - mu) / math.sqrt(var)
        p_greater = float(norm.sf(z))
        p_less = float(norm.cdf(z))
    if alternative == "greater":
        p = p_greater
    elif alternative == "less":
        p = p_less
    elif alternative == "two-sided":
        p = min(1.0, 2 * min(p_greater, p_less))
    else:
        raise ValueError(f"unknown alternative {alternative!r}")
    return w, p, p < alpha


@dataclass
class EvalBundle:
    """Every evaluation set for one clean test split, generated from ``seed``."""

    images: np.ndarray
    labels: np.ndarray
    corrupted: dict
    sequences: np.ndarray
    ood: np.ndarray
    pgd_count: int
    manifest: dict


def build_eval_bundle(test_images, test_labels, seed=0, num_sequences=100, T=8,
                      num_ood=500, pgd_count=200, kinds=KINDS):
    test_images = np.asarray(test_images, dtype=np.float64)
    corrupted = corruption_suite(test_images, seed, kinds)
    seq_src = test_images[:num_sequences]
    sequences = sequence_suite(seq_src, T, seed)
    ood = synth_ood(num_ood, seed).images
    manifest = {
        "seed": seed,
        "test_count": int(len(test_labels)),
        "corruptions": [[k, s] for (k, s) in corrupted],
        "sequences": {"count": int(len(sequences)), "T": T},
        "ood_count": num_ood,
        "pgd_count": pgd_count,
    }
    return EvalBundle(test_images, np.asarray(test_labels), corrupted, sequences, ood, pgd_count, manifest)


@dataclass
class SafetyReport:
    clean_error: float = None
    mce: float = None
    mfr: float = None
    rms_clean: float = None
    rms_corrupt: float = None
    pgd_error: float = None
    auroc: float = None
    fpr_at_95tpr: float = None
    metadata: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {d.get('schema_version')!r}")
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


REPORT_SCHEMA = {
    "type": "object",
    "required": list(REPORT_FIELDS) + ["metadata", "schema_version"],
    "properties": dict(
        {f: {"type": ["number", "null"], "minimum": 0, "maximum": 1} for f in REPORT_FIELDS},
        metadata={"type": "object"},
        schema_version={"const": SCHEMA_VERSION},
    ),
    "additionalProperties": False,
}


def full_report(model, bundle, pgd_config=PgdConfig(), num_bins=10, seed=0):
    """Every metric for one model; a failing metric is recorded as None."""
    report = SafetyReport(metadata={
        "model": model.fingerprint(),
        "bundle": bundle.manifest,
        "pgd": asdict(pgd_config),
        "num_bins": num_bins,
        "seed": seed,
        "failures": {},
    })
    fails = report.metadata["failures"]

    def attempt(name, fn):
        try:
            setattr(report, name, fn())
        except Exception as exc:  # recorded, not raised
            fails[name] = f"{type(exc).__name__}: {exc}"

    logits = model.predict_logits(bundle.images)
    attempt("clean_error", lambda: error_rate(logits.argmax(axis=1), bundle.labels))
    attempt("rms_clean", lambda: rms_calibration(*calibration_inputs(logits, bundle.labels), num_bins))

    corrupt_logits = {}

    def mce():
        for key, imgs in bundle.corrupted.items():
            corrupt_logits[key] = model.predict_logits(imgs)
        return float(np.mean([error_rate(l.argmax(axis=1), bundle.labels) for l in corrupt_logits.values()]))

    attempt("mce", mce)

    def rms_corrupt():
        conf, corr = zip(*(calibration_inputs(l, bundle.labels) for l in corrupt_logits.values()))
        return rms_calibration(np.concatenate(conf), np.concatenate(corr), num_bins)

    attempt("rms_corrupt", rms_corrupt)
    attempt("mfr", lambda: mini_mfr(model, bundle.sequences))
    n = bundle.pgd_count
    attempt("pgd_error", lambda: pgd_error(model, bundle.images[:n], bundle.labels[:n], pgd_config, seed))

    def ood():
        a, f = ood_scores(model, bundle.images, bundle.ood)
        report.fpr_at_95tpr = f
        return a

    attempt("auroc", ood)
    return report
