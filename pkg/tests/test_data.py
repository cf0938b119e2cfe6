import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ks_2samp

from mixboost.data import cifar, corruptions, splits, synth
from mixboost.data.corruptions import KINDS, SEVERITY, corrupt, perturb_sequence


@pytest.fixture(scope="module")
def synth_small():
    return synth.synth_dataset(10, 20, seed=3)


# --- CIFAR binary format --------------------------------------------------


def _records(n, seed=0):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 10, n).astype(np.uint8)
    pixels = rng.integers(0, 256, (n, 3072)).astype(np.uint8)
    return labels, pixels, np.concatenate([labels[:, None], pixels], axis=1).tobytes()


def test_parse_two_records(tmp_path):
    labels, pixels, blob = _records(2)
    path = tmp_path / "b.bin"
    path.write_bytes(blob)
    batch, y = cifar.parse_cifar10(path)
    assert batch.images.shape == (2, 3, 32, 32)
    assert np.array_equal(y, labels)
    # R plane first, row-major
    assert batch.images[1, 0, 0, 1] == pixels[1, 1] / 255
    assert batch.images[1, 2, 31, 31] == pixels[1, 3071] / 255


def test_parse_rejects_bad_files():
    with pytest.raises(cifar.FormatError):
        cifar.parse_cifar10_bytes(bytes(3072))
    _, _, blob = _records(1)
    with pytest.raises(cifar.FormatError):
        cifar.parse_cifar10_bytes(bytes([10]) + blob[1:])


def test_write_then_parse_round_trips(tmp_path):
    _, _, blob = _records(5, seed=1)
    images, labels = cifar.parse_cifar10_bytes(blob)
    assert cifar.to_cifar10_bytes(images, labels) == blob
    cifar.write_cifar10(tmp_path / "x.bin", images, labels)
    batch, y = cifar.parse_cifar10(tmp_path / "x.bin")
    assert np.array_equal(batch.images, images) and np.array_equal(y, labels)


# --- synthetic data -------------------------------------------------------


def test_synth_counts_and_balance():
    batch, y = synth.synth_dataset(10, 100, 7)
    assert len(batch) == 1000
    assert np.array_equal(np.bincount(y), np.full(10, 100))
    assert batch.images.min() >= 0 and batch.images.max() <= 1


def test_synth_is_deterministic(synth_small):
    again, _ = synth.synth_dataset(10, 20, seed=3)
    assert again.images.tobytes() == synth_small[0].images.tobytes()
    other, _ = synth.synth_dataset(10, 20, seed=4)
    assert other.images.tobytes() != synth_small[0].images.tobytes()


def test_synth_rejects_bad_args():
    with pytest.raises(ValueError):
        synth.synth_dataset(10, 0, 0)
    with pytest.raises(ValueError):
        synth.synth_dataset(1, 5, 0)


def test_nearest_centroid_beats_twice_chance():
    tr, ytr = synth.synth_dataset(10, 50, seed=11)
    te, yte = synth.synth_dataset(10, 20, seed=12)
    X, Z = tr.images.reshape(len(tr), -1), te.images.reshape(len(te), -1)
    centroids = np.stack([X[ytr == k].mean(axis=0) for k in range(10)])
    d = ((Z[:, None, :] - centroids[None]) ** 2).sum(axis=2)
    acc = float(np.mean(d.argmin(axis=1) == yte))
    assert acc > 0.2


def test_ood_set():
    a = synth.synth_ood(100, 3)
    assert len(a) == 100
    assert a.images.tobytes() == synth.synth_ood(100, 3).images.tobytes()
    ind, _ = synth.synth_dataset(10, 10, seed=3)
    ks = ks_2samp(a.images.ravel()[::7], ind.images.ravel()[::7]).statistic
    assert ks > 0.1
    with pytest.raises(ValueError):
        synth.synth_ood(0, 0)


# --- corruptions ----------------------------------------------------------


def test_gaussian_noise_folded_normal_mean():
    x = np.full((20, 3, 32, 32), 0.5)
    out = corrupt(x, "gaussian_noise", 1, seed=0)
    sigma = SEVERITY["gaussian_noise"][0]
    expected = sigma * np.sqrt(2 / np.pi)
    assert abs(np.abs(out - x).mean() - expected) < 0.1 * expected


@pytest.mark.parametrize("s", [1, 2, 3])
def test_brightness_on_gray(s):
    out = corrupt(np.full((2, 3, 32, 32), 0.5), "brightness", s, seed=0)
    assert np.all(out == min(1.0, 0.5 + SEVERITY["brightness"][s - 1]))


@pytest.mark.parametrize("kind", KINDS)
def test_severity_orders_deviation(kind, synth_small):
    x = synth_small[0].images
    mad = [np.abs(corrupt(x, kind, s, seed=1) - x).mean() for s in (1, 2, 3)]
    assert mad[2] > mad[0]
    if kind in corruptions.NOISE_KINDS:
        assert mad[0] < mad[1] < mad[2]


@pytest.mark.parametrize("kind", KINDS)
def test_corruption_is_pure(kind, synth_small):
    x = synth_small[0].images[:5]
    copy = x.copy()
    a = corrupt(x, kind, 2, seed=9)
    assert np.array_equal(x, copy)
    assert np.array_equal(a, corrupt(x, kind, 2, seed=9))


def test_corrupt_errors(synth_small):
    with pytest.raises(ValueError):
        corrupt(synth_small[0], "fog", 1, 0)
    with pytest.raises(ValueError):
        corrupt(synth_small[0], "brightness", 4, 0)


def test_corrupt_preserves_batch_type(synth_small):
    out = corrupt(synth_small[0], "contrast", 1, 0)
    assert isinstance(out, cifar.ImageBatch)
    assert np.array_equal(out.ids, synth_small[0].ids)


@settings(max_examples=30, deadline=None)
@given(kind=st.sampled_from(KINDS), severity=st.integers(1, 3), seed=st.integers(0, 2**31),
       lo=st.floats(0, 1), hi=st.floats(0, 1))
def test_corruptions_stay_in_unit_box(kind, severity, seed, lo, hi):
    lo, hi = min(lo, hi), max(lo, hi)
    x = np.random.default_rng(seed).uniform(lo, hi, (2, 3, 32, 32))
    out = corrupt(x, kind, severity, seed)
    assert out.min() >= 0 and out.max() <= 1


# --- perturbation sequences -----------------------------------------------


def test_sequence_zero_magnitude():
    img = np.random.default_rng(0).uniform(size=(3, 32, 32))
    for kind in ("noise", "translate"):
        f = perturb_sequence(img, kind, 2, seed=0, magnitude=0)
        assert np.array_equal(f[0], img) and np.array_equal(f[1], img)


def test_translation_schedule():
    img = np.random.default_rng(1).uniform(size=(3, 32, 32))
    T, max_shift = 8, 4
    frames = perturb_sequence(img, "translate", T, seed=5)
    for t in range(T):
        k = t * max_shift // T
        matches = []
        for axis in (1, 2):
            for sign in (1, -1):
                src = np.clip(np.arange(32) - sign * k, 0, 31)
                matches.append(np.array_equal(frames[t], np.take(img, src, axis=axis)))
        assert any(matches), t


def test_noise_sigma_grid():
    img = np.full((3, 32, 32), 0.5)
    T, smax = 5, 0.08
    frames = perturb_sequence(img, "noise", T, seed=2, magnitude=smax)
    z = (frames[-1] - img) / smax  # no clipping for these magnitudes at 0.5
    for t in range(T):
        assert np.allclose(frames[t], img + t * smax / (T - 1) * z, atol=1e-12)
    dev = [np.abs(f - img).mean() for f in frames]
    assert all(a <= b for a, b in zip(dev, dev[1:]))
    assert np.array_equal(frames[0], img)


def test_sequence_rejects_short():
    with pytest.raises(ValueError):
        perturb_sequence(np.zeros((3, 32, 32)), "noise", 1, 0)


def test_sequence_suite_shape():
    imgs = np.random.default_rng(0).uniform(size=(3, 3, 32, 32))
    s = corruptions.sequence_suite(imgs, 4, seed=0)
    assert s.shape == (6, 4, 3, 32, 32)
    assert np.array_equal(s[:, 0], np.concatenate([imgs, imgs]))


# --- splits ---------------------------------------------------------------


def test_splits_disjoint_and_balanced():
    sp = splits.make_splits(200, 50, seed=1)
    assert not set(sp.train.ids) & set(sp.test.ids)
    assert np.array_equal(np.bincount(sp.test_labels), np.full(10, 5))
    assert sp.source == "synth"


def test_missing_dataset_without_fallback(tmp_path):
    with pytest.raises(splits.DataError):
        splits.make_splits(cifar_dir=str(tmp_path / "nope"), synth_fallback=False)


def test_cifar_dir_is_read(tmp_path):
    _, _, blob = _records(20, seed=3)
    for name in ("data_batch_1.bin", "test_batch.bin"):
        (tmp_path / name).write_bytes(blob)
    sp = splits.make_splits(10, 5, cifar_dir=str(tmp_path), synth_fallback=False)
    assert sp.source == "cifar10" and len(sp.train) == 10 and len(sp.test) == 5


def test_generated_set_persistence(tmp_path):
    x = corrupt(synth.synth_dataset(2, 3, 0)[0].images, "pixelate", 1, 0)
    q = np.round(x * 255) / 255
    splits.save_set(tmp_path, "pix", q, np.zeros(6, dtype=int), {"kind": "pixelate", "severity": 1, "seed": 0})
    batch, labels, manifest = splits.load_set(tmp_path, "pix")
    assert np.array_equal(batch.images, q)
    assert manifest == {"kind": "pixelate", "severity": 1, "seed": 0, "count": 6}
