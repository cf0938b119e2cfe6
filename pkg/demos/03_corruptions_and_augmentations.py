# %% [markdown]
# # What the augmentations and corruptions do to pixels
#
# Everything here is numeric. We print summary statistics instead of images so
# the script runs headless.

# %%
import numpy as np

from mixboost.augment import cutmix, cutout, make_mixer_pool, mixup, pixmix_style, plasma_fractal
from mixboost.boost import MaskSpec, apply_mask, sample_mask
from mixboost.data import make_splits
from mixboost.data.corruptions import KINDS, corrupt, perturb_sequence

sp = make_splits(n_train=60, n_test=60, seed=1)
x, y = sp.train.images[:16], sp.train_labels[:16]

# %% [markdown]
# ## Label-mixing augmentations
#
# Mixup blends whole images. CutMix pastes a box and sets the label weight to
# the pasted area. Cutout erases a square and keeps the label.

# %%
for name, batch in [
    ("cutout", cutout(x, y, 16, seed=0, fill=sp.mean, num_classes=10)),
    ("mixup", mixup(x, y, 1.0, seed=0, num_classes=10)),
    ("cutmix", cutmix(x, y, 1.0, seed=0, num_classes=10)),
    ("pixmix_style", pixmix_style(x, y, make_mixer_pool(8, seed=0), seed=0, num_classes=10)),
]:
    changed = np.mean(batch.images != x)
    top = batch.labels.max(axis=1).mean()
    print(f"{name:>13}: {changed:6.1%} of pixel values changed, mean top label weight {top:.3f}")

# %% [markdown]
# ## Plasma fractals
#
# Higher roughness keeps more high-frequency energy. The mean absolute
# neighbour difference makes that visible.

# %%
for r in (0.3, 0.6, 0.9):
    f = plasma_fractal(32, roughness=r, seed=3)
    print(f"roughness {r}: neighbour diff {np.abs(np.diff(f, axis=-1)).mean():.4f}")

# %% [markdown]
# ## Corruptions get worse with severity

# %%
clean = sp.test.images[:32]
for kind in KINDS:
    dist = [np.sqrt(np.mean((corrupt(clean, kind, s, seed=0) - clean) ** 2)) for s in (1, 2, 3)]
    print(f"{kind:>18}: RMS change by severity {np.round(dist, 4)}")

# %% [markdown]
# ## Perturbation sequences and the training mask

# %%
seq = perturb_sequence(clean[0], "translate", T=6, seed=0)
print("translation sequence frame-to-frame change:",
      np.round([np.abs(seq[t + 1] - seq[t]).mean() for t in range(len(seq) - 1)], 4))

mask = sample_mask(MaskSpec(8, 8, 0.7), seed=0)
print(f"r1=0.7 masks {mask.sum()} of 64 patches")
print("\n".join("".join("#" if v else "." for v in row) for row in mask))
masked = apply_mask(clean[:1], mask, sp.mean)
print("masked fraction of pixels:", np.mean(np.any(masked != clean[:1], axis=1)))
