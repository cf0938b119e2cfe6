# %% [markdown]
# # Does the boost term change what a small network learns?
#
# Two models share every seed and the same augmentation. One trains with plain
# cross-entropy (lambda = 0), the other subtracts lambda * L_boost, where
# L_boost is the entropy of softmax(logits - masked logits) under random 8x8
# patch masking. We then compare safety metrics and interaction profiles.
#
# The run is deliberately small (well under a minute on one core). The cached
# acceptance runs use 2000 images and 30 epochs.

# %%
import os
import sys

from mixboost import metrics as mt
from mixboost.data import make_splits
from mixboost.experiment import profile_svg
from mixboost.interactions import PlayerGrid, profile, proxy_m
from mixboost.svg import line_chart
from mixboost.training import TrainConfig, train

out_dir = sys.argv[1] if len(sys.argv) > 1 else "demo_out"
os.makedirs(out_dir, exist_ok=True)

splits = make_splits(n_train=600, n_test=200, seed=0)  # CIFAR if available, else synthetic shapes
print("data source:", splits.source)

# %% [markdown]
# ## Train the pair

# %%
base = TrainConfig(epochs=8, batch_size=50, channels=(8, 16, 16), augmentation="pixmix_style", r1=0.7)
models = {}
for lam in (0.0, 1.0):
    model, log = train(base.replace(lam=lam), splits)
    models[lam] = model
    last = log[-1]
    print(f"lambda={lam}: final ce={last['ce']:.3f} l_boost={last['l_boost']} train_acc={last['train_acc']:.2f}")

# %% [markdown]
# ## Safety report
#
# mCE averages error over corruption kinds and severities. mFR counts prediction
# flips along gradual perturbation sequences. PGD error is measured at
# eps = 8/255. The OOD numbers use max-softmax scores.

# %%
bundle = mt.build_eval_bundle(splits.test.images, splits.test_labels, seed=0,
                              num_sequences=20, T=5, num_ood=100, pgd_count=50)
reports = {lam: mt.full_report(m, bundle) for lam, m in models.items()}
print(f"{'metric':>14} {'lambda=0':>10} {'lambda=1':>10}")
for f in mt.REPORT_FIELDS:
    print(f"{f:>14} {getattr(reports[0.0], f):10.4f} {getattr(reports[1.0], f):10.4f}")

# %% [markdown]
# ## Interaction profiles
#
# Players are the 16 cells of a 4x4 grid. A cell is "absent" when it is filled
# with the dataset mean, and v(S) is the true-class log-odds.

# %%
grid = PlayerGrid(4, 4, tuple(splits.mean))
profiles = {lam: profile(m, splits.test.images[:4], splits.test_labels[:4], grid, budget=480, seed=0)
            for lam, m in models.items()}
for lam, p in profiles.items():
    print(f"lambda={lam}: mid-band mass {p.mass(0.3, 0.7):.3f}, M = {proxy_m(p):.3f}")

series = [(f"lambda={lam}", [m / p.n for m in p.orders], p.J) for lam, p in profiles.items()]
with open(os.path.join(out_dir, "profiles.svg"), "w") as fh:
    fh.write(line_chart(series, title="relative interaction strength", xlabel="order / n", ylabel="J"))
with open(os.path.join(out_dir, "profile_boost.svg"), "w") as fh:
    fh.write(profile_svg(profiles[1.0], "lambda = 1"))
print("charts written to", out_dir)

# %% [markdown]
# After 8 epochs on 600 images the boost model still trails on clean
# and corruption error: the extra term slows the fit. The mCE advantage shows
# up in the 30-epoch acceptance runs. Mid-band differences of a few tenths are
# within the estimator's sampling error, so treat a single pair as an
# anecdote. The acceptance suite aggregates five seed pairs.
