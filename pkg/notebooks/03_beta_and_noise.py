# %% [markdown]
# # Beta sweep and the label-noise grid
#
# The same experiments the `pel sweep-beta` and `pel bench-noise` commands
# write to CSV, run in-process.

# %%
import numpy as np

from pel import SyntheticSpec, TrainConfig, generate
from pel.bench import degradation_slope, run_noise_benchmark, summarize_noise
from pel.trainer import run_beta_sweep

spec = SyntheticSpec()
train_ds, test_ds = generate(spec)
for row in run_beta_sweep(TrainConfig(), [4, 6, 8], train_ds, test_ds, spec.n_classes):
    print(f"beta={row.beta:g}  test accuracy {row.accuracy:.4f}")

# %% [markdown]
# Corrupted labels drawn uniformly from the wrong classes, then drawn only
# from the group sibling (the confusion fine-grained data actually produces).

# %%
for mode in ("uniform", "sibling"):
    summary = summarize_noise(run_noise_benchmark(TrainConfig(), SyntheticSpec(noise_mode=mode)))
    print(f"\n{mode} corruption")
    for rate, strategy, mean, std, *_ in summary:
        print(f"  rate={rate:<4g} {strategy:<16} {mean:.3f} +- {std:.3f}")
    for strategy in ("onehot_ce", "label_smoothing", "pel"):
        print(f"  slope {strategy:<16} {degradation_slope(summary, strategy):+.3f}")
