# %% [markdown]
# # Hard targets, smoothed targets and prototype-enhanced targets
#
# Eight classes in four sibling pairs, 64-d inputs, 50 training samples per
# class. All three strategies share data and seed.

# %%
import numpy as np

from pel import SyntheticSpec, TrainConfig, generate, train
from pel.trainer import evaluate, sibling_analysis

spec = SyntheticSpec()
train_ds, test_ds = generate(spec)

for strategy in ("onehot_ce", "label_smoothing", "pel"):
    model, bank, log = train(TrainConfig(strategy=strategy), train_ds, test_ds, spec.n_classes)
    print(f"{strategy:<16} test accuracy {evaluate(model, test_ds):.3f}")

# %% [markdown]
# ## How long does the similarity structure last?
#
# For each test instance, take the class the prototypes consider most similar
# apart from its own, and check whether it is the group sibling (chance is
# 1/7). The rate is high early on and fades as training separates all classes
# equally. The enhanced target's mass of 7 speeds training up, so PEL fades
# faster than the hard-target baseline would.

# %%
for epochs in (2, 6, 12, 24, 48):
    model, bank, _ = train(TrainConfig(epochs=epochs), train_ds, test_ds, spec.n_classes)
    out = sibling_analysis(model, bank, test_ds, spec.siblings)
    print(f"epochs={epochs:<3} accuracy={evaluate(model, test_ds):.3f} "
          f"sibling-is-top-negative={out['top_negative_is_sibling']:.3f} "
          f"sibling weight={out['mean_sibling_weight']:.4f} other={out['mean_other_weight']:.4f}")

# %% [markdown]
# Dividing the target by beta + 1 removes the 7x gradient scale; the
# comparison with the hard-target baseline then looks very different.

# %%
for label, cfg in (("unnormalized", TrainConfig()),
                   ("normalized", TrainConfig(normalize_enhanced_target=True)),
                   ("onehot_ce", TrainConfig(strategy="onehot_ce"))):
    accs = []
    for seed in range(5):
        tr, te = generate(SyntheticSpec(seed=seed))
        accs.append(evaluate(train(cfg.replace(seed=seed), tr, te, 8)[0], te))
    print(f"{label:<13} mean test accuracy over 5 seeds {np.mean(accs):.3f}")
