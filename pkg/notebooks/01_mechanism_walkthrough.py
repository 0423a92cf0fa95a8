# %% [markdown]
# # Building one enhanced label by hand
#
# A two-dimensional toy: three classes, a handful of unit-norm features, a
# prototype bank seeded from class means, one moving-average update, and the
# soft target that replaces the one-hot label.

# %%
import numpy as np

from pel import (batch_class_means, ema_update, fuse_labels, init_bank, kl_loss, l2_normalize,
                 one_hot, similarity_scores, smooth_labels, tempered_softmax)

np.set_printoptions(precision=4, suppress=True)

# %%
features = l2_normalize(np.array([[1.0, 0.1], [0.9, 0.3], [0.7, 0.7], [0.6, 0.8], [-1.0, 0.2]]))
labels = np.array([0, 0, 1, 1, 2])
bank = init_bank(features, labels, n_classes=3, alpha=0.9)
print("initial prototypes\n", bank.prototypes)

# %% [markdown]
# A new batch arrives. Its class means pull the prototypes 90% of the way
# toward them; class 2 is absent and stays put.

# %%
batch = l2_normalize(np.array([[0.95, 0.2], [0.5, 0.9]]))
batch_labels = np.array([0, 1])
ema_update(bank, batch_class_means(batch, batch_labels))
print("updated prototypes\n", bank.prototypes)

# %% [markdown]
# Two instances of class 0 get different similarity profiles, so their soft
# targets differ on the negative classes. Label smoothing would give them the
# same target.

# %%
a = l2_normalize(np.array([1.0, 0.0]))
b = l2_normalize(np.array([0.8, 0.6]))
for name, f in (("a", a), ("b", b)):
    w = similarity_scores(bank, f, t2=1.0)
    print(name, "scores", w, "enhanced", fuse_labels(one_hot(0, 3), w, beta=6.0),
          "smoothed", smooth_labels(one_hot(0, 3), 0.1))

# %% [markdown]
# The enhanced label sums to beta + 1 = 7 and is scored verbatim by the KL
# loss, so its minimum over predictions is 7 log 7 rather than 0, and every
# logit gradient is 7 times larger than with a unit-mass target.

# %%
target = fuse_labels(one_hot(0, 3), similarity_scores(bank, a), 6.0)
best = target / target.sum()
print("loss at the best prediction", kl_loss(target, best), "= 7 log 7 =", 7 * np.log(7))
print("loss at a uniform prediction", kl_loss(target, tempered_softmax(np.zeros(3))))
