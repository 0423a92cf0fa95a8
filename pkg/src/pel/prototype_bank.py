"""Per-class prototype memory updated by exponential moving average.

The bank holds one row per class. Rows start as class-mean features of the
training set, move toward each batch's class means, and are scored against
instance features by (by default) cosine similarity followed by a tempered
softmax. The bank is never touched by gradient descent.
"""

from dataclasses import dataclass, field

import numpy as np

from .mathcore import l2_normalize, tempered_softmax

COSINE_MODES = ("normalized", "raw_dot")


@dataclass
class PrototypeBank:
    prototypes: np.ndarray
    alpha: float
    initialized: np.ndarray = field(default=None)

    def __post_init__(self):
        self.prototypes = np.array(self.prototypes, dtype=np.float64)
        if self.prototypes.ndim != 2:
            raise ValueError("prototypes must be an N x D matrix")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not np.all(np.isfinite(self.prototypes)):
            raise ValueError("prototypes contain non-finite entries")
        if self.initialized is None:
            self.initialized = np.ones(self.n_classes, dtype=bool)
        else:
            self.initialized = np.array(self.initialized, dtype=bool)
            if self.initialized.shape != (self.n_classes,):
                raise ValueError("initialized mask must have one entry per class")

    @property
    def n_classes(self):
        return self.prototypes.shape[0]

    @property
    def dim(self):
        return self.prototypes.shape[1]

    def copy(self):
        return PrototypeBank(self.prototypes.copy(), self.alpha, self.initialized.copy())


@dataclass
class ClassMeanSet:
    """Mean feature and sample count of every class present in a batch."""

    means: dict
    counts: dict


def _check_labels(labels, n_classes):
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"class index out of range [0, {n_classes})")
    return labels.astype(np.int64)


def init_bank(features, labels, n_classes, alpha=0.9):
    """Build a bank whose row ``n`` is the mean training feature of class ``n``.

    Classes with no samples keep a zero row and are marked uninitialized;
    their first batch mean will overwrite the row.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError("init_bank needs a non-empty (n, D) feature matrix")
    labels = _check_labels(labels, n_classes)
    if labels.shape != (features.shape[0],):
        raise ValueError("one label per feature row required")
    sums = np.zeros((n_classes, features.shape[1]))
    np.add.at(sums, labels, features)
    counts = np.bincount(labels, minlength=n_classes)
    seen = counts > 0
    sums[seen] /= counts[seen, None]
    return PrototypeBank(sums, alpha, seen)


def batch_class_means(features, labels):
    """Group a batch by label and average the features of each group."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError("batch must be a non-empty (B, D) feature matrix")
    if labels.shape != (features.shape[0],):
        raise ValueError("one label per feature row required")
    if labels.min() < 0:
        raise ValueError("negative class index in batch")
    means, counts = {}, {}
    for c in np.unique(labels):
        rows = features[labels == c]
        means[int(c)] = rows.sum(axis=0) / rows.shape[0]
        counts[int(c)] = rows.shape[0]
    return ClassMeanSet(means, counts)


def ema_update(bank, means):
    """Move each present class's prototype toward its batch mean, in place.

    ``P_n <- P_n + alpha * (F_n - P_n)``; rows of absent classes are not
    written at all. An uninitialized row is replaced by ``F_n`` outright.
    """
    for c, mean in means.means.items():
        mean = np.asarray(mean, dtype=np.float64)
        if mean.shape != (bank.dim,):
            raise ValueError(f"class mean has shape {mean.shape}, bank rows have {bank.dim}")
        if not 0 <= c < bank.n_classes:
            raise ValueError(f"class index {c} out of range [0, {bank.n_classes})")
        if bank.initialized[c]:
            bank.prototypes[c] += bank.alpha * (mean - bank.prototypes[c])
        else:
            bank.prototypes[c] = mean
            bank.initialized[c] = True


def prototype_logits(bank, f, mode="normalized"):
    """Raw similarity of ``f`` (one row or a batch) to every prototype."""
    if mode not in COSINE_MODES:
        raise ValueError(f"unknown similarity mode {mode!r}; expected one of {COSINE_MODES}")
    f = np.asarray(f, dtype=np.float64)
    if f.shape[-1] != bank.dim:
        raise ValueError(f"feature dim {f.shape[-1]} does not match bank dim {bank.dim}")
    rows = bank.prototypes
    if mode == "normalized":
        rows = np.zeros_like(rows)
        rows[bank.initialized] = l2_normalize(bank.prototypes[bank.initialized])
    return f @ rows.T


def similarity_scores(bank, f, t2=1.0, mode="normalized"):
    """Softmax-normalized similarity of ``f`` to every class prototype.

    Uninitialized classes receive zero weight; the softmax runs over the
    initialized classes only.

    Args:
        bank: the prototype bank.
        f: unit-norm feature ``(D,)`` or batch ``(B, D)``.
        t2: softmax temperature.
        mode: ``"normalized"`` scores against L2-normalized prototype rows
            (cosine similarity); ``"raw_dot"`` uses the rows as stored.
    """
    if not bank.initialized.any():
        raise ValueError("prototype bank has no initialized class")
    s = prototype_logits(bank, f, mode)
    if bank.initialized.all():
        return tempered_softmax(s, t2)
    w = np.zeros_like(s)
    w[..., bank.initialized] = tempered_softmax(s[..., bank.initialized], t2)
    return w


def save_bank(bank, path):
    """Write the bank as text: a ``N D alpha`` header, the mask, then rows.

    Values use 17 significant digits, so a reload is bit-exact.
    """
    with open(path, "w") as fh:
        fh.write(f"{bank.n_classes} {bank.dim} {bank.alpha!r}\n")
        fh.write(" ".join("1" if m else "0" for m in bank.initialized) + "\n")
        for row in bank.prototypes:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_bank(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty bank file")
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError(f"{path}:1: expected 'N D alpha' header")
    n, d, alpha = int(head[0]), int(head[1]), float(head[2])
    if len(lines) != n + 2:
        raise ValueError(f"{path}: expected {n + 2} lines, found {len(lines)}")
    mask = np.array([tok == "1" for tok in lines[1].split()], dtype=bool)
    rows = np.array([[float(tok) for tok in line.split()] for line in lines[2:]], dtype=np.float64)
    if rows.shape != (n, d):
        raise ValueError(f"{path}: matrix shape {rows.shape} does not match header ({n}, {d})")
    return PrototypeBank(rows.reshape(n, d), alpha, mask)
