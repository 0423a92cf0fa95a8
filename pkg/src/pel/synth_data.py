"""Synthetic stand-in for ultra-fine-grained data.

Classes come in sibling groups: each group has a center on the unit sphere,
and its classes sit a small distance (``group_spread``) away from it, so
siblings are far more alike than classes from different groups. Samples are
Gaussian around their class center. Label noise can be injected uniformly
over the wrong classes or only toward group siblings.
"""

import csv
from dataclasses import dataclass

import numpy as np

NOISE_MODES = ("uniform", "sibling")


class SpecError(ValueError):
    """Inconsistent synthetic-data settings."""


class DataFormatError(ValueError):
    """Malformed dataset CSV file."""


@dataclass
class SyntheticSpec:
    n_classes: int = 8
    input_dim: int = 64
    n_super_groups: int = 4
    group_spread: float = 0.5
    intra_noise_sigma: float = 0.08
    samples_per_class_train: int = 50
    samples_per_class_test: int = 50
    mislabel_rate: float = 0.0
    noise_mode: str = "uniform"
    seed: int = 0

    def validate(self):
        checks = [
            (self.n_classes >= 2, "n_classes must be at least 2"),
            (self.input_dim >= 1, "input_dim must be positive"),
            (self.n_super_groups >= 1, "n_super_groups must be positive"),
            (self.n_classes % max(self.n_super_groups, 1) == 0,
             "n_classes must divide evenly into n_super_groups"),
            (self.group_spread > 0, "group_spread must be positive"),
            (self.intra_noise_sigma >= 0, "intra_noise_sigma must be non-negative"),
            (self.samples_per_class_train >= 1, "samples_per_class_train must be positive"),
            (self.samples_per_class_test >= 1, "samples_per_class_test must be positive"),
            (0 <= self.mislabel_rate < 1, "mislabel_rate must lie in [0, 1)"),
            (self.noise_mode in NOISE_MODES, f"noise_mode must be one of {NOISE_MODES}"),
        ]
        for ok, message in checks:
            if not ok:
                raise SpecError(message)

    @property
    def group_size(self):
        return self.n_classes // self.n_super_groups

    def group_of(self, c):
        return np.asarray(c) // self.group_size

    def siblings(self, c):
        g = int(self.group_of(c))
        return [k for k in range(g * self.group_size, (g + 1) * self.group_size) if k != c]


@dataclass(eq=False)
class Dataset:
    X: np.ndarray
    true_class: np.ndarray
    observed_class: np.ndarray
    split: str = "train"

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.true_class = np.asarray(self.true_class, dtype=np.int64)
        self.observed_class = np.asarray(self.observed_class, dtype=np.int64)
        n = self.X.shape[0]
        if self.true_class.shape != (n,) or self.observed_class.shape != (n,):
            raise ValueError("label arrays must have one entry per sample")

    def __len__(self):
        return self.X.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.split == other.split
                and self.X.shape == other.X.shape
                and np.array_equal(self.X, other.X)
                and np.array_equal(self.true_class, other.true_class)
                and np.array_equal(self.observed_class, other.observed_class))

    @property
    def n_corrupted(self):
        return int(np.sum(self.true_class != self.observed_class))


def class_centers(spec):
    """Group centers on the unit sphere plus per-class offsets of length ``group_spread``."""
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0]))
    groups = rng.normal(size=(spec.n_super_groups, spec.input_dim))
    groups /= np.linalg.norm(groups, axis=1, keepdims=True)
    offsets = rng.normal(size=(spec.n_classes, spec.input_dim))
    offsets /= np.linalg.norm(offsets, axis=1, keepdims=True)
    return groups[spec.group_of(np.arange(spec.n_classes))] + spec.group_spread * offsets


def _check_group_structure(spec, centers):
    d = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=-1)
    g = spec.group_of(np.arange(spec.n_classes))
    same = (g[:, None] == g[None, :]) & ~np.eye(spec.n_classes, dtype=bool)
    cross = g[:, None] != g[None, :]
    if same.any() and cross.any() and d[same].max() >= d[cross].min():
        raise SpecError(
            f"group_spread={spec.group_spread} too large: sibling classes are not "
            f"nearer to each other than to other groups (max sibling distance "
            f"{d[same].max():.3f}, min cross-group distance {d[cross].min():.3f})")


def _sample(rng, centers, per_class, sigma):
    labels = np.repeat(np.arange(centers.shape[0]), per_class)
    X = centers[labels] + sigma * rng.normal(size=(labels.size, centers.shape[1]))
    return X, labels


def generate(spec):
    """Draw a ``(train, test)`` pair; a pure function of ``spec``."""
    spec.validate()
    centers = class_centers(spec)
    _check_group_structure(spec, centers)
    X, y = _sample(np.random.default_rng(np.random.SeedSequence([spec.seed, 1])),
                   centers, spec.samples_per_class_train, spec.intra_noise_sigma)
    train = Dataset(X, y, y.copy(), "train")
    X, y = _sample(np.random.default_rng(np.random.SeedSequence([spec.seed, 2])),
                   centers, spec.samples_per_class_test, spec.intra_noise_sigma)
    test = Dataset(X, y, y.copy(), "test")
    if spec.mislabel_rate > 0:
        train = inject_label_noise(train, spec.mislabel_rate,
                                   np.random.SeedSequence([spec.seed, 3]),
                                   mode=spec.noise_mode, n_classes=spec.n_classes,
                                   group_size=spec.group_size)
    return train, test


def inject_label_noise(train, rate, seed, mode="uniform", n_classes=None, group_size=None):
    """Corrupt exactly ``round(rate * n)`` observed labels.

    In ``uniform`` mode a corrupted label is drawn uniformly from the other
    ``N - 1`` classes; in ``sibling`` mode from the other members of the true
    class's group (classes ``[g * group_size, (g + 1) * group_size)``). True
    labels are kept. Rows are chosen without replacement, starting from the
    true labels, so the count is exact even on an already-noisy dataset.
    """
    if not 0 <= rate < 1:
        raise ValueError(f"noise rate must lie in [0, 1), got {rate}")
    if mode not in NOISE_MODES:
        raise ValueError(f"unknown noise mode {mode!r}")
    if n_classes is None:
        n_classes = int(train.true_class.max()) + 1
    n = len(train)
    k = int(np.floor(rate * n + 0.5))
    observed = train.true_class.copy()
    if k:
        rng = np.random.default_rng(seed)
        rows = np.sort(rng.choice(n, size=k, replace=False))
        for i in rows:
            t = int(train.true_class[i])
            if mode == "sibling" and group_size and group_size > 1:
                g = t // group_size
                pool = [c for c in range(g * group_size, (g + 1) * group_size) if c != t]
            else:
                pool = [c for c in range(n_classes) if c != t]
            observed[i] = pool[rng.integers(len(pool))]
    return Dataset(train.X.copy(), train.true_class.copy(), observed, train.split)


def save_csv(ds, path):
    """Write ``split,true_class,observed_class,x0..x{d-1}`` with 17 significant digits."""
    d = ds.X.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["split", "true_class", "observed_class", *[f"x{j}" for j in range(d)]])
        for x, t, o in zip(ds.X, ds.true_class, ds.observed_class):
            w.writerow([ds.split, int(t), int(o), *[f"{v:.17g}" for v in x]])


def load_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0]:
        raise DataFormatError(f"{path}: no header")
    header = rows[0]
    d = len(header) - 3
    expected = ["split", "true_class", "observed_class", *[f"x{j}" for j in range(d)]]
    if header != expected:
        raise DataFormatError(f"{path}:1: unexpected header {header[:4]}...")
    split, X, t, o = None, [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        if split is None:
            split = row[0]
        elif row[0] != split:
            raise DataFormatError(f"{path}:{lineno}: mixed splits {split!r} and {row[0]!r}")
        try:
            t.append(int(row[1]))
            o.append(int(row[2]))
            X.append([float(v) for v in row[3:]])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    X = np.array(X, dtype=np.float64).reshape(len(X), d)
    return Dataset(X, np.array(t, dtype=np.int64), np.array(o, dtype=np.int64), split or "train")
