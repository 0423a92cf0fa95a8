"""Training loop for prototype-enhanced labels and the two baselines.

Per batch, for the ``pel`` strategy: forward the batch, fold its class means
(grouped by observed label) into the prototype bank, score every instance
against the bank, fuse the scores into the one-hot labels, and take one SGD
step on the mean KL loss. ``onehot_ce`` and ``label_smoothing`` skip the bank
and train on their own fixed targets.
"""

import csv
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .label_enhancer import fuse_labels, one_hot, smooth_labels
from .model import DivergenceError, MlpModel, backward, batch_loss, forward, predict, sgd_step
from .prototype_bank import COSINE_MODES, batch_class_means, ema_update, init_bank, similarity_scores

STRATEGIES = ("onehot_ce", "label_smoothing", "pel")


class TrainingDivergedError(DivergenceError):
    def __init__(self, epoch, batch, detail):
        super().__init__(f"training diverged at epoch {epoch}, batch {batch}: {detail}")
        self.epoch = epoch
        self.batch = batch


@dataclass
class TrainConfig:
    """Hyperparameters for one run. Defaults follow the published setup
    (SGD lr 0.001, momentum 0.9, weight decay 1e-4, batch 8, alpha 0.9,
    beta 6, both temperatures 1) scaled down to a small MLP."""

    strategy: str = "pel"
    beta: float = 6.0
    alpha: float = 0.9
    t1: float = 1.0
    t2: float = 1.0
    lr: float = 0.001
    momentum: float = 0.9
    weight_decay: float = 1e-4
    batch_size: int = 8
    epochs: int = 6
    smoothing_epsilon: float = 0.1
    normalize_enhanced_target: bool = False
    score_before_update: bool = False
    cosine_mode: str = "normalized"
    hidden_dims: tuple = (64,)
    feature_dim: int = 32
    seed: int = 0
    # experiment-level settings used by the sweep and benchmark runners
    betas: tuple = (4.0, 6.0, 8.0)
    noise_rates: tuple = (0.0, 0.1, 0.2, 0.3)
    replicates: int = 5

    def validate(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.cosine_mode not in COSINE_MODES:
            raise ValueError(f"cosine_mode must be one of {COSINE_MODES}, got {self.cosine_mode!r}")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        for name in ("beta", "t1", "t2", "lr"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.smoothing_epsilon < 1:
            raise ValueError("smoothing_epsilon must lie in [0, 1)")
        if self.batch_size < 1 or self.epochs < 0 or self.replicates < 1:
            raise ValueError("batch_size and replicates must be positive, epochs non-negative")

    def replace(self, **changes):
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return TrainConfig(**values)


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_accuracy: float
    test_accuracy: float
    prototype_drift: float
    wall_seconds: float


@dataclass
class MetricsLog:
    rows: list = field(default_factory=list)

    COLUMNS = ("epoch", "train_loss", "train_accuracy", "test_accuracy",
               "prototype_drift", "wall_seconds")

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])

    def deterministic_rows(self):
        """Rows without the wall-clock column, for reproducibility checks."""
        return [tuple(v for k, v in asdict(r).items() if k != "wall_seconds") for r in self.rows]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for r in self.rows:
                w.writerow([r.epoch] + [repr(float(getattr(r, c))) for c in self.COLUMNS[1:]])


def evaluate(model, ds):
    """Fraction of ``ds`` whose predicted class equals the true class."""
    if len(ds) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    return float(np.mean(predict(model, ds.X) == ds.true_class))


def build_model(config, input_dim, n_classes):
    return MlpModel.init(input_dim, config.hidden_dims, config.feature_dim, n_classes,
                         t1=config.t1, seed=config.seed)


def _targets(config, bank, f, labels, n_classes):
    y = one_hot(labels, n_classes)
    if config.strategy == "onehot_ce":
        return y, 0.0
    if config.strategy == "label_smoothing":
        return smooth_labels(y, config.smoothing_epsilon), 0.0

    def score():
        return similarity_scores(bank, f, config.t2, config.cosine_mode)

    w = score() if config.score_before_update else None
    before = bank.prototypes.copy()
    ema_update(bank, batch_class_means(f, labels))
    drift = float(np.linalg.norm(bank.prototypes - before))
    if w is None:
        w = score()
    target = fuse_labels(y, w, config.beta)
    if config.normalize_enhanced_target:
        target = target / (config.beta + 1.0)
    return target, drift


def train(config, train_ds, test_ds, n_classes=None, model=None):
    """Train one model.

    Args:
        config: a ``TrainConfig``.
        train_ds, test_ds: datasets with matching input width.
        n_classes: defaults to one more than the largest label seen.
        model: optional starting model (trained in place); built from
            ``config`` when omitted.

    Returns:
        ``(model, bank, metrics)``; ``bank`` is ``None`` for the baselines.
    """
    config.validate()
    if train_ds.X.shape[1] != test_ds.X.shape[1]:
        raise ValueError("train and test inputs differ in width")
    if n_classes is None:
        n_classes = int(max(train_ds.true_class.max(), train_ds.observed_class.max(),
                            test_ds.true_class.max())) + 1
    if model is None:
        model = build_model(config, train_ds.X.shape[1], n_classes)
    labels = train_ds.observed_class

    bank = None
    if config.strategy == "pel":
        f_all, _, _ = forward(model, train_ds.X)
        bank = init_bank(f_all, labels, n_classes, config.alpha)

    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    velocity = None
    log = MetricsLog()
    n = len(train_ds)
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        order = rng.permutation(n)
        loss_sum, drifts = 0.0, []
        for b, lo in enumerate(range(0, n, config.batch_size)):
            idx = order[lo:lo + config.batch_size]
            try:
                f, yhat, cache = forward(model, train_ds.X[idx])
            except DivergenceError as exc:
                raise TrainingDivergedError(epoch, b, str(exc)) from exc
            target, drift = _targets(config, bank, f, labels[idx], n_classes)
            loss = batch_loss(target, yhat)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, b, f"loss is {loss}")
            grads = backward(model, cache, target)
            velocity = sgd_step(model, grads, config.lr, config.momentum,
                                config.weight_decay, velocity)
            loss_sum += loss * idx.size
            drifts.append(drift)
        log.rows.append(EpochMetrics(
            epoch=epoch,
            train_loss=loss_sum / n,
            train_accuracy=evaluate(model, train_ds),
            test_accuracy=evaluate(model, test_ds),
            prototype_drift=float(np.mean(drifts)),
            wall_seconds=time.perf_counter() - start,
        ))
    return model, bank, log


@dataclass
class SweepRow:
    beta: float
    accuracy: float
    error: str = ""


def run_beta_sweep(config, betas, train_ds, test_ds, n_classes=None):
    """Train once per beta on fixed data and seed; rows sorted by beta.

    A failing cell records its error message and NaN accuracy; the other
    cells still run.
    """
    betas = list(betas)
    if not betas:
        raise ValueError("beta sweep needs at least one value")
    rows = []
    for beta in sorted(betas):
        try:
            model, _, _ = train(config.replace(strategy="pel", beta=float(beta)),
                                train_ds, test_ds, n_classes)
            rows.append(SweepRow(float(beta), evaluate(model, test_ds)))
        except (ArithmeticError, ValueError) as exc:
            rows.append(SweepRow(float(beta), float("nan"), str(exc)))
    return rows


def sibling_analysis(model, bank, ds, siblings, t2=1.0, mode="normalized"):
    """How often the strongest wrong-class similarity points at a group sibling.

    Args:
        siblings: callable mapping a class index to its sibling classes.

    Returns:
        dict with ``top_negative_is_sibling`` (fraction of instances), and
        the mean similarity weight on sibling and on non-sibling negatives.
    """
    f, _, _ = forward(model, ds.X)
    w = similarity_scores(bank, f, t2, mode)
    n = w.shape[1]
    hits, sib_w, other_w = [], [], []
    for row, c in zip(w, ds.true_class):
        sib = set(siblings(int(c)))
        negatives = [k for k in range(n) if k != c]
        top = max(negatives, key=lambda k: row[k])
        hits.append(top in sib)
        sib_w.append(np.mean([row[k] for k in negatives if k in sib]))
        other_w.append(np.mean([row[k] for k in negatives if k not in sib]))
    return {
        "top_negative_is_sibling": float(np.mean(hits)),
        "mean_sibling_weight": float(np.mean(sib_w)),
        "mean_other_weight": float(np.mean(other_w)),
    }
