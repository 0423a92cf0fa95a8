"""Central finite-difference check of the analytic gradients in ``model``."""

import numpy as np

from .label_enhancer import fuse_labels, one_hot
from .model import MlpModel, backward, batch_loss, forward

TOLERANCE = 1e-4


def relative_error(a, b):
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)


def numeric_gradients(model, X, target, h=1e-5):
    """Perturb every parameter entry by ``+-h`` and difference the loss."""
    out = []
    for p in model.parameters():
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = batch_loss(target, forward(model, X)[1])
            flat[i] = orig - h
            down = batch_loss(target, forward(model, X)[1])
            flat[i] = orig
            gflat[i] = (up - down) / (2 * h)
        out.append(g)
    return out


def toy_problem(seed, input_dim=8, hidden=(16,), feature_dim=8, n_classes=5,
                batch=6, beta=6.0):
    """Random model, inputs and enhanced targets for a gradient check."""
    rng = np.random.default_rng(seed)
    model = MlpModel.init(input_dim, hidden, feature_dim, n_classes, seed=seed)
    # nonzero biases so every code path is exercised
    for p in model.parameters():
        if p.ndim == 1:
            p[:] = rng.normal(scale=0.1, size=p.shape)
    X = rng.normal(size=(batch, input_dim))
    labels = rng.integers(0, n_classes, size=batch)
    w = rng.dirichlet(np.ones(n_classes), size=batch)
    target = fuse_labels(one_hot(labels, n_classes), w, beta)
    return model, X, target


def check_gradients(model, X, target, h=1e-5, perturb=0.0):
    """Compare analytic and numeric gradients parameter by parameter.

    Args:
        perturb: added to every analytic gradient entry; a test hook used to
            confirm the checker actually detects wrong gradients.

    Returns:
        ``{parameter_name: max relative error}``.
    """
    _, _, cache = forward(model, X)
    analytic = backward(model, cache, target)
    numeric = numeric_gradients(model, X, target, h)
    report = {}
    for name, a, n in zip(analytic.names, analytic.arrays, numeric):
        report[name] = float(relative_error(a + perturb, n).max())
    return report


def run_suite(seeds=(0, 1, 2), perturb=0.0):
    """Check the toy 8 -> 16 -> 8 feature, 5-class problem on several seeds.

    Returns ``{seed: {parameter_name: max relative error}}``.
    """
    return {seed: check_gradients(*toy_problem(seed), perturb=perturb) for seed in seeds}
