"""Small MLP encoder with a linear classifier head, trained by plain numpy.

The encoder maps an input vector to an L2-normalized feature ``f``; the head
maps ``f`` to logits, and a tempered softmax gives the predicted
distribution. ``backward`` returns the exact gradient of the (batch-mean) KL
loss against a target that is treated as a constant.
"""

from dataclasses import dataclass

import numpy as np

from .mathcore import kl_loss, tempered_softmax

FORMAT_VERSION = 1


class DivergenceError(ArithmeticError):
    """Raised when activations or losses stop being finite."""


class MlpModel:
    """Encoder layers ``[(W, b), ...]`` plus a classifier head ``(W, b)``.

    Weights are stored ``(out, in)``. ReLU sits between encoder layers; the
    last encoder layer is linear and its output is L2-normalized.
    """

    def __init__(self, layers, head, t1=1.0):
        if not t1 > 0:
            raise ValueError(f"t1 must be positive, got {t1}")
        self.layers = [(np.array(W, dtype=np.float64), np.array(b, dtype=np.float64)) for W, b in layers]
        self.head = (np.array(head[0], dtype=np.float64), np.array(head[1], dtype=np.float64))
        self.t1 = float(t1)
        self.version = 0
        self._check_shapes()

    @classmethod
    def init(cls, input_dim, hidden_dims, feature_dim, n_classes, t1=1.0, seed=0):
        """Glorot-uniform weights, zero biases, drawn from ``seed``."""
        rng = np.random.default_rng(seed)
        dims = [input_dim, *hidden_dims, feature_dim]

        def glorot(fan_out, fan_in):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-limit, limit, size=(fan_out, fan_in))

        layers = [(glorot(o, i), np.zeros(o)) for i, o in zip(dims[:-1], dims[1:])]
        head = (glorot(n_classes, feature_dim), np.zeros(n_classes))
        return cls(layers, head, t1)

    def _check_shapes(self):
        if not self.layers:
            raise ValueError("encoder needs at least one layer")
        prev = self.layers[0][0].shape[1]
        for W, b in [*self.layers, self.head]:
            if W.ndim != 2 or W.shape[1] != prev or b.shape != (W.shape[0],):
                raise ValueError(f"layer shapes do not chain: {W.shape}, {b.shape} after width {prev}")
            prev = W.shape[0]

    @property
    def input_dim(self):
        return self.layers[0][0].shape[1]

    @property
    def feature_dim(self):
        return self.layers[-1][0].shape[0]

    @property
    def n_classes(self):
        return self.head[0].shape[0]

    def parameters(self):
        """Flat list ``[W1, b1, ..., W_head, b_head]`` (live references)."""
        out = []
        for W, b in [*self.layers, self.head]:
            out.extend([W, b])
        return out

    def parameter_names(self):
        names = []
        for k in range(len(self.layers)):
            names += [f"encoder{k}.weight", f"encoder{k}.bias"]
        return names + ["head.weight", "head.bias"]

    @property
    def n_parameters(self):
        return sum(p.size for p in self.parameters())

    def copy(self):
        return MlpModel([(W.copy(), b.copy()) for W, b in self.layers],
                        (self.head[0].copy(), self.head[1].copy()), self.t1)


@dataclass
class ForwardCache:
    inputs: list
    preacts: list
    norm: np.ndarray
    f: np.ndarray
    yhat: np.ndarray
    version: int
    model_id: int
    single: bool


@dataclass
class GradientSet:
    names: list
    arrays: list

    def __iter__(self):
        return iter(self.arrays)

    def __len__(self):
        return len(self.arrays)


def forward(model, x):
    """Run the encoder and classifier.

    Args:
        model: the network.
        x: one input ``(input_dim,)`` or a batch ``(B, input_dim)``.

    Returns:
        ``(f, yhat, cache)``: unit-norm features, predicted distributions and
        the intermediates ``backward`` needs. Shapes follow ``x``.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise ValueError(f"input has shape {x.shape}, model expects width {model.input_dim}")

    inputs, preacts = [], []
    a = X
    last = len(model.layers) - 1
    for k, (W, b) in enumerate(model.layers):
        inputs.append(a)
        h = a @ W.T + b
        preacts.append(h)
        a = np.maximum(h, 0.0) if k < last else h
    norm = np.linalg.norm(a, axis=1, keepdims=True)
    if not np.all(np.isfinite(a)):
        raise DivergenceError("non-finite encoder activations")
    if np.any(norm == 0.0):
        raise DivergenceError("encoder produced a zero feature vector; cannot normalize")
    f = a / norm
    logits = f @ model.head[0].T + model.head[1]
    if not np.all(np.isfinite(logits)):
        raise DivergenceError("non-finite logits")
    yhat = tempered_softmax(logits, model.t1)
    cache = ForwardCache(inputs, preacts, norm, f, yhat, model.version, id(model), single)
    if single:
        return f[0], yhat[0], cache
    return f, yhat, cache


def batch_loss(target, yhat):
    """Mean per-instance KL loss over a batch."""
    return float(np.mean(kl_loss(np.atleast_2d(target), np.atleast_2d(yhat))))


def backward(model, cache, target):
    """Gradient of ``mean_i KL(target_i || yhat_i)`` w.r.t. every parameter.

    ``target`` is a constant: nothing flows back through it. It may be
    unnormalized, in which case the logit gradient is
    ``(sum(target) * yhat - target) / t1``.
    """
    if cache.model_id != id(model) or cache.version != model.version:
        raise ValueError("stale forward cache: the model changed since this forward pass")
    T = np.asarray(target, dtype=np.float64)
    if cache.single:
        T = T[None, :]
    Y = cache.yhat
    if T.shape != Y.shape:
        raise ValueError(f"target shape {T.shape} does not match predictions {Y.shape}")
    B = Y.shape[0]

    g_logits = (T.sum(axis=1, keepdims=True) * Y - T) / (model.t1 * B)
    f = cache.f
    W_head = model.head[0]
    grads_head = [g_logits.T @ f, g_logits.sum(axis=0)]

    g_f = g_logits @ W_head
    # Jacobian of v / |v| is (I - f f^T) / |v|
    g = (g_f - f * np.sum(g_f * f, axis=1, keepdims=True)) / cache.norm

    grads = []
    last = len(model.layers) - 1
    for k in range(last, -1, -1):
        W, _ = model.layers[k]
        if k < last:
            g = g * (cache.preacts[k] > 0)
        grads.append((g.T @ cache.inputs[k], g.sum(axis=0)))
        if k > 0:
            g = g @ W
    arrays = []
    for gW, gb in reversed(grads):
        arrays.extend([gW, gb])
    arrays.extend(grads_head)
    return GradientSet(model.parameter_names(), arrays)


def sgd_step(model, grads, lr, momentum=0.9, weight_decay=1e-4, velocity=None):
    """One SGD update with heavy-ball momentum and L2 weight decay, in place.

    ``v <- momentum * v + grad + weight_decay * param``; ``param <- param - lr * v``.
    Returns the velocity list to pass into the next call.
    """
    params = model.parameters()
    if len(grads) != len(params):
        raise ValueError("gradient set does not match the model's parameters")
    if velocity is None:
        velocity = [np.zeros_like(p) for p in params]
    for p, g, v in zip(params, grads, velocity):
        if g.shape != p.shape or v.shape != p.shape:
            raise ValueError(f"shape mismatch: param {p.shape}, grad {g.shape}, velocity {v.shape}")
        v *= momentum
        v += g
        if weight_decay:
            v += weight_decay * p
        p -= lr * v
    model.version += 1
    return velocity


def predict(model, x):
    """Class index (or indices, for a batch) with the highest probability."""
    _, yhat, _ = forward(model, x)
    return np.argmax(yhat, axis=-1)


def save_model(model, path):
    """Checkpoint all parameter arrays.

    ``.npz`` paths get a binary archive; anything else is written as text with
    a shape header per array and 17 significant digits. Both reload exactly.
    """
    path = str(path)
    params = model.parameters()
    if path.endswith(".npz"):
        arrays = {f"p{i}": p for i, p in enumerate(params)}
        np.savez(path, format_version=FORMAT_VERSION, n_layers=len(model.layers),
                 t1=model.t1, **arrays)
        return
    with open(path, "w") as fh:
        fh.write(f"pel-mlp {FORMAT_VERSION}\n")
        fh.write(f"layers {len(model.layers)} t1 {model.t1!r}\n")
        for name, p in zip(model.parameter_names(), params):
            fh.write(f"{name} {' '.join(str(s) for s in p.shape)}\n")
            fh.write(" ".join(f"{v:.17g}" for v in p.ravel()) + "\n")


def load_model(path):
    path = str(path)
    if path.endswith(".npz"):
        with np.load(path) as z:
            version = int(z["format_version"])
            if version != FORMAT_VERSION:
                raise ValueError(f"unsupported checkpoint version {version}")
            n_layers = int(z["n_layers"])
            t1 = float(z["t1"])
            params = [z[f"p{i}"] for i in range(2 * n_layers + 2)]
    else:
        with open(path) as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0].split() != ["pel-mlp", str(FORMAT_VERSION)]:
            raise ValueError(f"{path}: not a version {FORMAT_VERSION} model checkpoint")
        meta = lines[1].split()
        n_layers, t1 = int(meta[1]), float(meta[3])
        params = []
        for i in range(2 * n_layers + 2):
            shape = tuple(int(s) for s in lines[2 + 2 * i].split()[1:])
            values = np.array([float(v) for v in lines[3 + 2 * i].split()], dtype=np.float64)
            params.append(values.reshape(shape))
    layers = [(params[2 * k], params[2 * k + 1]) for k in range(n_layers)]
    return MlpModel(layers, (params[-2], params[-1]), t1)
