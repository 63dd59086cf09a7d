"""Feed-forward meta-learner trained by backpropagation.

ReLU hidden layers, one sigmoid output unit, mean binary cross-entropy,
mini-batch Adam, early stopping on a stratified validation slice with the
best-epoch weights restored.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit

from .dataset import derive_seed, stratified_assignment
from .errors import DimensionMismatchError, NonFiniteLossError, SingleClassTrainingError

DEFAULT_TOPOLOGY = (6, 12, 32, 12, 6)
DEFAULT_GRID = (DEFAULT_TOPOLOGY, (32, 16), (64, 32, 16), (16, 16))

# keep outputs strictly inside (0, 1) even where float64 sigmoid saturates
_P_LO = np.nextafter(0.0, 1.0)
_P_HI = np.nextafter(1.0, 0.0)

_ADAM_B1, _ADAM_B2, _ADAM_EPS = 0.9, 0.999, 1e-8


@dataclass(frozen=True)
class MlpConfig:
    hidden_layers: tuple = DEFAULT_TOPOLOGY
    max_epochs: int = 500
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    early_stop_patience: int = 20
    validation_fraction: float = 0.1

    def __post_init__(self):
        layers = tuple(int(w) for w in self.hidden_layers)
        object.__setattr__(self, "hidden_layers", layers)
        if not layers or min(layers) < 1:
            raise ValueError(f"hidden_layers must be non-empty positive widths, got {layers}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.max_epochs < 1 or self.batch_size < 1 or self.early_stop_patience < 1:
            raise ValueError("max_epochs, batch_size and early_stop_patience must be >= 1")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in [0, 1)")

    def n_parameters(self, input_width):
        widths = (input_width,) + self.hidden_layers + (1,)
        return sum((a + 1) * b for a, b in zip(widths[:-1], widths[1:]))

    def label(self):
        return "-".join(str(w) for w in self.hidden_layers)

    def to_dict(self):
        return {"hidden_layers": list(self.hidden_layers), "max_epochs": self.max_epochs,
                "batch_size": self.batch_size, "learning_rate": self.learning_rate, "seed": self.seed,
                "early_stop_patience": self.early_stop_patience,
                "validation_fraction": self.validation_fraction}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["hidden_layers"] = tuple(d["hidden_layers"])
        return cls(**d)


def parse_topology(text):
    """'6-12-32-12-6' -> (6, 12, 32, 12, 6)."""
    return tuple(int(t) for t in text.replace("x", "-").split("-") if t.strip())


@dataclass(frozen=True, eq=False)
class MlpModel:
    weights: tuple
    biases: tuple
    training_loss_trace: tuple = ()
    validation_loss_trace: tuple = ()
    best_epoch: int = 0

    def __post_init__(self):
        for w, b in zip(self.weights, self.biases):
            if w.shape[1] != b.shape[0]:
                raise ValueError("weight / bias shapes do not chain")
        for w0, w1 in zip(self.weights[:-1], self.weights[1:]):
            if w0.shape[1] != w1.shape[0]:
                raise ValueError("weight shapes do not chain")
        if self.weights[-1].shape[1] != 1:
            raise ValueError("output layer must have width 1")

    @property
    def input_width(self):
        return self.weights[0].shape[0]

    @property
    def hidden_layers(self):
        return tuple(w.shape[1] for w in self.weights[:-1])


def init_params(input_width, hidden_layers, rng):
    """Xavier-uniform weights, zero biases."""
    widths = (input_width,) + tuple(hidden_layers) + (1,)
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def _forward(weights, biases, X):
    """Returns output logits and the per-layer (pre-activation, activation) cache."""
    a = X
    cache = [(None, X)]
    for w, b in zip(weights[:-1], biases[:-1]):
        z = a @ w + b
        a = np.maximum(z, 0.0)
        cache.append((z, a))
    logit = (a @ weights[-1] + biases[-1])[:, 0]
    return logit, cache


def bce_from_logits(logit, y):
    return float(-np.mean(y * log_expit(logit) + (1.0 - y) * log_expit(-logit)))


def _backward(weights, logit, cache, y):
    n = y.shape[0]
    delta = ((expit(logit) - y) / n)[:, None]
    grads_w = [None] * len(weights)
    grads_b = [None] * len(weights)
    for layer in range(len(weights) - 1, -1, -1):
        a_prev = cache[layer][1]
        grads_w[layer] = a_prev.T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            z_prev = cache[layer][0]
            delta = (delta @ weights[layer].T) * (z_prev > 0)
    return grads_w, grads_b


def loss_and_gradients(weights, biases, X, y):
    """Mean cross-entropy and its gradients w.r.t. every weight and bias."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    logit, cache = _forward(weights, biases, X)
    gw, gb = _backward(weights, logit, cache, y)
    return bce_from_logits(logit, y), gw, gb


def _check_training_data(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"X shape {X.shape} incompatible with {y.shape[0]} labels")
    if X.shape[0] < 2 or y.min() == y.max():
        raise SingleClassTrainingError("meta-learner needs both classes")
    if not np.all(np.isfinite(X)):
        raise ValueError("meta-features contain non-finite values")
    return X, y


def _validation_split(y, fraction, seed):
    """Stratified validation slice; empty when a class would be left out."""
    if fraction <= 0:
        return np.arange(y.size), np.empty(0, dtype=np.int64)
    rng = np.random.default_rng(seed)
    val = []
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        n_val = int(round(fraction * idx.size))
        if n_val < 1 or idx.size - n_val < 1:
            return np.arange(y.size), np.empty(0, dtype=np.int64)
        val.append(rng.choice(idx, size=n_val, replace=False))
    val = np.sort(np.concatenate(val))
    train = np.setdiff1d(np.arange(y.size), val)
    return train, val


def mlp_fit(cfg, X, y):
    """Train a network with topology ``cfg.hidden_layers`` on meta-features ``X``.

    When the data is too small for a validation slice with both classes, the
    training loss drives early stopping instead.
    """
    X, y = _check_training_data(X, y)
    yf = y.astype(np.float64)
    rng = np.random.default_rng(derive_seed(cfg.seed, "mlp-init"))
    weights, biases = init_params(X.shape[1], cfg.hidden_layers, rng)
    tr, va = _validation_split(y, cfg.validation_fraction, derive_seed(cfg.seed, "mlp-val"))
    monitor = va if va.size else tr

    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    step = 0
    shuffle_rng = np.random.default_rng(derive_seed(cfg.seed, "mlp-shuffle"))

    def monitored_loss():
        logit, _ = _forward(weights, biases, X[monitor])
        return bce_from_logits(logit, yf[monitor])

    best = monitored_loss()
    best_params = ([w.copy() for w in weights], [b.copy() for b in biases])
    best_epoch = 0
    stale = 0
    train_trace, val_trace = [], []
    lr = cfg.learning_rate

    for epoch in range(1, cfg.max_epochs + 1):
        order = tr[shuffle_rng.permutation(tr.size)]
        for start in range(0, order.size, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            _, gw, gb = loss_and_gradients(weights, biases, X[batch], yf[batch])
            step += 1
            c1 = 1.0 - _ADAM_B1 ** step
            c2 = 1.0 - _ADAM_B2 ** step
            for params, grads, m, v in ((weights, gw, m_w, v_w), (biases, gb, m_b, v_b)):
                for i, g in enumerate(grads):
                    m[i] = _ADAM_B1 * m[i] + (1.0 - _ADAM_B1) * g
                    v[i] = _ADAM_B2 * v[i] + (1.0 - _ADAM_B2) * g * g
                    params[i] = params[i] - lr * (m[i] / c1) / (np.sqrt(v[i] / c2) + _ADAM_EPS)

        logit, _ = _forward(weights, biases, X[tr])
        train_loss = bce_from_logits(logit, yf[tr])
        current = monitored_loss() if va.size else train_loss
        if not (np.isfinite(train_loss) and np.isfinite(current)):
            raise NonFiniteLossError(
                f"loss became non-finite at epoch {epoch} (lr={lr}, topology={cfg.hidden_layers})")
        train_trace.append(train_loss)
        if va.size:
            val_trace.append(current)
        if current < best:
            best = current
            best_params = ([w.copy() for w in weights], [b.copy() for b in biases])
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= cfg.early_stop_patience:
                break

    return _freeze(best_params[0], best_params[1], train_trace, val_trace, best_epoch)


def _freeze(weights, biases, train_trace=(), val_trace=(), best_epoch=0):
    ws, bs = [], []
    for w, b in zip(weights, biases):
        w = np.array(w, dtype=np.float64)
        b = np.array(b, dtype=np.float64)
        w.flags.writeable = False
        b.flags.writeable = False
        ws.append(w)
        bs.append(b)
    return MlpModel(tuple(ws), tuple(bs), tuple(train_trace), tuple(val_trace), best_epoch)


def model_from_params(weights, biases):
    return _freeze(weights, biases)


def mlp_decision(m, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != m.input_width:
        raise DimensionMismatchError(f"meta-learner expects {m.input_width} columns, got shape {X.shape}")
    if X.shape[0] == 0:
        return np.empty(0)
    return _forward(m.weights, m.biases, X)[0]


def mlp_predict(m, X):
    """P(phishing) in the open interval (0, 1)."""
    return np.clip(expit(mlp_decision(m, X)), _P_LO, _P_HI)


def mlp_grid_scores(candidates, X, y, k, seed):
    """Mean stratified k-fold accuracy of each candidate config (same folds for all)."""
    X, y = _check_training_data(X, y)
    plan = stratified_assignment(y, k, derive_seed(seed, "mlp-grid"))
    means = []
    for cfg in candidates:
        accs = []
        for f in range(k):
            tr, te = plan.train_indices(f), plan.test_indices(f)
            model = mlp_fit(cfg, X[tr], y[tr])
            accs.append(np.mean((mlp_predict(model, X[te]) > 0.5) == (y[te] == 1)))
        means.append(float(np.mean(accs)))
    return means


def mlp_grid_search(candidates, X, y, k, seed):
    """Best config by mean CV accuracy; ties go to fewer parameters, then list order."""
    candidates = list(candidates)
    if not candidates:
        raise ValueError("no candidate configs")
    if len(candidates) == 1:
        return candidates[0]
    means = mlp_grid_scores(candidates, X, y, k, seed)
    return candidates[select_best(means, [c.n_parameters(np.shape(X)[1]) for c in candidates])]


def select_best(means, sizes, tol=1e-12):
    top = max(means)
    tied = [i for i, m in enumerate(means) if top - m <= tol]
    return min(tied, key=lambda i: (sizes[i], i))


def gradient_check(cfg, X_small, y_small, h=1e-5, seed=None):
    """Max relative error between backprop and central finite differences.

    Parameters are drawn at a random point (Xavier weights, small random
    biases so ReLU units sit away from their kink). The relative error uses
    ``max(|a|, |n|, 1e-6)`` as denominator so exactly-zero gradients compare
    on an absolute scale.
    """
    X = np.asarray(X_small, dtype=np.float64)
    y = np.asarray(y_small, dtype=np.float64).ravel()
    rng = np.random.default_rng(derive_seed(cfg.seed if seed is None else seed, "gradcheck"))
    weights, biases = init_params(X.shape[1], cfg.hidden_layers, rng)
    biases = [rng.normal(0.0, 0.1, size=b.shape) for b in biases]
    _, gw, gb = loss_and_gradients(weights, biases, X, y)

    worst = 0.0
    for params, grads in ((weights, gw), (biases, gb)):
        for p, g in zip(params, grads):
            flat = p.reshape(-1)
            gflat = g.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                lp = bce_from_logits(_forward(weights, biases, X)[0], y)
                flat[i] = orig - h
                lm = bce_from_logits(_forward(weights, biases, X)[0], y)
                flat[i] = orig
                num = (lp - lm) / (2.0 * h)
                den = max(abs(gflat[i]), abs(num), 1e-6)
                worst = max(worst, abs(gflat[i] - num) / den)
    return worst
