"""Dense MLP regression in plain numpy: init, backprop, Adam, training loop.

The surrogate maps scaled mode amplitudes to scaled pattern samples.
Hidden layers choose among relu, prelu (one learned slope per layer),
sigmoid and tanh; the output layer is always linear.  The training
metric is plain MSE over all outputs; the L2 penalty on weight matrices
(never biases or slopes) shapes gradients only.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("relu", "prelu", "sigmoid", "tanh")
NODE_CHOICES = (64, 128, 256, 512, 1024, 2048)
BATCH_CHOICES = (32, 64, 128, 256, 512, 1024)
EPOCH_MIN = 80
EPOCH_MAX = 200
MAX_LAYERS = 6

PRELU_INIT_SLOPE = 0.25

MODEL_TAG = "wcris-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class Architecture:
    """A search-space point: training budget plus hidden-layer stack."""

    epochs: int
    batch_size: int
    layers: tuple  # ((nodes, activation), ...)

    def __post_init__(self):
        if not EPOCH_MIN <= self.epochs <= EPOCH_MAX:
            raise ValueError(f"epochs {self.epochs} outside [{EPOCH_MIN}, {EPOCH_MAX}]")
        if self.batch_size not in BATCH_CHOICES:
            raise ValueError(f"batch size {self.batch_size} not in {BATCH_CHOICES}")
        if not 1 <= len(self.layers) <= MAX_LAYERS:
            raise ValueError(f"{len(self.layers)} hidden layers outside [1, {MAX_LAYERS}]")
        for nodes, act in self.layers:
            if nodes not in NODE_CHOICES:
                raise ValueError(f"layer width {nodes} not in {NODE_CHOICES}")
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")

    @property
    def depth(self):
        return len(self.layers)

    def to_dict(self):
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "layers": [[n, a] for n, a in self.layers],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            epochs=int(d["epochs"]),
            batch_size=int(d["batch_size"]),
            layers=tuple((int(n), str(a)) for n, a in d["layers"]),
        )


def save_architecture(arch, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(arch.to_dict(), fh, indent=2)
        fh.write("\n")


def load_architecture(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return Architecture.from_dict(json.load(fh))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError(f"{path}: not an architecture file: {exc}") from exc


class Mlp:
    """Weights, biases and per-layer prelu slopes, with forward/backward."""

    def __init__(self, weights, biases, slopes, acts):
        self.weights = weights      # list of (fan_in, fan_out) float64
        self.biases = biases        # list of (fan_out,) float64
        self.slopes = slopes        # per hidden layer: 0-d array or None
        self.acts = tuple(acts)     # per hidden layer

    @property
    def n_in(self):
        return self.weights[0].shape[0]

    @property
    def n_out(self):
        return self.weights[-1].shape[1]

    def parameters(self):
        """Flat parameter list in a fixed order (weights, bias, slope per layer)."""
        params = []
        for i, w in enumerate(self.weights):
            params.append(w)
            params.append(self.biases[i])
            if i < len(self.acts) and self.slopes[i] is not None:
                params.append(self.slopes[i])
        return params

    def forward(self, x):
        """Network output; a single sample comes back as a 1-D vector."""
        x = np.asarray(x, dtype=np.float64)
        if not np.isfinite(x).all():
            raise ValueError("non-finite network input")
        single = x.ndim == 1
        a = np.atleast_2d(x)
        if a.shape[1] != self.n_in:
            raise ValueError(f"expected {self.n_in} inputs, got {a.shape[1]}")
        for i, act in enumerate(self.acts):
            a = _activate(a @ self.weights[i] + self.biases[i], act, self.slopes[i])
        out = a @ self.weights[-1] + self.biases[-1]
        return out[0] if single else out


def _activate(z, act, slope):
    if act == "relu":
        return np.maximum(z, 0.0)
    if act == "prelu":
        return np.where(z > 0.0, z, float(slope) * z)
    if act == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    if act == "tanh":
        return np.tanh(z)
    raise ValueError(f"unknown activation {act!r}")


def init_mlp(n_in, n_out, layers, seed):
    """Seeded uniform fan-scaled init.

    relu/prelu layers use the He limit sqrt(6 / fan_in); sigmoid, tanh
    and the linear output use the Glorot limit sqrt(6 / (fan_in +
    fan_out)).  Biases start at zero, prelu slopes at 0.25.
    """
    rng = np.random.default_rng(seed)
    weights, biases, slopes, acts = [], [], [], []
    fan_in = n_in
    for nodes, act in layers:
        if act not in ACTIVATIONS:
            raise ValueError(f"unknown activation {act!r}")
        if act in ("relu", "prelu"):
            lim = math.sqrt(6.0 / fan_in)
        else:
            lim = math.sqrt(6.0 / (fan_in + nodes))
        weights.append(rng.uniform(-lim, lim, (fan_in, nodes)))
        biases.append(np.zeros(nodes))
        slopes.append(np.array(PRELU_INIT_SLOPE) if act == "prelu" else None)
        acts.append(act)
        fan_in = nodes
    lim = math.sqrt(6.0 / (fan_in + n_out))
    weights.append(rng.uniform(-lim, lim, (fan_in, n_out)))
    biases.append(np.zeros(n_out))
    return Mlp(weights, biases, slopes, acts)


def loss(mlp, x, y, l2=0.0):
    """MSE over every output plus l2 * sum of squared weights."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    err = mlp.forward(x) - y
    value = float(np.mean(err * err))
    if l2:
        value += l2 * sum(float(np.sum(w * w)) for w in mlp.weights)
    return value


def grad(mlp, x, y, l2=0.0):
    """Loss and its gradient in the parameters() order."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    batch, _ = x.shape

    # forward with caches
    pre = []
    activations = [x]
    a = x
    for i, act in enumerate(mlp.acts):
        z = a @ mlp.weights[i] + mlp.biases[i]
        pre.append(z)
        a = _activate(z, act, mlp.slopes[i])
        activations.append(a)
    out = a @ mlp.weights[-1] + mlp.biases[-1]

    err = out - y
    total = float(np.mean(err * err))
    if l2:
        total += l2 * sum(float(np.sum(w * w)) for w in mlp.weights)

    # backward
    n_hidden = len(mlp.acts)
    g_w = [None] * len(mlp.weights)
    g_b = [None] * len(mlp.biases)
    g_s = [None] * n_hidden

    delta = 2.0 * err / err.size
    g_w[-1] = activations[-1].T @ delta + 2.0 * l2 * mlp.weights[-1]
    g_b[-1] = delta.sum(axis=0)
    delta = delta @ mlp.weights[-1].T

    for i in range(n_hidden - 1, -1, -1):
        z = pre[i]
        act = mlp.acts[i]
        if act == "relu":
            dz = delta * (z > 0.0)
        elif act == "prelu":
            s = float(mlp.slopes[i])
            dz = delta * np.where(z > 0.0, 1.0, s)
            g_s[i] = np.array(np.sum(delta * np.where(z > 0.0, 0.0, z)))
        elif act == "sigmoid":
            s = activations[i + 1]
            dz = delta * s * (1.0 - s)
        else:  # tanh
            dz = delta * (1.0 - activations[i + 1] ** 2)
        g_w[i] = activations[i].T @ dz + 2.0 * l2 * mlp.weights[i]
        g_b[i] = dz.sum(axis=0)
        if i:
            delta = dz @ mlp.weights[i].T

    grads = []
    for i in range(len(mlp.weights)):
        grads.append(g_w[i])
        grads.append(g_b[i])
        if i < n_hidden and mlp.slopes[i] is not None:
            grads.append(g_s[i])
    return total, grads


@dataclass
class AdamState:
    step: int
    m: list
    v: list

    @classmethod
    def for_params(cls, params):
        return cls(
            step=0,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
        )

    def save(self, path):
        arrays = {"step": np.array(self.step)}
        for i, (m, v) in enumerate(zip(self.m, self.v)):
            arrays[f"m_{i}"] = m
            arrays[f"v_{i}"] = v
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path):
        with np.load(path) as data:
            n = (len(data.files) - 1) // 2
            return cls(
                step=int(data["step"]),
                m=[data[f"m_{i}"].copy() for i in range(n)],
                v=[data[f"v_{i}"].copy() for i in range(n)],
            )


def adam_step(params, grads, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One in-place Adam update with bias correction."""
    state.step += 1
    t = state.step
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


@dataclass
class TrainConfig:
    l2: float = 5e-7
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    plateau_patience: int = 20   # halve the LR after this many stale epochs
    stop_patience: int = 30      # give up after this many stale epochs
    min_improvement: float = 1e-6
    val_fraction: float = 0.1
    seed: int = 0
    max_epochs: int | None = None  # cap on top of the architecture's budget


@dataclass
class TrainReport:
    train_mse: list = field(default_factory=list)
    val_mse: list = field(default_factory=list)
    lr_events: list = field(default_factory=list)  # (epoch, new_lr)
    best_epoch: int = -1
    best_val: float = math.inf
    epochs_run: int = 0
    final_lr: float = 0.0
    diverged: bool = False

    def to_dict(self):
        return {
            "train_mse": self.train_mse,
            "val_mse": self.val_mse,
            "lr_events": self.lr_events,
            "best_epoch": self.best_epoch,
            "best_val": self.best_val,
            "epochs_run": self.epochs_run,
            "final_lr": self.final_lr,
            "diverged": self.diverged,
        }


def _mse(mlp, x, y):
    err = mlp.forward(x) - y
    return float(np.mean(err * err))


def train(mlp, x, y, epochs, batch_size, cfg=None, progress=None):
    """Mini-batch Adam with plateau LR halving and early stopping.

    The last val_fraction of the samples, in stored order, is the
    validation split.  An epoch "improves" when its validation MSE
    beats the running best by at least min_improvement; after
    plateau_patience stale epochs the LR halves, after stop_patience
    the loop stops.  The model is left at the best-validation epoch.
    """
    cfg = cfg or TrainConfig()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[0] != y.shape[0] or x.shape[0] < 2:
        raise ValueError("need at least 2 aligned samples")
    n_val = max(1, int(x.shape[0] * cfg.val_fraction))
    n_train = x.shape[0] - n_val
    if n_train < 1:
        raise ValueError("validation split leaves no training data")
    x_tr, y_tr = x[:n_train], y[:n_train]
    x_va, y_va = x[n_train:], y[n_train:]

    rng = np.random.default_rng(cfg.seed)
    params = mlp.parameters()
    state = AdamState.for_params(params)
    lr = cfg.lr
    report = TrainReport()
    best_params = [p.copy() for p in params]
    stale = 0
    if cfg.max_epochs is not None:
        epochs = min(epochs, cfg.max_epochs)

    for epoch in range(epochs):
        order = rng.permutation(n_train)
        for lo in range(0, n_train, batch_size):
            idx = order[lo : lo + batch_size]
            _, grads = grad(mlp, x_tr[idx], y_tr[idx], cfg.l2)
            adam_step(params, grads, state, lr, cfg.beta1, cfg.beta2, cfg.eps)

        tr = _mse(mlp, x_tr, y_tr)
        va = _mse(mlp, x_va, y_va)
        report.train_mse.append(tr)
        report.val_mse.append(va)
        report.epochs_run = epoch + 1

        if not (math.isfinite(tr) and math.isfinite(va)):
            report.diverged = True
            break

        if va < report.best_val - cfg.min_improvement:
            stale = 0
        else:
            stale += 1
        if va < report.best_val:
            report.best_val = va
            report.best_epoch = epoch
            best_params = [p.copy() for p in params]

        if progress is not None:
            progress(epoch, tr, va, lr)

        if stale >= cfg.stop_patience:
            break
        if stale and stale % cfg.plateau_patience == 0:
            lr *= 0.5
            report.lr_events.append((epoch, lr))

    for p, bp in zip(params, best_params):
        p[...] = bp
    report.final_lr = lr
    return report


def save_model(mlp, path, scaling, fingerprint, arch=None):
    """Lossless .npz snapshot: parameters, scaling spec, physics fingerprint."""
    meta = {
        "tag": MODEL_TAG,
        "version": MODEL_VERSION,
        "acts": list(mlp.acts),
        "n_in": mlp.n_in,
        "n_out": mlp.n_out,
        "w_hi": scaling.w_hi,
        "p_min": scaling.p_min,
        "p_max": scaling.p_max,
        "fingerprint": fingerprint,
        "arch": arch.to_dict() if arch is not None else None,
    }
    arrays = {"meta": np.array(json.dumps(meta))}
    for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    for i, s in enumerate(mlp.slopes):
        if s is not None:
            arrays[f"s{i}"] = s
    # A file handle keeps np.savez from appending .npz to the chosen name.
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_model(path):
    """Returns (mlp, scaling, fingerprint, arch-or-None)."""
    from .dataset import ScalingSpec

    try:
        with np.load(path, allow_pickle=False) as blob:
            meta = json.loads(str(blob["meta"]))
            if meta.get("tag") != MODEL_TAG or meta.get("version") != MODEL_VERSION:
                raise ValueError("wrong tag")
            acts = meta["acts"]
            n_layers = len(acts) + 1
            weights = [blob[f"w{i}"].astype(np.float64) for i in range(n_layers)]
            biases = [blob[f"b{i}"].astype(np.float64) for i in range(n_layers)]
            slopes = [
                blob[f"s{i}"].astype(np.float64) if f"s{i}" in blob else None
                for i in range(len(acts))
            ]
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: not a loadable {MODEL_TAG} file: {exc}") from exc

    mlp = Mlp(weights, biases, slopes, acts)
    scaling = ScalingSpec(w_hi=meta["w_hi"], p_min=meta["p_min"], p_max=meta["p_max"])
    arch = Architecture.from_dict(meta["arch"]) if meta.get("arch") else None
    return mlp, scaling, meta["fingerprint"], arch
