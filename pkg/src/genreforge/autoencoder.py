"""Bottleneck autoencoder with hand-rolled backprop and Adadelta.

Architecture for input width n: n -> 60 (PReLU, dropout) -> 20 (PReLU,
dropout) -> 60 (PReLU) -> n (sigmoid). PReLU slopes are learned per
unit. Dropout uses inverted scaling so evaluation needs no rescale.
Training minimizes mean binary cross-entropy between input and
reconstruction, which expects inputs in [0, 1].
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    InputOutOfRangeError,
    StaleCacheError,
)

BCE_CLAMP = 1e-7
PRELU_INIT = 0.25


@dataclass(frozen=True)
class LayerSpec:
    """One dense layer: width, activation, dropout, and init family."""

    fan_in: int
    fan_out: int
    activation: str          # "prelu" or "sigmoid"
    dropout_p: float = 0.0
    init: str = "he_normal"  # "he_normal" or "he_uniform"


@dataclass(frozen=True)
class AutoencoderConfig:
    """Network and optimizer hyperparameters."""

    n_inputs: int
    hidden: int = 60
    bottleneck: int = 20
    dropout_p: float = 0.2
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1.0
    rho: float = 0.95
    eps: float = 1e-8
    seed: int = 0

    def layer_specs(self) -> tuple[LayerSpec, ...]:
        return (
            LayerSpec(self.n_inputs, self.hidden, "prelu", self.dropout_p,
                      "he_normal"),
            LayerSpec(self.hidden, self.bottleneck, "prelu", self.dropout_p,
                      "he_normal"),
            LayerSpec(self.bottleneck, self.hidden, "prelu", 0.0, "he_normal"),
            LayerSpec(self.hidden, self.n_inputs, "sigmoid", 0.0, "he_uniform"),
        )


@dataclass
class Autoencoder:
    """Trained parameters plus the loss trace."""

    config: AutoencoderConfig
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    slopes: list[np.ndarray | None]
    loss_history: list[float] = field(default_factory=list)
    n_steps: int = 0


def he_init(spec: LayerSpec, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """He-style weight init; biases start at zero.

    he_normal draws N(0, sqrt(2 / fan_in)); he_uniform draws
    U(-limit, limit) with limit = sqrt(6 / fan_in).
    """
    if spec.init == "he_normal":
        weights = rng.normal(0.0, np.sqrt(2.0 / spec.fan_in),
                             size=(spec.fan_in, spec.fan_out))
    elif spec.init == "he_uniform":
        limit = np.sqrt(6.0 / spec.fan_in)
        weights = rng.uniform(-limit, limit, size=(spec.fan_in, spec.fan_out))
    else:
        raise ValueError(f"unknown init {spec.init!r}")
    return weights, np.zeros(spec.fan_out)


def build_autoencoder(config: AutoencoderConfig,
                      rng: np.random.Generator | None = None) -> Autoencoder:
    """Freshly initialized network; PReLU slopes start at 0.25."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    weights, biases, slopes = [], [], []
    for spec in config.layer_specs():
        w, b = he_init(spec, rng)
        weights.append(w)
        biases.append(b)
        slopes.append(np.full(spec.fan_out, PRELU_INIT)
                      if spec.activation == "prelu" else None)
    return Autoencoder(config=config, weights=weights, biases=biases,
                       slopes=slopes)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(model: Autoencoder, x: np.ndarray, mode: str = "eval",
            rng: np.random.Generator | None = None) -> tuple[np.ndarray, dict]:
    """Run the network; returns (reconstruction, cache).

    ``x`` is one vector or a batch (rows are samples). In train mode
    each dropout layer samples an inverted-dropout mask from ``rng``;
    eval mode applies no dropout. The cache holds everything backward()
    needs.
    """
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    batch = x[None, :] if squeeze else x
    if batch.ndim != 2 or batch.shape[1] != model.config.n_inputs:
        raise DimensionMismatchError(
            f"input width {batch.shape[-1]} != {model.config.n_inputs}")
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "train" and rng is None:
        rng = np.random.default_rng(model.config.seed)

    specs = model.config.layer_specs()
    inputs = [batch]          # input to each layer (after previous dropout)
    pre_acts = []             # z = a_prev @ W + b
    activated = []            # activation(z), before dropout
    masks: list[np.ndarray | None] = []
    a = batch
    for i, spec in enumerate(specs):
        z = a @ model.weights[i] + model.biases[i]
        pre_acts.append(z)
        if spec.activation == "prelu":
            h = np.where(z > 0.0, z, model.slopes[i] * z)
        else:
            h = _sigmoid(z)
        activated.append(h)
        if mode == "train" and spec.dropout_p > 0.0:
            keep = rng.random(h.shape) >= spec.dropout_p
            mask = keep / (1.0 - spec.dropout_p)
        else:
            mask = None
        masks.append(mask)
        a = h if mask is None else h * mask
        if i < len(specs) - 1:
            inputs.append(a)
    cache = {"x": batch, "mode": mode, "inputs": inputs, "pre_acts": pre_acts,
             "activated": activated, "masks": masks, "output": a}
    return (a[0] if squeeze else a), cache


def encode(model: Autoencoder, x: np.ndarray) -> np.ndarray:
    """Bottleneck code of one vector or batch (eval mode, no dropout)."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    batch = x[None, :] if squeeze else x
    if batch.shape[1] != model.config.n_inputs:
        raise DimensionMismatchError(
            f"input width {batch.shape[-1]} != {model.config.n_inputs}")
    a = batch
    for i in range(2):
        z = a @ model.weights[i] + model.biases[i]
        a = np.where(z > 0.0, z, model.slopes[i] * z)
    return a[0] if squeeze else a


def bce_loss(x: np.ndarray, reconstruction: np.ndarray) -> float:
    """Mean binary cross-entropy (natural log) over batch and components.

    Reconstructions are clamped to [1e-7, 1 - 1e-7] before the logs.
    """
    x = np.asarray(x, dtype=np.float64)
    r = np.clip(np.asarray(reconstruction, dtype=np.float64),
                BCE_CLAMP, 1.0 - BCE_CLAMP)
    if x.shape != r.shape:
        raise DimensionMismatchError(f"{x.shape} against {r.shape}")
    return float(np.mean(-(x * np.log(r) + (1.0 - x) * np.log1p(-r))))


def backward(model: Autoencoder, cache: dict, x: np.ndarray) -> dict:
    """Gradients of the mean BCE loss w.r.t. every parameter.

    Requires the cache of a train-mode forward pass on the same ``x``.
    Returns {"weights": [...], "biases": [...], "slopes": [...]} with
    None entries where a layer has no slopes.
    """
    x = np.asarray(x, dtype=np.float64)
    batch = x[None, :] if x.ndim == 1 else x
    if cache.get("mode") != "train":
        raise StaleCacheError("backward needs a train-mode forward cache")
    if cache["x"].shape != batch.shape or not np.array_equal(cache["x"], batch):
        raise StaleCacheError("cache was computed for a different input")

    specs = model.config.layer_specs()
    n_batch, n_out = batch.shape
    scale = 1.0 / (n_batch * n_out)
    output = cache["output"]
    clamped = np.clip(output, BCE_CLAMP, 1.0 - BCE_CLAMP)
    # d(mean BCE)/d(output), with sigmoid' folded in below
    d_act = scale * (clamped - batch) / (clamped * (1.0 - clamped))
    in_clamp = (output > BCE_CLAMP) & (output < 1.0 - BCE_CLAMP)
    d_act = np.where(in_clamp, d_act, 0.0)

    grad_w: list[np.ndarray] = [np.empty(0)] * len(specs)
    grad_b: list[np.ndarray] = [np.empty(0)] * len(specs)
    grad_s: list[np.ndarray | None] = [None] * len(specs)
    for i in range(len(specs) - 1, -1, -1):
        spec = specs[i]
        z = cache["pre_acts"][i]
        mask = cache["masks"][i]
        if mask is not None:
            d_act = d_act * mask
        if spec.activation == "sigmoid":
            sig = cache["activated"][i]
            d_z = d_act * sig * (1.0 - sig)
        else:
            positive = z > 0.0
            d_z = np.where(positive, d_act, d_act * model.slopes[i])
            grad_s[i] = np.where(positive, 0.0, d_act * z).sum(axis=0)
        grad_w[i] = cache["inputs"][i].T @ d_z
        grad_b[i] = d_z.sum(axis=0)
        if i > 0:
            d_act = d_z @ model.weights[i].T
    return {"weights": grad_w, "biases": grad_b, "slopes": grad_s}


class Adadelta:
    """Adadelta state over a flat list of parameter arrays.

    Keeps running averages of squared gradients and squared updates:
    Eg2 <- rho Eg2 + (1-rho) g^2; dx = -sqrt(Edx2+eps)/sqrt(Eg2+eps) * g;
    Edx2 <- rho Edx2 + (1-rho) dx^2; param += lr * dx.
    """

    def __init__(self, params: list[np.ndarray], learning_rate: float = 1.0,
                 rho: float = 0.95, eps: float = 1e-8) -> None:
        self.learning_rate = learning_rate
        self.rho = rho
        self.eps = eps
        self.sq_grad = [np.zeros_like(p) for p in params]
        self.sq_update = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        """Update every parameter array in place."""
        for i, (p, g) in enumerate(zip(params, grads)):
            self.sq_grad[i] = self.rho * self.sq_grad[i] + (1.0 - self.rho) * g * g
            update = -np.sqrt(self.sq_update[i] + self.eps) \
                / np.sqrt(self.sq_grad[i] + self.eps) * g
            self.sq_update[i] = self.rho * self.sq_update[i] \
                + (1.0 - self.rho) * update * update
            p += self.learning_rate * update


def _flat_params(model: Autoencoder) -> list[np.ndarray]:
    params: list[np.ndarray] = []
    for i in range(len(model.weights)):
        params.append(model.weights[i])
        params.append(model.biases[i])
        if model.slopes[i] is not None:
            params.append(model.slopes[i])
    return params


def _flat_grads(model: Autoencoder, grads: dict) -> list[np.ndarray]:
    flat: list[np.ndarray] = []
    for i in range(len(model.weights)):
        flat.append(grads["weights"][i])
        flat.append(grads["biases"][i])
        if model.slopes[i] is not None:
            flat.append(grads["slopes"][i])
    return flat


def train(X: np.ndarray, config: AutoencoderConfig) -> Autoencoder:
    """Train on row vectors in [0, 1]; returns the fitted network.

    Each epoch shuffles the rows, walks them in batches of
    ``batch_size`` (last batch may be short), and records the epoch's
    mean per-sample loss in ``loss_history``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != config.n_inputs:
        raise DimensionMismatchError(
            f"data {X.shape} against input width {config.n_inputs}")
    if X.size and (X.min() < 0.0 or X.max() > 1.0):
        raise InputOutOfRangeError("training inputs must lie in [0, 1]")
    rng = np.random.default_rng(config.seed)
    model = build_autoencoder(config, rng)
    params = _flat_params(model)
    optimizer = Adadelta(params, config.learning_rate, config.rho, config.eps)
    n = X.shape[0]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = X[order[start:start + config.batch_size]]
            reconstruction, cache = forward(model, batch, mode="train", rng=rng)
            epoch_loss += bce_loss(batch, reconstruction) * batch.shape[0]
            grads = backward(model, cache, batch)
            optimizer.step(params, _flat_grads(model, grads))
            model.n_steps += 1
        model.loss_history.append(epoch_loss / n)
    return model


def save_autoencoder(model: Autoencoder, path: str | Path) -> None:
    """Persist parameters, config, and loss history to an .npz file."""
    arrays: dict[str, np.ndarray] = {
        "config_json": np.frombuffer(
            json.dumps(asdict(model.config)).encode(), dtype=np.uint8),
        "loss_history": np.array(model.loss_history, dtype=np.float64),
        "n_steps": np.array([model.n_steps], dtype=np.int64),
    }
    for i in range(len(model.weights)):
        arrays[f"w{i}"] = model.weights[i]
        arrays[f"b{i}"] = model.biases[i]
        if model.slopes[i] is not None:
            arrays[f"s{i}"] = model.slopes[i]
    with open(path, "wb") as handle:
        np.savez(handle, **arrays)


def load_autoencoder(path: str | Path) -> Autoencoder:
    """Inverse of save_autoencoder; round-trips parameters bit for bit."""
    with np.load(path) as data:
        config = AutoencoderConfig(**json.loads(bytes(data["config_json"]).decode()))
        n_layers = len(config.layer_specs())
        weights = [data[f"w{i}"] for i in range(n_layers)]
        biases = [data[f"b{i}"] for i in range(n_layers)]
        slopes = [data[f"s{i}"] if f"s{i}" in data else None
                  for i in range(n_layers)]
        history = [float(v) for v in data["loss_history"]]
        n_steps = int(data["n_steps"][0])
    return Autoencoder(config=config, weights=weights, biases=biases,
                       slopes=slopes, loss_history=history, n_steps=n_steps)
