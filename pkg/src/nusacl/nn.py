"""Minimal differentiable model: linear layers with optional adapters,
ReLU, softmax cross-entropy, and SGD with linear warmup + cosine decay.

Convention: activations are column batches, so a layer computes
(W + delta_w) x + b with x of shape (in_dim, batch).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace

import numpy as np

from . import adapter as adapter_mod
from .errors import DataError, ShapeError
from .linalg import check_matrix, load_matrix, save_matrix

ACTIVATIONS = ("relu", "none")


@dataclass
class Layer:
    w: np.ndarray  # out x in
    b: np.ndarray  # out
    activation: str = "none"
    adapter: adapter_mod.Adapter | None = None

    def effective_weight(self) -> np.ndarray:
        if self.adapter is None:
            return self.w
        return self.w + adapter_mod.delta_w(self.adapter)


@dataclass
class Model:
    layers: list[Layer]
    classes: int

    def copy(self) -> "Model":
        return Model(
            layers=[
                Layer(
                    w=l.w.copy(),
                    b=l.b.copy(),
                    activation=l.activation,
                    adapter=l.adapter,
                )
                for l in self.layers
            ],
            classes=self.classes,
        )


def structured_weight(
    out_dim: int, in_dim: int, rng: np.random.Generator, r95_frac: float = 0.30,
    gain: float = 1.0,
) -> np.ndarray:
    """Weight with a geometrically decaying spectrum.

    The decay rate is set so roughly r95_frac * d leading directions hold
    95% of the spectral energy, leaving a broad low-energy tail the way
    heavily trained networks do.  Random orthogonal factors keep the
    directions generic.
    """
    d = min(out_dim, in_dim)
    k_target = max(2.0, r95_frac * d)
    gamma = math.exp(math.log(0.05) / (2.0 * k_target))
    sigma = gain * gamma ** np.arange(d)
    qu, ru = np.linalg.qr(rng.standard_normal((out_dim, d)))
    qv, rv = np.linalg.qr(rng.standard_normal((in_dim, d)))
    qu = qu * np.sign(np.diag(ru))
    qv = qv * np.sign(np.diag(rv))
    return (qu * sigma) @ qv.T


def init_model(
    input_dim: int,
    hidden_dims: list[int],
    classes: int,
    seed: int,
    r95_frac: float = 0.30,
    gain: float = 1.0,
) -> Model:
    rng = np.random.default_rng(seed)
    dims = [input_dim, *hidden_dims, classes]
    layers = []
    for i in range(len(dims) - 1):
        last = i == len(dims) - 2
        layers.append(
            Layer(
                w=structured_weight(dims[i + 1], dims[i], rng, r95_frac, gain),
                b=np.zeros(dims[i + 1]),
                activation="none" if last else "relu",
            )
        )
    return Model(layers=layers, classes=classes)


def forward(model: Model, batch: np.ndarray):
    """Run the network; returns (logits, cache) with per-layer inputs and
    pre-activations for backprop."""
    check_matrix(batch, "batch")
    if batch.shape[0] != model.layers[0].w.shape[1]:
        raise ShapeError(
            f"batch rows {batch.shape[0]} != input dim {model.layers[0].w.shape[1]}"
        )
    x = batch
    inputs, preacts = [], []
    for layer in model.layers:
        inputs.append(x)
        z = layer.effective_weight() @ x + layer.b[:, None]
        preacts.append(z)
        x = np.maximum(z, 0.0) if layer.activation == "relu" else z
    return x, {"inputs": inputs, "preacts": preacts}


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=0, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=0, keepdims=True))


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and dL/dlogits for integer class labels."""
    classes, batch = logits.shape
    labels = np.asarray(labels)
    if labels.shape != (batch,):
        raise ShapeError(f"labels shape {labels.shape} != batch ({batch},)")
    if labels.min() < 0 or labels.max() >= classes:
        raise DataError(f"labels out of range [0, {classes})")
    logp = _log_softmax(logits)
    loss = -float(np.mean(logp[labels, np.arange(batch)]))
    grad = np.exp(logp)
    grad[labels, np.arange(batch)] -= 1.0
    return loss, grad / batch


def loss_and_grads(
    model: Model, batch: np.ndarray, labels: np.ndarray, train_base: bool = False
):
    """Softmax cross-entropy loss and gradients.

    By default only adapter parameters receive gradients (base weights and
    biases stay frozen during adaptation); train_base=True additionally
    returns w/b gradients, used for standalone probes.
    """
    logits, cache = forward(model, batch)
    loss, delta = softmax_cross_entropy(logits, labels)
    grads: list[dict[str, np.ndarray]] = [None] * len(model.layers)
    for i in reversed(range(len(model.layers))):
        layer = model.layers[i]
        layer_grads = {}
        dw_full = delta @ cache["inputs"][i].T
        if layer.adapter is not None:
            layer_grads.update(adapter_mod.grad_core(layer.adapter, dw_full))
        if train_base:
            layer_grads["w"] = dw_full
            layer_grads["b"] = delta.sum(axis=1)
        grads[i] = layer_grads
        if i > 0:
            delta = layer.effective_weight().T @ delta
            if model.layers[i - 1].activation == "relu":
                delta = delta * (cache["preacts"][i - 1] > 0.0)
    return loss, grads


@dataclass(frozen=True)
class OptimizerState:
    learning_rate: float
    warmup_fraction: float = 0.0
    schedule: str = "cosine"
    step: int = 0
    total_steps: int = 1

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.warmup_fraction <= 0.5:
            raise ValueError("warmup_fraction must lie in [0, 0.5]")
        if self.schedule not in ("cosine", "constant"):
            raise ValueError(f"unknown schedule {self.schedule!r}")

    def current_lr(self) -> float:
        warmup_steps = int(round(self.warmup_fraction * self.total_steps))
        factor = min(self.step / warmup_steps, 1.0) if warmup_steps > 0 else 1.0
        if self.schedule == "cosine":
            progress = self.step / max(self.total_steps, 1)
            factor *= 0.5 * (1.0 + math.cos(math.pi * min(progress, 1.0)))
        return self.learning_rate * factor


def step(optimizer: OptimizerState, params: dict, grads: dict):
    """One SGD step p <- p - lr(step) * g; returns (new params, new state)."""
    lr = optimizer.current_lr()
    updated = {}
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            updated[name] = p
            continue
        if np.shape(g) != np.shape(p):
            raise ShapeError(f"gradient shape mismatch for {name!r}")
        updated[name] = p - lr * g
    return updated, replace(optimizer, step=optimizer.step + 1)


def base_weight_digests(model: Model) -> list[str]:
    """SHA-256 of each layer's base weight bytes (freeze verification)."""
    return [adapter_mod.matrix_digest(l.w) for l in model.layers]


# --- checkpointing --------------------------------------------------------

def save_model(directory, model: Model) -> None:
    os.makedirs(directory, exist_ok=True)
    manifest = {"classes": model.classes, "layers": []}
    for i, layer in enumerate(model.layers):
        save_matrix(os.path.join(directory, f"layer{i}.w.nusa"), layer.w)
        save_matrix(
            os.path.join(directory, f"layer{i}.b.nusa"), layer.b[:, None]
        )
        entry = {
            "activation": layer.activation,
            "shape": list(layer.w.shape),
            "adapter": None,
        }
        if layer.adapter is not None:
            adapter_mod.save_adapter(directory, f"layer{i}.adapter", layer.adapter)
            entry["adapter"] = f"layer{i}.adapter"
        manifest["layers"].append(entry)
    with open(os.path.join(directory, "model.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def load_model(directory) -> Model:
    with open(os.path.join(directory, "model.json")) as fh:
        manifest = json.load(fh)
    layers = []
    for i, entry in enumerate(manifest["layers"]):
        w = load_matrix(os.path.join(directory, f"layer{i}.w.nusa"))
        b = load_matrix(os.path.join(directory, f"layer{i}.b.nusa"))[:, 0]
        adapter = None
        if entry["adapter"] is not None:
            adapter = adapter_mod.load_adapter(directory, entry["adapter"])
        layers.append(
            Layer(w=w, b=b, activation=entry["activation"], adapter=adapter)
        )
    return Model(layers=layers, classes=manifest["classes"])
