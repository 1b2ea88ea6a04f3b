"""Small dense-network toolkit with hand-written gradients, all in float64.

Networks here are tiny (at most 64 units per layer), so everything is plain numpy and
every backward pass is checked against central finite differences in the tests.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ContractViolation

__all__ = [
    "DenseLayer", "init_dense", "mlp_forward", "mlp_backward", "MLPCache",
    "AdamState", "adam_step", "bce_loss", "bce_logits", "mse_loss",
    "GradCheckReport", "finite_diff_check", "relative_error",
    "save_params", "load_params", "glorot",
]

ACTIVATIONS = ("relu", "sigmoid", "linear")


def glorot(rng: np.random.Generator, n_out: int, n_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, size=(n_out, n_in))


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray     # (out,)
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ContractViolation(f"inconsistent layer shapes {self.weights.shape} / {self.bias.shape}")

    @property
    def params(self) -> list[np.ndarray]:
        return [self.weights, self.bias]


def init_dense(rng: np.random.Generator, n_in: int, n_out: int, activation: str = "relu") -> DenseLayer:
    return DenseLayer(glorot(rng, n_out, n_in), np.zeros(n_out), activation)


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    return z


def _act_grad(name: str, z: np.ndarray, a: np.ndarray, g: np.ndarray) -> np.ndarray:
    if name == "relu":
        return g * (z > 0)
    if name == "sigmoid":
        return g * a * (1.0 - a)
    return g


@dataclass
class MLPCache:
    layer_ids: tuple
    inputs: list = field(default_factory=list)  # input to each layer
    pre: list = field(default_factory=list)     # pre-activation of each layer
    post: list = field(default_factory=list)


def mlp_forward(layers: Sequence[DenseLayer], x: np.ndarray) -> tuple[np.ndarray, MLPCache]:
    """Apply the layers to a vector ``(in,)`` or a batch of row vectors ``(B, in)``."""
    cache = MLPCache(tuple(id(l.weights) for l in layers))
    h = np.asarray(x, dtype=np.float64)
    for layer in layers:
        if h.shape[-1] != layer.weights.shape[1]:
            raise ContractViolation(f"input width {h.shape[-1]} != layer fan-in {layer.weights.shape[1]}")
        z = h @ layer.weights.T + layer.bias
        a = _act(layer.activation, z)
        cache.inputs.append(h)
        cache.pre.append(z)
        cache.post.append(a)
        h = a
    return h, cache


def mlp_backward(layers: Sequence[DenseLayer], cache: MLPCache, output_grad: np.ndarray,
                 preactivation: bool = False):
    """Return ``([(dW, db), ...], d_input)`` for an upstream gradient on the output.

    With ``preactivation=True`` the gradient is taken to be on the last layer's
    pre-activation (used with ``bce_logits`` to skip the sigmoid derivative).
    """
    if cache.layer_ids != tuple(id(l.weights) for l in layers) or len(cache.pre) != len(layers):
        raise ContractViolation("cache does not belong to these layers")
    g = np.asarray(output_grad, dtype=np.float64)
    grads = [None] * len(layers)
    for i in reversed(range(len(layers))):
        layer = layers[i]
        if preactivation and i == len(layers) - 1:
            gz = g
        else:
            gz = _act_grad(layer.activation, cache.pre[i], cache.post[i], g)
        x = cache.inputs[i]
        if gz.ndim == 1:
            grads[i] = (np.outer(gz, x), gz.copy())
        else:
            grads[i] = (gz.T @ x, gz.sum(axis=0))
        g = gz @ layer.weights
    return grads, g


# ---- optimiser -----------------------------------------------------------------

@dataclass
class AdamState:
    first_moment: list
    second_moment: list
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], lr: float = 1e-3, **hyper) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], lr, **hyper)


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState):
    """Bias-corrected Adam update applied in place; returns ``(params, state)``."""
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ContractViolation("params, grads and optimiser state differ in length")
    state.step_count += 1
    t = state.step_count
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if p.shape != g.shape:
            raise ContractViolation(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


# ---- losses ----------------------------------------------------------------------

_CLAMP = 1e-7


def bce_loss(pred, target, pos_weight: float = 1.0):
    """Mean binary cross-entropy on probabilities; returns ``(loss, d loss / d pred)``."""
    p = np.clip(np.asarray(pred, dtype=np.float64), _CLAMP, 1.0 - _CLAMP)
    y = np.asarray(target, dtype=np.float64)
    if p.shape != y.shape:
        raise ContractViolation(f"pred shape {p.shape} != target shape {y.shape}")
    n = p.size
    loss = -np.sum(pos_weight * y * np.log(p) + (1.0 - y) * np.log(1.0 - p)) / n
    grad = (-pos_weight * y / p + (1.0 - y) / (1.0 - p)) / n
    return float(loss), grad


def bce_logits(logits, target, pos_weight: float = 1.0):
    """Same loss as ``bce_loss(sigmoid(logits))`` but stable, with the gradient on the logits."""
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    n = z.size
    log_p = -np.logaddexp(0.0, -z)
    log_1mp = -np.logaddexp(0.0, z)
    loss = -np.sum(pos_weight * y * log_p + (1.0 - y) * log_1mp) / n
    p = np.exp(log_p)
    grad = (pos_weight * y * (p - 1.0) + (1.0 - y) * p) / n
    return float(loss), grad


def mse_loss(pred, target):
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise ContractViolation(f"pred shape {p.shape} != target shape {t.shape}")
    d = p - t
    return float(np.mean(d * d)), 2.0 * d / d.size


# ---- gradient checking -------------------------------------------------------------

@dataclass
class GradCheckReport:
    max_rel_error: float
    per_param: list
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def relative_error(a, b, floor: float = 1e-6) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def finite_diff_check(loss_and_grad: Callable, params: Sequence[np.ndarray], tolerance: float = 1e-4,
                      h: float = 1e-5, max_entries: int | None = None,
                      rng: np.random.Generator | None = None) -> GradCheckReport:
    """Compare analytic gradients against central differences.

    ``loss_and_grad()`` must return ``(loss, grads)`` with ``grads`` aligned to
    ``params``; the arrays in ``params`` are perturbed in place and restored.
    ``max_entries`` limits the number of coordinates probed per tensor.
    """
    _, analytic = loss_and_grad()
    analytic = [np.array(g, dtype=np.float64, copy=True) for g in analytic]
    rng = rng or np.random.default_rng(0)
    per_param = []
    for p, ga in zip(params, analytic):
        flat = p.reshape(-1)
        idx = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            idx = np.sort(rng.choice(flat.size, max_entries, replace=False))
        errs = []
        for i in idx:
            old = flat[i]
            flat[i] = old + h
            up = loss_and_grad()[0]
            flat[i] = old - h
            down = loss_and_grad()[0]
            flat[i] = old
            numeric = (up - down) / (2 * h)
            errs.append(relative_error(ga.reshape(-1)[i], numeric))
        per_param.append(float(max(errs)) if errs else 0.0)
    return GradCheckReport(max(per_param) if per_param else 0.0, per_param, tolerance)


# ---- checkpoints ------------------------------------------------------------------

_MAGIC = b"AIMKIT-PARAMS 1\n"


def save_params(path, tensors: dict, meta: dict | None = None) -> None:
    """Write named arrays as a JSON header (names, shapes, dtypes) followed by raw little-endian bytes.

    Byte output depends only on the inputs, so identical parameters give identical files.
    """
    header = {"meta": meta or {}, "tensors": []}
    blobs = []
    for name in tensors:
        a = np.asarray(tensors[name])
        dtype = "<i8" if np.issubdtype(a.dtype, np.integer) else "<f8"
        a = np.ascontiguousarray(a, dtype=dtype)
        header["tensors"].append({"name": name, "shape": list(a.shape), "dtype": dtype})
        blobs.append(a.tobytes())
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for b in blobs:
            fh.write(b)


def load_params(path) -> tuple[dict, dict]:
    with open(path, "rb") as fh:
        if fh.readline() != _MAGIC:
            raise ContractViolation(f"{path}: not an aimkit parameter file")
        header = json.loads(fh.readline().decode("utf-8"))
        tensors = {}
        for spec in header["tensors"]:
            dtype = np.dtype(spec["dtype"])
            count = int(np.prod(spec["shape"], dtype=np.int64))
            buf = fh.read(count * dtype.itemsize)
            tensors[spec["name"]] = np.frombuffer(buf, dtype=dtype).reshape(spec["shape"]).astype(dtype.newbyteorder("="))
    return tensors, header["meta"]
