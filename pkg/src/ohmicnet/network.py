"""From-scratch dense feedforward network in float64 numpy.

Sigmoid hidden layers, softmax or linear head, categorical cross-entropy or
MSE loss, analytic backpropagation, full-batch Adam.  Everything is
deterministic given the seed: initialization uses a PCG64 generator and the
training loop itself draws no randomness.
"""

from __future__ import annotations

import enum
import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Head",
    "Loss",
    "MlpSpec",
    "ModelParams",
    "AdamState",
    "TrainConfig",
    "TrainRecord",
    "init_params",
    "forward",
    "loss_cross_entropy",
    "loss_mse",
    "backward",
    "adam_step",
    "train",
    "evaluate_classification",
    "evaluate_regression",
    "save_checkpoint",
    "load_checkpoint",
    "CheckpointError",
]

_LOG_CLAMP = 1e-12


class Head(enum.Enum):
    SOFTMAX = "softmax"
    LINEAR = "linear"


class Loss(enum.Enum):
    CROSS_ENTROPY = "cross_entropy"
    MSE = "mse"


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths (input, hidden..., output) and the output head."""

    layer_widths: tuple
    head: Head

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 3:
            raise ValueError("need at least one hidden layer")
        if any(w < 1 for w in widths):
            raise ValueError("all layer widths must be >= 1")

    @property
    def input_width(self) -> int:
        return self.layer_widths[0]

    @property
    def output_width(self) -> int:
        return self.layer_widths[-1]

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1


@dataclass
class ModelParams:
    """Weight matrices (fan_in x fan_out) and bias vectors, one pair per layer."""

    weights: list
    biases: list

    def copy(self) -> "ModelParams":
        return ModelParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    def check_shapes(self, spec: MlpSpec):
        widths = spec.layer_widths
        if len(self.weights) != spec.n_layers or len(self.biases) != spec.n_layers:
            raise ValueError("parameter count does not match spec")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (widths[i], widths[i + 1]) or b.shape != (widths[i + 1],):
                raise ValueError(f"layer {i} shape mismatch: {w.shape}, {b.shape}")


@dataclass
class AdamState:
    """First/second-moment accumulators plus the step counter."""

    m_weights: list
    m_biases: list
    v_weights: list
    v_biases: list
    step: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def fresh(cls, params: ModelParams, lr: float = 1e-4, **kw) -> "AdamState":
        return cls(
            m_weights=[np.zeros_like(w) for w in params.weights],
            m_biases=[np.zeros_like(b) for b in params.biases],
            v_weights=[np.zeros_like(w) for w in params.weights],
            v_biases=[np.zeros_like(b) for b in params.biases],
            lr=lr,
            **kw,
        )


@dataclass(frozen=True)
class TrainConfig:
    iterations: int
    lr: float = 1e-4
    seed: int = 0
    loss: Loss = Loss.CROSS_ENTROPY
    eval_every: int = 100

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")


@dataclass(frozen=True)
class TrainRecord:
    iteration: int
    train_loss: float
    valid_loss: float
    train_metric: float
    valid_metric: float


def init_params(spec: MlpSpec, seed: int) -> ModelParams:
    """Glorot-uniform weights, zero biases, deterministic per seed."""
    rng = np.random.Generator(np.random.PCG64(seed))
    weights, biases = [], []
    widths = spec.layer_widths
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ModelParams(weights=weights, biases=biases)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # piecewise form avoids overflow in exp for large |z|
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    ez = np.exp(shifted)
    return ez / ez.sum(axis=1, keepdims=True)


def forward(params: ModelParams, spec: MlpSpec, batch: np.ndarray):
    """Forward pass; returns (outputs, cache of layer activations)."""
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.input_width:
        raise ValueError(
            f"batch has shape {x.shape}, spec input width is {spec.input_width}"
        )
    params.check_shapes(spec)
    activations = [x]
    for i in range(spec.n_layers - 1):
        z = activations[-1] @ params.weights[i] + params.biases[i]
        activations.append(_sigmoid(z))
    z_out = activations[-1] @ params.weights[-1] + params.biases[-1]
    out = _softmax(z_out) if spec.head is Head.SOFTMAX else z_out
    cache = {"activations": activations, "output": out, "batch_size": x.shape[0]}
    return out, cache


def loss_cross_entropy(pred: np.ndarray, truth_onehot: np.ndarray) -> float:
    """Categorical cross-entropy, mean over examples, log clamped at 1e-12."""
    if pred.shape != truth_onehot.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {truth_onehot.shape}")
    clipped = np.maximum(pred, _LOG_CLAMP)
    return float(-np.sum(truth_onehot * np.log(clipped)) / pred.shape[0])


def loss_mse(pred: np.ndarray, truth: np.ndarray) -> float:
    """Mean squared error over all M*D entries."""
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    return float(np.mean((pred - truth) ** 2))


def backward(params: ModelParams, spec: MlpSpec, cache: dict, truth: np.ndarray):
    """Analytic gradients of the head's natural loss w.r.t. all parameters.

    Softmax heads use the fused softmax+cross-entropy gradient (pred-truth)/M;
    linear heads differentiate the MSE convention 2*(pred-truth)/(M*D).
    """
    out = cache["output"]
    if truth.shape != out.shape:
        raise ValueError(f"truth shape {truth.shape} does not match output {out.shape}")
    m = cache["batch_size"]
    activations = cache["activations"]

    if spec.head is Head.SOFTMAX:
        delta = (out - truth) / m
    else:
        delta = 2.0 * (out - truth) / (m * out.shape[1])

    grad_w = [None] * spec.n_layers
    grad_b = [None] * spec.n_layers
    for i in range(spec.n_layers - 1, -1, -1):
        grad_w[i] = activations[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            a = activations[i]
            delta = (delta @ params.weights[i].T) * a * (1.0 - a)
    return ModelParams(weights=grad_w, biases=grad_b)


def adam_step(params: ModelParams, grads: ModelParams, state: AdamState) -> None:
    """One bias-corrected Adam update; mutates params and state in place."""
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.step
    bc2 = 1.0 - b2**state.step
    for group in ("weights", "biases"):
        p_list = getattr(params, group)
        g_list = getattr(grads, group)
        m_list = getattr(state, f"m_{group}")
        v_list = getattr(state, f"v_{group}")
        for p, g, m, v in zip(p_list, g_list, m_list, v_list):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)


def _metric(spec: MlpSpec, out: np.ndarray, truth: np.ndarray) -> float:
    if spec.head is Head.SOFTMAX:
        return float(np.mean(np.argmax(out, axis=1) == np.argmax(truth, axis=1)))
    return loss_mse(out, truth)


def _loss_value(loss: Loss, out, truth) -> float:
    if loss is Loss.CROSS_ENTROPY:
        return loss_cross_entropy(out, truth)
    return loss_mse(out, truth)


def train(
    spec: MlpSpec,
    train_x: np.ndarray,
    train_y: np.ndarray,
    valid_x: np.ndarray,
    valid_y: np.ndarray,
    config: TrainConfig,
    params: ModelParams | None = None,
):
    """Full-batch training loop; returns (params, history of TrainRecord).

    Every iteration consumes the entire training split (no minibatching).
    History is recorded at iteration 0 and every `eval_every` iterations
    thereafter, plus the final iteration.  Aborts on non-finite loss.
    """
    if (config.loss is Loss.CROSS_ENTROPY) != (spec.head is Head.SOFTMAX):
        raise ValueError("cross-entropy requires a softmax head, MSE a linear head")
    if params is None:
        params = init_params(spec, config.seed)
    state = AdamState.fresh(params, lr=config.lr)
    history = []

    def record(iteration):
        out_t, _ = forward(params, spec, train_x)
        out_v, _ = forward(params, spec, valid_x)
        rec = TrainRecord(
            iteration=iteration,
            train_loss=_loss_value(config.loss, out_t, train_y),
            valid_loss=_loss_value(config.loss, out_v, valid_y),
            train_metric=_metric(spec, out_t, train_y),
            valid_metric=_metric(spec, out_v, valid_y),
        )
        history.append(rec)
        return rec

    record(0)
    for it in range(1, config.iterations + 1):
        out, cache = forward(params, spec, train_x)
        loss = _loss_value(config.loss, out, train_y)
        if not np.isfinite(loss):
            raise FloatingPointError(f"training diverged at iteration {it}: loss={loss}")
        grads = backward(params, spec, cache, train_y)
        adam_step(params, grads, state)
        if it % config.eval_every == 0 or it == config.iterations:
            record(it)
    return params, history


def evaluate_classification(params: ModelParams, spec: MlpSpec, x, y_onehot):
    """Accuracy and confusion matrix (rows = true class, cols = predicted)."""
    if spec.head is not Head.SOFTMAX:
        raise ValueError("classification evaluation needs a softmax head")
    out, _ = forward(params, spec, x)
    pred = np.argmax(out, axis=1)
    true = np.argmax(y_onehot, axis=1)
    n_classes = spec.output_width
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (true, pred), 1)
    accuracy = float(np.mean(pred == true))
    return accuracy, confusion


def evaluate_regression(params: ModelParams, spec: MlpSpec, x, y):
    """Overall MSE, per-target MSE, and the raw (predicted, true) pairs."""
    if spec.head is not Head.LINEAR:
        raise ValueError("regression evaluation needs a linear head")
    out, _ = forward(params, spec, x)
    per_target = np.mean((out - y) ** 2, axis=0)
    return float(np.mean((out - y) ** 2)), per_target, out


class CheckpointError(RuntimeError):
    pass


_CKPT_MAGIC = b"OHMICNET-CKPT-1\n"


def save_checkpoint(
    path,
    params: ModelParams,
    spec: MlpSpec,
    seed: int,
    iterations: int,
    loss: Loss,
) -> None:
    """Manifest + float64 little-endian parameter blocks; round-trip exact."""
    manifest = {
        "layer_widths": list(spec.layer_widths),
        "head": spec.head.value,
        "loss": loss.value,
        "seed": int(seed),
        "iterations": int(iterations),
    }
    blob = bytearray()
    for w, b in zip(params.weights, params.biases):
        blob += np.ascontiguousarray(w, dtype="<f8").tobytes()
        blob += np.ascontiguousarray(b, dtype="<f8").tobytes()
    manifest["checksum"] = hashlib.blake2b(bytes(blob), digest_size=8).hexdigest()
    header = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        fh.write(blob)


def load_checkpoint(path):
    """Returns (params, spec, manifest dict)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_CKPT_MAGIC))
        if magic != _CKPT_MAGIC:
            raise CheckpointError(f"{path}: not an ohmicnet checkpoint")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        manifest = json.loads(fh.read(hlen).decode("utf-8"))
        blob = fh.read()
    if hashlib.blake2b(blob, digest_size=8).hexdigest() != manifest["checksum"]:
        raise CheckpointError(f"{path}: checksum mismatch (corrupt checkpoint)")
    spec = MlpSpec(tuple(manifest["layer_widths"]), Head(manifest["head"]))
    widths = spec.layer_widths
    weights, biases = [], []
    offset = 0
    buf = np.frombuffer(blob, dtype="<f8")
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        n_w = fan_in * fan_out
        weights.append(buf[offset : offset + n_w].reshape(fan_in, fan_out).copy())
        offset += n_w
        biases.append(buf[offset : offset + fan_out].copy())
        offset += fan_out
    if offset != buf.shape[0]:
        raise CheckpointError(f"{path}: parameter block size mismatch")
    return ModelParams(weights=weights, biases=biases), spec, manifest
