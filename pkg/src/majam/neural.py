"""Small fully connected network with hand-written backprop.

Forward and backward accept a single feature vector or a ``(B, d)`` batch.
The network output is squashed to ``[R_MIN, 1]`` so it can be used directly
as spacing ratios.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from .config import R_MIN

MODEL_VERSION = 1


class Activation(str, enum.Enum):
    RELU = "relu"
    SIGMOID = "sigmoid"
    IDENTITY = "identity"


@dataclass(frozen=True)
class LayerSpec:
    input_dim: int
    output_dim: int
    activation: Activation = Activation.RELU

    def __post_init__(self):
        object.__setattr__(self, "activation", Activation(self.activation))
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError(f"layer dims must be >= 1: {self}")


class ModelFormatError(ValueError):
    """A model file is malformed, from another version, or dimensionally inconsistent."""


class DivergenceError(FloatingPointError):
    """Non-finite values reached a parameter update."""


@dataclass
class MlpParams:
    """Layer specs plus one ``(out, in)`` weight and ``(out,)`` bias per layer."""

    specs: list[LayerSpec]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_chain(self.specs)
        if len(self.weights) != len(self.specs) or len(self.biases) != len(self.specs):
            raise ValueError("one weight and bias per layer required")
        for i, (s, w, b) in enumerate(zip(self.specs, self.weights, self.biases)):
            if np.shape(w) != (s.output_dim, s.input_dim) or np.shape(b) != (s.output_dim,):
                raise ValueError(
                    f"layer {i}: expected W {(s.output_dim, s.input_dim)} and b "
                    f"{(s.output_dim,)}, got {np.shape(w)} and {np.shape(b)}"
                )

    @property
    def input_dim(self) -> int:
        return self.specs[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.specs[-1].output_dim

    def copy(self) -> "MlpParams":
        return MlpParams(
            list(self.specs),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.seed,
            dict(self.meta),
        )

    def arrays(self):
        """Weights and biases interleaved, in layer order."""
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b

    def zeros_like(self) -> "MlpParams":
        return MlpParams(
            list(self.specs),
            [np.zeros_like(w) for w in self.weights],
            [np.zeros_like(b) for b in self.biases],
            self.seed,
        )


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]  # activation entering each layer, (B, in)
    preacts: list[np.ndarray]  # affine output of each layer, (B, out)
    raw_output: np.ndarray  # last activation before clamping
    squeeze: bool


def _check_chain(specs):
    if not specs:
        raise ValueError("at least one layer required")
    for i in range(1, len(specs)):
        if specs[i].input_dim != specs[i - 1].output_dim:
            raise ValueError(
                f"layer {i} input_dim {specs[i].input_dim} does not match "
                f"layer {i - 1} output_dim {specs[i - 1].output_dim}"
            )


def default_specs(num_inputs: int, num_outputs: int, hidden: int = 128, depth: int = 2):
    """Embedding plus MLP: ``depth`` ReLU layers of width ``hidden``, Sigmoid out."""
    dims = [num_inputs] + [hidden] * depth
    specs = [LayerSpec(a, b, Activation.RELU) for a, b in zip(dims[:-1], dims[1:])]
    specs.append(LayerSpec(dims[-1], num_outputs, Activation.SIGMOID))
    return specs


def init_params(specs, seed: int) -> MlpParams:
    """Glorot-uniform weights, zero biases; deterministic in ``seed``."""
    specs = [s if isinstance(s, LayerSpec) else LayerSpec(*s) for s in specs]
    _check_chain(specs)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for s in specs:
        limit = np.sqrt(6.0 / (s.input_dim + s.output_dim))
        weights.append(rng.uniform(-limit, limit, size=(s.output_dim, s.input_dim)))
        biases.append(np.zeros(s.output_dim))
    return MlpParams(specs, weights, biases, seed)


def _activate(z, act):
    if act is Activation.RELU:
        return np.maximum(z, 0.0)
    if act is Activation.SIGMOID:
        return expit(z)
    return z


def forward(params: MlpParams, features):
    """Return ``(ratios, cache)``; ratios are clamped to ``[R_MIN, 1]``."""
    x = np.asarray(features, dtype=float)
    squeeze = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != params.input_dim:
        raise ValueError(f"expected {params.input_dim} features, got {x.shape[1]}")
    inputs, preacts = [], []
    h = x
    for spec, w, b in zip(params.specs, params.weights, params.biases):
        inputs.append(h)
        z = h @ w.T + b
        preacts.append(z)
        h = _activate(z, spec.activation)
    out = np.clip(h, R_MIN, 1.0)
    cache = ForwardCache(inputs, preacts, h, squeeze)
    return (out[0] if squeeze else out), cache


def backward(params: MlpParams, cache: ForwardCache, grad_wrt_ratios) -> MlpParams:
    """Reverse-mode gradients, summed over the batch rows in ``cache``.

    ReLU's subgradient at 0 is 0; outputs held at a clamp bound pass no
    gradient.
    """
    g = np.atleast_2d(np.asarray(grad_wrt_ratios, dtype=float))
    if g.shape != cache.raw_output.shape:
        raise ValueError(f"gradient shape {g.shape} != output shape {cache.raw_output.shape}")
    g = np.where((cache.raw_output < R_MIN) | (cache.raw_output > 1.0), 0.0, g)
    grads = params.zeros_like()
    for i in range(len(params.specs) - 1, -1, -1):
        spec, z = params.specs[i], cache.preacts[i]
        if spec.activation is Activation.RELU:
            g = g * (z > 0.0)
        elif spec.activation is Activation.SIGMOID:
            s = expit(z)
            g = g * s * (1.0 - s)
        grads.weights[i] = g.T @ cache.inputs[i]
        grads.biases[i] = g.sum(axis=0)
        if i:
            g = g @ params.weights[i]
    return grads


def global_norm(grads: MlpParams) -> float:
    return float(np.sqrt(sum(np.sum(a * a) for a in grads.arrays())))


def clip_by_global_norm(grads: MlpParams, max_norm: float) -> MlpParams:
    norm = global_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return grads
    scale = max_norm / norm
    out = grads.zeros_like()
    out.weights = [w * scale for w in grads.weights]
    out.biases = [b * scale for b in grads.biases]
    return out


def _check_finite(grads: MlpParams):
    for i, (w, b) in enumerate(zip(grads.weights, grads.biases)):
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise DivergenceError(f"non-finite gradient in layer {i}")


def sgd_step(params: MlpParams, grads: MlpParams, learning_rate: float) -> MlpParams:
    """Plain SGD: ``theta - lr * g``, returned as new parameters."""
    if len(grads.weights) != len(params.weights):
        raise ValueError("gradient does not match parameter structure")
    _check_finite(grads)
    out = params.copy()
    for i in range(len(out.weights)):
        if grads.weights[i].shape != out.weights[i].shape:
            raise ValueError(f"layer {i}: gradient shape mismatch")
        out.weights[i] = params.weights[i] - learning_rate * grads.weights[i]
        out.biases[i] = params.biases[i] - learning_rate * grads.biases[i]
    return out


class MomentumSGD:
    """Heavy-ball SGD; ``momentum=0`` reduces to :func:`sgd_step`."""

    def __init__(self, learning_rate: float, momentum: float = 0.9):
        self.learning_rate = learning_rate
        self.momentum = momentum
        self._velocity = None

    def step(self, params: MlpParams, grads: MlpParams) -> MlpParams:
        _check_finite(grads)
        if self._velocity is None:
            self._velocity = grads.zeros_like()
        v = self._velocity
        for i in range(len(v.weights)):
            v.weights[i] = self.momentum * v.weights[i] + grads.weights[i]
            v.biases[i] = self.momentum * v.biases[i] + grads.biases[i]
        return sgd_step(params, v, self.learning_rate)


class Adam:
    """Adam with bias correction (Kingma and Ba defaults)."""

    def __init__(self, learning_rate: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self._m = self._v = None
        self._t = 0

    def step(self, params: MlpParams, grads: MlpParams) -> MlpParams:
        _check_finite(grads)
        if self._m is None:
            self._m, self._v = grads.zeros_like(), grads.zeros_like()
        self._t += 1
        b1, b2 = self.beta1, self.beta2
        lr = self.learning_rate * np.sqrt(1 - b2**self._t) / (1 - b1**self._t)
        out = params.copy()
        for slot in ("weights", "biases"):
            ms, vs, gs = getattr(self._m, slot), getattr(self._v, slot), getattr(grads, slot)
            ps = getattr(out, slot)
            for i in range(len(ps)):
                ms[i] = b1 * ms[i] + (1 - b1) * gs[i]
                vs[i] = b2 * vs[i] + (1 - b2) * gs[i] ** 2
                ps[i] = ps[i] - lr * ms[i] / (np.sqrt(vs[i]) + self.eps)
        return out


def _to_document(params: MlpParams) -> dict:
    doc = {
        "version": MODEL_VERSION,
        "layer_specs": [
            {"input_dim": s.input_dim, "output_dim": s.output_dim, "activation": s.activation.value}
            for s in params.specs
        ],
        "seed": params.seed,
        "weights": [
            {"W": w.tolist(), "b": b.tolist()} for w, b in zip(params.weights, params.biases)
        ],
    }
    if params.meta:
        doc["meta"] = params.meta
    return doc


def dumps_model(params: MlpParams) -> str:
    # repr-based float output round-trips every double exactly
    return json.dumps(_to_document(params), indent=1, sort_keys=True) + "\n"


def save_model(params: MlpParams, path) -> None:
    Path(path).write_text(dumps_model(params))


def loads_model(text: str) -> MlpParams:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {doc.get('version')!r}")
    try:
        specs = [
            LayerSpec(int(s["input_dim"]), int(s["output_dim"]), Activation(s["activation"]))
            for s in doc["layer_specs"]
        ]
        weights = [np.array(layer["W"], dtype=float) for layer in doc["weights"]]
        biases = [np.array(layer["b"], dtype=float) for layer in doc["weights"]]
        return MlpParams(specs, weights, biases, doc.get("seed"), doc.get("meta", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"inconsistent model file: {exc}") from None


def load_model(path) -> MlpParams:
    return loads_model(Path(path).read_text())
