"""Small deterministic feed-forward network: dense layers, ReLU, inverted
dropout, hand-written backpropagation and Adam.

Everything runs in float64 on row-major batches ``x`` of shape
``(n, input_dim)``. Two output heads are supported:

``scalar``
    ``yhat = a @ w + bias`` over the last hidden activations ``a``.
``coral``
    ``K - 1`` logits ``z_k = a @ w + bias_k`` sharing one weight vector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataFormatError, NumericError

HEADS = ("scalar", "coral")
ACTIVATIONS = ("relu", "identity")
CHECKPOINT_FORMAT = "ordinal-sim-checkpoint/1"


@dataclass(frozen=True)
class LayerSpec:
    input_dim: int
    output_dim: int
    activation: str = "relu"
    dropout_prob: float = 0.0

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ConfigError(f"layer dims must be positive: {self.input_dim}x{self.output_dim}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if not 0.0 <= self.dropout_prob < 1.0:
            raise ConfigError(f"dropout_prob must be in [0, 1), got {self.dropout_prob}")


def mlp_specs(input_dim: int, hidden=(256, 128), dropout=(0.4, 0.1)) -> list[LayerSpec]:
    """ReLU hidden layers with per-layer dropout, e.g. ``input -> 256 -> 128``."""
    hidden = list(hidden)
    dropout = list(dropout)
    if len(dropout) != len(hidden):
        raise ConfigError(f"{len(hidden)} hidden sizes but {len(dropout)} dropout values")
    dims = [input_dim, *hidden]
    return [LayerSpec(i, o, "relu", p) for i, o, p in zip(dims, dims[1:], dropout)]


@dataclass(frozen=True)
class ModelParams:
    specs: tuple[LayerSpec, ...]
    weights: tuple[np.ndarray, ...]  # weights[i] has shape (output_dim, input_dim)
    biases: tuple[np.ndarray, ...]
    head: str
    head_weight: np.ndarray  # (tau,)
    head_bias: np.ndarray  # (1,) for scalar, (K-1,) for coral
    use_bias: bool = True

    @property
    def input_dim(self) -> int:
        return self.specs[0].input_dim if self.specs else self.head_weight.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.head_bias.shape[0]

    def arrays(self) -> list[np.ndarray]:
        """All parameter arrays in a fixed order (layer weights/biases, then head)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out + [self.head_weight, self.head_bias]

    def with_arrays(self, arrays) -> "ModelParams":
        arrays = list(arrays)
        n = len(self.weights)
        return replace(
            self,
            weights=tuple(arrays[0 : 2 * n : 2]),
            biases=tuple(arrays[1 : 2 * n : 2]),
            head_weight=arrays[2 * n],
            head_bias=arrays[2 * n + 1],
        )


@dataclass
class ForwardTrace:
    inputs: np.ndarray
    pre_activations: list[np.ndarray] = field(default_factory=list)
    activations: list[np.ndarray] = field(default_factory=list)  # after activation and dropout
    masks: list[np.ndarray | None] = field(default_factory=list)
    output: np.ndarray | None = None


def _check_chain(specs) -> None:
    for a, b in zip(specs, specs[1:]):
        if a.output_dim != b.input_dim:
            raise ConfigError(f"layer output {a.output_dim} does not feed next input {b.input_dim}")


def init_params(specs, head: str = "scalar", seed: int = 0, *, input_dim=None,
                n_classes: int | None = None, use_bias: bool = True) -> ModelParams:
    """Uniform fan-in scaled initialisation, zero biases.

    Hidden ReLU layers use the He bound ``sqrt(6 / fan_in)``; the identity
    head uses ``sqrt(3 / fan_in)``. ``input_dim`` is required only when
    ``specs`` is empty (a linear model). ``n_classes`` (K) is required for
    the coral head.
    """
    specs = tuple(specs)
    _check_chain(specs)
    if head not in HEADS:
        raise ConfigError(f"unknown head {head!r}; choose from {HEADS}")
    if specs:
        if input_dim is not None and input_dim != specs[0].input_dim:
            raise ConfigError(f"input_dim {input_dim} does not match first layer {specs[0].input_dim}")
        tau = specs[-1].output_dim
    else:
        if input_dim is None or input_dim < 1:
            raise ConfigError("input_dim is required for a model without hidden layers")
        tau = input_dim
    if head == "coral":
        if n_classes is None or n_classes < 2:
            raise ConfigError("coral head needs n_classes >= 2")
        n_out = n_classes - 1
    else:
        n_out = 1

    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for spec in specs:
        gain = 6.0 if spec.activation == "relu" else 3.0
        bound = np.sqrt(gain / spec.input_dim)
        weights.append(rng.uniform(-bound, bound, size=(spec.output_dim, spec.input_dim)))
        biases.append(np.zeros(spec.output_dim))
    bound = np.sqrt(3.0 / tau)
    head_weight = rng.uniform(-bound, bound, size=tau)
    return ModelParams(specs, tuple(weights), tuple(biases), head, head_weight,
                       np.zeros(n_out), use_bias)


def forward(params: ModelParams, x, mode: str = "infer", rng: np.random.Generator | None = None):
    """Run the network on a batch.

    Returns ``(output, trace)``. ``output`` has shape ``(n,)`` for the scalar
    head and ``(n, K-1)`` logits for the coral head. ``trace`` is ``None`` in
    infer mode. Train mode draws inverted-dropout masks from ``rng``.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != params.input_dim:
        raise ConfigError(f"expected {params.input_dim} input features, got {x.shape[1]}")
    train = mode == "train"
    if mode not in ("train", "infer"):
        raise ConfigError(f"mode must be 'train' or 'infer', got {mode!r}")
    if train and rng is None:
        raise ConfigError("train mode needs an rng for dropout")

    trace = ForwardTrace(inputs=x) if train else None
    a = x
    for spec, w, b in zip(params.specs, params.weights, params.biases):
        z = a @ w.T + b
        a = np.maximum(z, 0.0) if spec.activation == "relu" else z
        mask = None
        if train and spec.dropout_prob > 0.0:
            keep = 1.0 - spec.dropout_prob
            mask = (rng.random(a.shape) < keep) / keep
            a = a * mask
        if train:
            trace.pre_activations.append(z)
            trace.activations.append(a)
            trace.masks.append(mask)

    if params.head == "scalar":
        out = a @ params.head_weight
        if params.use_bias:
            out = out + params.head_bias[0]
    else:
        out = (a @ params.head_weight)[:, None] + params.head_bias[None, :]
    if not np.all(np.isfinite(out)):
        raise NumericError("non-finite network output")
    if train:
        trace.output = out
    if single:
        out = out[0]
    return out, trace


def backward(params: ModelParams, trace: ForwardTrace, grad_output) -> list[np.ndarray]:
    """Gradients of the loss w.r.t. every array in ``params.arrays()`` order.

    ``grad_output`` is dLoss/dOutput with the shape of the forward output.
    """
    if trace is None or len(trace.activations) != len(params.specs):
        raise ConfigError("trace does not come from a train-mode forward on these params")
    g = np.asarray(grad_output, dtype=np.float64)
    n = trace.inputs.shape[0]
    if params.head == "scalar":
        g = g.reshape(n)
    else:
        g = g.reshape(n, params.n_outputs)
    last = trace.activations[-1] if params.specs else trace.inputs

    if params.head == "scalar":
        g_head_w = last.T @ g
        g_head_b = np.array([g.sum()]) if params.use_bias else np.zeros(1)
        g_a = np.outer(g, params.head_weight)
    else:
        g_sum = g.sum(axis=1)
        g_head_w = last.T @ g_sum
        g_head_b = g.sum(axis=0)
        g_a = np.outer(g_sum, params.head_weight)

    layer_grads = []
    for i in range(len(params.specs) - 1, -1, -1):
        spec = params.specs[i]
        mask = trace.masks[i]
        if mask is not None:
            g_a = g_a * mask
        if spec.activation == "relu":
            g_a = g_a * (trace.pre_activations[i] > 0.0)
        prev = trace.activations[i - 1] if i > 0 else trace.inputs
        layer_grads.append((g_a.T @ prev, g_a.sum(axis=0)))
        if i > 0:
            g_a = g_a @ params.weights[i]

    grads = []
    for gw, gb in reversed(layer_grads):
        grads += [gw, gb]
    return grads + [g_head_w, g_head_b]


@dataclass(frozen=True)
class AdamState:
    step: int
    m: tuple[np.ndarray, ...]
    v: tuple[np.ndarray, ...]


def adam_init(params: ModelParams) -> AdamState:
    zeros = tuple(np.zeros_like(a) for a in params.arrays())
    return AdamState(0, zeros, tuple(np.zeros_like(a) for a in zeros))


def adam_step(params: ModelParams, grads, state: AdamState, lr: float = 1e-3,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """One bias-corrected Adam update; returns ``(new_params, new_state)``."""
    arrays = params.arrays()
    grads = list(grads)
    if len(grads) != len(arrays) or len(state.m) != len(arrays):
        raise ConfigError("gradient/state structure does not match params")
    t = state.step + 1
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    new_arrays, new_m, new_v = [], [], []
    for p, g, m, v in zip(arrays, grads, state.m, state.v):
        if g.shape != p.shape:
            raise ConfigError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        new_arrays.append(p - lr * (m / c1) / (np.sqrt(v / c2) + eps))
        new_m.append(m)
        new_v.append(v)
    return params.with_arrays(new_arrays), AdamState(t, tuple(new_m), tuple(new_v))


# -- checkpoints -------------------------------------------------------------

def params_to_dict(params: ModelParams) -> dict:
    return {
        "head": params.head,
        "use_bias": params.use_bias,
        "input_dim": params.input_dim,
        "layers": [
            {
                "input_dim": s.input_dim,
                "output_dim": s.output_dim,
                "activation": s.activation,
                "dropout_prob": s.dropout_prob,
                "weight": w.tolist(),
                "bias": b.tolist(),
            }
            for s, w, b in zip(params.specs, params.weights, params.biases)
        ],
        "head_weight": params.head_weight.tolist(),
        "head_bias": params.head_bias.tolist(),
    }


def params_from_dict(doc: dict) -> ModelParams:
    specs, weights, biases = [], [], []
    for layer in doc["layers"]:
        spec = LayerSpec(layer["input_dim"], layer["output_dim"], layer["activation"],
                         layer["dropout_prob"])
        w = np.asarray(layer["weight"], dtype=np.float64).reshape(spec.output_dim, spec.input_dim)
        b = np.asarray(layer["bias"], dtype=np.float64).reshape(spec.output_dim)
        specs.append(spec)
        weights.append(w)
        biases.append(b)
    _check_chain(specs)
    if doc["head"] not in HEADS:
        raise ConfigError(f"unknown head {doc['head']!r}")
    params = ModelParams(tuple(specs), tuple(weights), tuple(biases), doc["head"],
                         np.asarray(doc["head_weight"], dtype=np.float64),
                         np.asarray(doc["head_bias"], dtype=np.float64), bool(doc["use_bias"]))
    tau = specs[-1].output_dim if specs else int(doc["input_dim"])
    if params.head_weight.shape != (tau,):
        raise ConfigError(f"head weight has shape {params.head_weight.shape}, expected ({tau},)")
    if not all(np.all(np.isfinite(a)) for a in params.arrays()):
        raise ConfigError("checkpoint contains non-finite parameters")
    return params


def save_checkpoint(path, params: ModelParams, **meta) -> None:
    """Write params plus arbitrary JSON-able metadata (scheme, seed, layout...)."""
    doc = {"format": CHECKPOINT_FORMAT, **meta, "params": params_to_dict(params)}
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_checkpoint(path) -> tuple[ModelParams, dict]:
    """Return ``(params, meta)`` where ``meta`` holds everything except the params."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc}", path) from exc
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise DataFormatError(f"not a checkpoint (expected format {CHECKPOINT_FORMAT!r})", path)
    try:
        params = params_from_dict(doc.pop("params"))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"malformed parameters: {exc}", path) from exc
    return params, doc
