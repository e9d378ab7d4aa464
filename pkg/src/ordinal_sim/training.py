"""Mini-batch training with validation early stopping, plus prediction."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import losses
from .bucketing import BucketScheme, scheme_from_dict
from .data import LAYOUTS, EmbeddingTable, feature_matrix
from .errors import ConfigError, DataFormatError, InputError, NumericError
from .metrics import evaluate
from .nn import ModelParams, adam_init, adam_step, backward, forward, init_params, mlp_specs
from .nn import load_checkpoint as _load_params
from .nn import save_checkpoint as _save_params

log = logging.getLogger(__name__)

KINDS = ("atmsel", "coral", "mse", "mse-linear")


@dataclass
class TrainConfig:
    hidden: tuple[int, ...] = (256, 128)
    dropout: tuple[float, ...] = (0.4, 0.1)
    kind: str = "atmsel"
    max_epochs: int = 1000
    patience: int = 30
    batch_size: int = 256
    lr: float = 1e-3
    seed: int = 0
    layout: str = "Q+Q"
    use_bias: bool = True
    # file references, used by the command line
    scheme_path: str | None = None
    train_path: str | None = None
    val_path: str | None = None
    embeddings_path: str | None = None
    has_categories: bool = False

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        self.dropout = tuple(float(p) for p in self.dropout)
        if self.kind == "mse-linear" and self.hidden:
            # a linear model has no hidden layers regardless of the defaults
            self.hidden, self.dropout = (), ()

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}; choose from {KINDS}")
        if self.layout not in LAYOUTS:
            raise ConfigError(f"unknown layout {self.layout!r}; choose from {LAYOUTS}")
        if len(self.hidden) != len(self.dropout):
            raise ConfigError("hidden and dropout must have the same length")
        if any(h < 1 for h in self.hidden):
            raise ConfigError("hidden sizes must be positive")
        if any(not 0.0 <= p < 1.0 for p in self.dropout):
            raise ConfigError("dropout probabilities must lie in [0, 1)")
        if self.max_epochs < 1 or self.patience < 1 or self.batch_size < 1:
            raise ConfigError("max_epochs, patience and batch_size must be >= 1")
        if not self.lr > 0:
            raise ConfigError("learning rate must be positive")
        if self.layout == "QC+QC" and not self.has_categories:
            raise ConfigError("layout QC+QC needs has_categories = true")

    @property
    def head(self) -> str:
        return "coral" if self.kind == "coral" else "scalar"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        d["dropout"] = list(self.dropout)
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


def load_config(path) -> TrainConfig:
    """Read a JSON training config.

    File references are kept as written; callers resolve relative ones
    against the config's directory (see :func:`resolve_path`).
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc}", path) from exc
    if not isinstance(doc, dict):
        raise DataFormatError("config must be a JSON object", path)
    try:
        return TrainConfig.from_dict(doc)
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def resolve_path(config_path, ref: str) -> Path:
    return Path(config_path).parent / ref


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_male: float
    val_pred_hist: tuple[int, ...]


@dataclass
class TrainLog:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    stop_reason: str = ""

    @property
    def best_val_loss(self) -> float:
        return self.records[self.best_epoch - 1].val_loss

    def to_text(self) -> str:
        lines = ["# epoch\ttrain_loss\tval_loss\tval_male\tval_pred_hist"]
        for r in self.records:
            hist = ",".join(str(c) for c in r.val_pred_hist)
            lines.append(f"{r.epoch}\t{r.train_loss:.17g}\t{r.val_loss:.17g}\t{r.val_male:.17g}\t{hist}")
        lines.append(f"# best_epoch={self.best_epoch} stop_reason={self.stop_reason}")
        return "\n".join(lines) + "\n"


def _targets(kind: str, y: np.ndarray, scheme: BucketScheme) -> np.ndarray:
    return y if kind in ("mse", "mse-linear") else scheme.labels(y)


def _loss(kind: str, out, target, scheme: BucketScheme):
    if kind == "atmsel":
        return losses.atmsel(out, target, scheme)
    if kind == "coral":
        return losses.coral_loss(out, target, scheme.K)
    return losses.mse_loss(out, target)


def output_to_similarity(params: ModelParams, out, scheme: BucketScheme) -> np.ndarray:
    """Scalar head: raw output. Coral head: midpoint of the decoded label."""
    if params.head == "scalar":
        return np.asarray(out, dtype=np.float64)
    return scheme.midpoint_array[output_to_labels(params, out, scheme)]


def output_to_labels(params: ModelParams, out, scheme: BucketScheme) -> np.ndarray:
    if params.head == "scalar":
        return scheme.labels(out)
    return losses.coral_decode_batch(losses.sigmoid(out), scheme.K)


def init_model(config: TrainConfig, input_dim: int, scheme: BucketScheme) -> ModelParams:
    specs = mlp_specs(input_dim, config.hidden, config.dropout) if config.hidden else []
    return init_params(specs, config.head, seed=np.random.SeedSequence([config.seed, 2]),
                       input_dim=input_dim, n_classes=scheme.K, use_bias=config.use_bias)


def fit(config: TrainConfig, X_train, y_train, X_val, y_val, scheme: BucketScheme,
        params: ModelParams | None = None) -> tuple[ModelParams, TrainLog]:
    """Train on feature matrices; returns the best-validation params and the log."""
    config.validate()
    X_train = np.asarray(X_train, dtype=np.float64)
    X_val = np.asarray(X_val, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.float64)
    y_val = np.asarray(y_val, dtype=np.float64)
    if X_train.shape[0] == 0 or X_val.shape[0] == 0:
        raise InputError("training and validation sets must be non-empty")
    if X_train.shape[0] != y_train.shape[0] or X_val.shape[0] != y_val.shape[0]:
        raise InputError("feature rows and targets disagree in length")
    if params is None:
        params = init_model(config, X_train.shape[1], scheme)
    kind = config.kind
    t_train = _targets(kind, y_train, scheme)
    t_val = _targets(kind, y_val, scheme)

    # separate streams so toggling dropout does not change the data order
    shuffle_rng = np.random.default_rng([config.seed, 0])
    dropout_rng = np.random.default_rng([config.seed, 1])
    state = adam_init(params)
    n = X_train.shape[0]
    bs = config.batch_size
    tlog = TrainLog()
    best_params, best_loss, since_best = params, np.inf, 0

    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for b, start in enumerate(range(0, n, bs)):
            idx = order[start:start + bs]
            out, trace = forward(params, X_train[idx], "train", dropout_rng)
            value, grad = _loss(kind, out, t_train[idx], scheme)
            if not np.isfinite(value):
                raise NumericError(f"non-finite loss {value!r} at epoch {epoch}, batch {b}")
            grads = backward(params, trace, grad)
            params, state = adam_step(params, grads, state, lr=config.lr)
            total += value * idx.size
        train_loss = total / n

        out_val, _ = forward(params, X_val, "infer")
        val_loss, _ = _loss(kind, out_val, t_val, scheme)
        if not np.isfinite(val_loss):
            raise NumericError(f"non-finite validation loss {val_loss!r} at epoch {epoch}")
        report = evaluate(output_to_similarity(params, out_val, scheme), y_val, scheme)
        tlog.records.append(EpochRecord(epoch, train_loss, val_loss, report.male,
                                        tuple(int(c) for c in report.hist_predicted)))
        log.debug("epoch %d train %.6g val %.6g male %.4f", epoch, train_loss, val_loss, report.male)

        if val_loss < best_loss:
            best_params, best_loss, since_best = params, val_loss, 0
            tlog.best_epoch = epoch
        else:
            since_best += 1
            if since_best >= config.patience:
                tlog.stop_reason = "early-stop"
                break
    else:
        tlog.stop_reason = "max-epochs"
    return best_params, tlog


def _xy(table, instances, layout):
    X, kept = feature_matrix(table, instances, layout)
    y = np.array([instances[i].y for i in kept], dtype=np.float64)
    return X, y


def train(config: TrainConfig, train_set, val_set, table: EmbeddingTable,
          scheme: BucketScheme) -> tuple[ModelParams, TrainLog]:
    """Assemble features for both splits and run :func:`fit`."""
    config.validate()
    if not train_set or not val_set:
        raise InputError("training and validation sets must be non-empty")
    X_train, y_train = _xy(table, train_set, config.layout)
    X_val, y_val = _xy(table, val_set, config.layout)
    return fit(config, X_train, y_train, X_val, y_val, scheme)


def predict_outputs(params: ModelParams, X) -> np.ndarray:
    out, _ = forward(params, X, "infer")
    return out


def predict(params: ModelParams, instances, table: EmbeddingTable, layout: str,
            scheme: BucketScheme) -> np.ndarray:
    """Real-valued predictions, one per instance that could be embedded.

    Instances with no in-vocabulary tokens are dropped (see
    :func:`ordinal_sim.data.feature_matrix`); use :func:`predict_with_index`
    to learn which ones were kept.
    """
    return predict_with_index(params, instances, table, layout, scheme)[0]


def predict_with_index(params, instances, table, layout, scheme):
    X, kept = feature_matrix(table, instances, layout)
    if X.shape[1] != params.input_dim:
        raise ConfigError(f"model expects {params.input_dim} features but layout {layout} "
                          f"with d={table.dim} gives {X.shape[1]}")
    if params.head == "coral" and params.n_outputs != scheme.K - 1:
        raise ConfigError(f"coral head has {params.n_outputs + 1} classes but scheme has K={scheme.K}")
    out = predict_outputs(params, X)
    return output_to_similarity(params, out, scheme), output_to_labels(params, out, scheme), kept


def save_model(path, params: ModelParams, config: TrainConfig, scheme: BucketScheme) -> None:
    _save_params(path, params, kind=config.kind, layout=config.layout, seed=config.seed,
                 scheme=scheme.to_dict(), config=config.to_dict())


def load_model(path) -> tuple[ModelParams, TrainConfig, BucketScheme]:
    params, meta = _load_params(path)
    try:
        config = TrainConfig.from_dict(meta["config"])
        scheme = scheme_from_dict(meta["scheme"], path)
    except (KeyError, TypeError, ConfigError) as exc:
        raise DataFormatError(f"checkpoint metadata incomplete: {exc}", path) from exc
    return params, config, scheme
