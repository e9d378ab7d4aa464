"""Ordinal regression for bounded similarity prediction with variable-width buckets."""

from .bucketing import (
    BucketScheme,
    derive_quantile_scheme,
    load_scheme,
    map_to_label,
    midpoint,
    paper_scheme,
    save_scheme,
)
from .data import (
    EmbeddingTable,
    Instance,
    SynthConfig,
    assemble_features,
    embed_text,
    generate_synthetic,
    load_embeddings,
    parse_dataset,
    save_embeddings,
    write_dataset,
)
from .errors import (
    ConfigError,
    DataFormatError,
    DegenerateSchemeError,
    EmptyEmbeddingError,
    InputError,
    NumericError,
    OrdinalSimError,
)
from .losses import atmsel, coral_decode, coral_encode, coral_loss, mse_loss
from .metrics import EvalReport, evaluate, male
from .nn import LayerSpec, ModelParams, adam_step, backward, forward, init_params
from .training import TrainConfig, TrainLog, fit, predict, train

__version__ = "0.1.0"
