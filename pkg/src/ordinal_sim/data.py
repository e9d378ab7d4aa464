"""Embedding tables, query-pair datasets, feature assembly and a seeded
synthetic generator.

File formats
------------
Embeddings use the word2vec text format: a ``"<count> <dim>"`` header,
then one ``token v_1 ... v_dim`` line per token.

Datasets are UTF-8 TSV, one pair per line::

    q1 <TAB> q2 [<TAB> cat1 <TAB> cat2] <TAB> y

Lines starting with ``#`` are comments. Category paths look like
``Clothing->Men's Clothing->Shirt``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataFormatError, EmptyEmbeddingError, InputError

log = logging.getLogger(__name__)

LAYOUTS = ("Q+Q", "QC+QC")
Y_FLOOR = 1e-6


def tokenize(text: str) -> list[str]:
    return text.lower().split()


def tokenize_path(path: str) -> list[str]:
    return [tok for part in path.split("->") for tok in tokenize(part)]


class EmbeddingTable:
    """Immutable token -> vector map backed by one ``(count, dim)`` float64 matrix."""

    def __init__(self, tokens, vectors):
        tokens = list(tokens)
        vectors = np.array(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens) or vectors.shape[1] < 1:
            raise InputError(f"{len(tokens)} tokens do not match vector matrix {vectors.shape}")
        if not np.all(np.isfinite(vectors)):
            raise InputError("embedding vectors must be finite")
        index = {}
        for i, tok in enumerate(tokens):
            if not tok or any(c.isspace() for c in tok):
                raise InputError(f"invalid token {tok!r}")
            if tok in index:
                raise InputError(f"duplicate token {tok!r}")
            index[tok] = i
        vectors.flags.writeable = False
        self.tokens = tuple(tokens)
        self.vectors = vectors
        self._index = index

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self._index

    def __getitem__(self, token) -> np.ndarray:
        return self.vectors[self._index[token]]

    def __eq__(self, other):
        if not isinstance(other, EmbeddingTable):
            return NotImplemented
        return self.tokens == other.tokens and np.array_equal(self.vectors, other.vectors)

    def ids(self, tokens) -> list[int]:
        """Row indices of the in-vocabulary tokens (OOV tokens are skipped)."""
        return [self._index[t] for t in tokens if t in self._index]


def load_embeddings(path) -> EmbeddingTable:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].strip():
        raise DataFormatError("missing '<count> <dim>' header", path, 1)
    header = lines[0].split()
    try:
        count, dim = (int(v) for v in header)
    except ValueError:
        raise DataFormatError(f"malformed header {lines[0]!r}; expected '<count> <dim>'", path, 1) from None
    if count < 0 or dim < 1:
        raise DataFormatError(f"malformed header {lines[0]!r}", path, 1)

    tokens, rows, seen = [], [], set()
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != dim + 1:
            raise DataFormatError(f"expected token plus {dim} values, got {len(parts) - 1} values",
                                  path, lineno)
        token = parts[0]
        if token in seen:
            raise DataFormatError(f"duplicate token {token!r}", path, lineno)
        try:
            values = [float(v) for v in parts[1:]]
        except ValueError:
            raise DataFormatError(f"non-numeric value in vector for {token!r}", path, lineno) from None
        if not all(math.isfinite(v) for v in values):
            raise DataFormatError(f"non-finite value in vector for {token!r}", path, lineno)
        seen.add(token)
        tokens.append(token)
        rows.append(values)
    if len(tokens) != count:
        raise DataFormatError(f"header declares {count} tokens but file has {len(tokens)}", path)
    return EmbeddingTable(tokens, np.array(rows, dtype=np.float64).reshape(count, dim))


def save_embeddings(table: EmbeddingTable, path) -> None:
    """Write ``table`` with ``repr`` floats so a reload is bit-identical."""
    out = [f"{len(table)} {table.dim}"]
    for tok, vec in zip(table.tokens, table.vectors):
        out.append(tok + " " + " ".join(repr(float(v)) for v in vec))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def embed_text(table: EmbeddingTable, tokens) -> np.ndarray:
    """Mean of the in-vocabulary token vectors."""
    ids = table.ids(tokens)
    if not ids:
        raise EmptyEmbeddingError(f"no in-vocabulary tokens in {list(tokens)!r}")
    return table.vectors[ids].mean(axis=0)


@dataclass(frozen=True)
class Instance:
    q1: str
    q2: str
    y: float | None = None
    cat1: str | None = None
    cat2: str | None = None

    @property
    def has_categories(self) -> bool:
        return self.cat1 is not None and self.cat2 is not None

    def swapped(self) -> "Instance":
        return Instance(self.q2, self.q1, self.y, self.cat2, self.cat1)


def assemble_features(table: EmbeddingTable, instance: Instance, layout: str = "Q+Q") -> np.ndarray:
    """Concatenate side 1 then side 2; each side is ``Q`` or ``Q ++ C``."""
    if layout not in LAYOUTS:
        raise ConfigError(f"unknown layout {layout!r}; choose from {LAYOUTS}")
    blocks = [embed_text(table, tokenize(instance.q1))]
    if layout == "QC+QC":
        if not instance.has_categories:
            raise InputError("layout QC+QC needs category paths on both queries")
        blocks.append(embed_text(table, tokenize_path(instance.cat1)))
    blocks.append(embed_text(table, tokenize(instance.q2)))
    if layout == "QC+QC":
        blocks.append(embed_text(table, tokenize_path(instance.cat2)))
    return np.concatenate(blocks)


def feature_dim(table: EmbeddingTable, layout: str) -> int:
    return table.dim * (2 if layout == "Q+Q" else 4)


def feature_matrix(table: EmbeddingTable, instances, layout: str = "Q+Q"):
    """Stack features for many instances.

    Returns ``(X, kept)`` where ``kept`` are indices of instances that could
    be embedded; all-OOV instances are dropped and counted in the log.
    """
    rows, kept = [], []
    for i, inst in enumerate(instances):
        try:
            rows.append(assemble_features(table, inst, layout))
        except EmptyEmbeddingError:
            continue
        kept.append(i)
    dropped = len(instances) - len(kept)
    if dropped:
        log.warning("dropped %d of %d instances with no in-vocabulary tokens", dropped, len(instances))
    X = np.array(rows, dtype=np.float64).reshape(len(rows), feature_dim(table, layout))
    return X, np.array(kept, dtype=np.int64)


def _parse_y(text: str, path, lineno) -> float:
    try:
        y = float(text)
    except ValueError:
        raise DataFormatError(f"similarity {text!r} is not a number", path, lineno) from None
    if not (0.0 < y <= 1.0):
        raise DataFormatError(f"similarity {y!r} outside (0, 1]", path, lineno)
    return y


def parse_dataset(path, has_categories: bool = False, *, strict: bool = True,
                  require_y: bool = True, skipped: list | None = None) -> list[Instance]:
    """Read a TSV dataset.

    With ``strict=False`` bad lines are skipped instead of raising; their
    errors are appended to ``skipped`` when a list is given.
    """
    path = Path(path)
    ncols = (4 if has_categories else 2) + (1 if require_y else 0)
    instances = []
    n_skipped = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            try:
                cols = line.split("\t")
                if len(cols) != ncols:
                    raise DataFormatError(f"expected {ncols} tab-separated columns, got {len(cols)}",
                                          path, lineno)
                if any(not c.strip() for c in cols):
                    raise DataFormatError("empty column", path, lineno)
                y = _parse_y(cols[-1], path, lineno) if require_y else None
                cats = (cols[2], cols[3]) if has_categories else (None, None)
                instances.append(Instance(cols[0], cols[1], y, *cats))
            except DataFormatError as exc:
                if strict:
                    raise
                n_skipped += 1
                if skipped is not None:
                    skipped.append(exc)
    if n_skipped:
        log.warning("skipped %d malformed lines in %s", n_skipped, path)
    if not instances:
        raise DataFormatError("dataset contains no instances", path)
    return instances


def format_instance(inst: Instance) -> str:
    cols = [inst.q1, inst.q2]
    if inst.has_categories:
        cols += [inst.cat1, inst.cat2]
    if inst.y is not None:
        cols.append(repr(float(inst.y)))
    return "\t".join(cols)


def write_dataset(instances, path) -> None:
    Path(path).write_text("".join(format_instance(i) + "\n" for i in instances), encoding="utf-8")


# -- synthetic data ----------------------------------------------------------

@dataclass(frozen=True)
class SynthConfig:
    vocab_size: int = 1000
    d: int = 32
    n_pairs: int = 10_000
    skew: float = 0.95
    seed: int = 0
    min_tokens: int = 2
    max_tokens: int = 6

    def validate(self) -> None:
        if self.vocab_size < 10:
            raise ConfigError("vocab_size must be >= 10")
        if self.d < 2:
            raise ConfigError("d must be >= 2")
        if self.n_pairs < 1:
            raise ConfigError("n_pairs must be >= 1")
        if not 0.0 <= self.skew <= 1.0:
            raise ConfigError("skew must lie in [0, 1]")
        if not 1 <= self.min_tokens <= self.max_tokens < self.vocab_size:
            raise ConfigError("need 1 <= min_tokens <= max_tokens < vocab_size")


def cosine(a, b) -> float:
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def generate_synthetic(config: SynthConfig) -> tuple[EmbeddingTable, list[Instance]]:
    """Random unit-vector vocabulary plus query pairs labelled by cosine similarity.

    ``q1`` has ``min_tokens..max_tokens`` distinct tokens. ``q2`` keeps each
    ``q1`` token with probability ``skew`` and swaps the rest for random
    tokens; when that reproduces ``q1`` exactly, one random token is appended
    so that ``y < 1`` and the similarity distribution has no ties. ``y`` is
    the cosine of the two mean-pooled queries, floored at ``1e-6``. Pairs are
    unique.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    V, d = config.vocab_size, config.d
    vectors = rng.standard_normal((V, d))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    width = len(str(V - 1))
    table = EmbeddingTable([f"w{i:0{width}d}" for i in range(V)], vectors)

    instances, seen = [], set()
    while len(instances) < config.n_pairs:
        length = int(rng.integers(config.min_tokens, config.max_tokens + 1))
        q1 = rng.choice(V, size=length, replace=False)
        keep = rng.random(length) < config.skew
        q2 = np.where(keep, q1, rng.integers(0, V, size=length))
        if sorted(q2.tolist()) == sorted(q1.tolist()):
            q2 = np.append(q2, rng.integers(0, V))
        t1 = " ".join(table.tokens[i] for i in q1)
        t2 = " ".join(table.tokens[i] for i in q2)
        if (t1, t2) in seen:
            continue
        seen.add((t1, t2))
        y = cosine(table.vectors[q1].mean(axis=0), table.vectors[q2].mean(axis=0))
        instances.append(Instance(t1, t2, min(max(y, Y_FLOOR), 1.0)))
    return table, instances


def split_sizes(instances, sizes, seed: int = 0) -> list[list[Instance]]:
    """Shuffle once, then cut consecutive disjoint parts of the given sizes."""
    if sum(sizes) > len(instances) or min(sizes) < 0:
        raise InputError(f"cannot cut parts {list(sizes)} from {len(instances)} instances")
    order = np.random.default_rng(seed).permutation(len(instances))
    parts, start = [], 0
    for size in sizes:
        parts.append([instances[i] for i in order[start:start + size]])
        start += size
    return parts


def split_622(instances, seed: int = 0):
    """Train/validation/test split at 6:2:2; the test part takes the rounding remainder."""
    n = len(instances)
    n_train, n_val = (6 * n) // 10, (2 * n) // 10
    return tuple(split_sizes(instances, (n_train, n_val, n - n_train - n_val), seed))
