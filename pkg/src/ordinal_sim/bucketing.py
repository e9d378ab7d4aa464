"""Variable-width buckets over similarity values in (0, 1].

A :class:`BucketScheme` partitions (0, 1] into K half-open intervals
``(b_j, b_{j+1}]``; label ``j`` is the ordinal label of bucket ``j`` and
higher labels mean higher similarity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, DegenerateSchemeError, InputError

SCHEME_FORMAT = "ordinal-sim-scheme/1"

PAPER_BOUNDARIES = (0.0, 0.82, 0.90, 0.95, 0.97, 1.0)


@dataclass(frozen=True)
class BucketScheme:
    boundaries: tuple[float, ...]

    def __post_init__(self):
        b = tuple(float(v) for v in self.boundaries)
        object.__setattr__(self, "boundaries", b)
        if len(b) < 3:
            raise InputError(f"a scheme needs at least 2 buckets, got {len(b) - 1}")
        if b[0] != 0.0 or b[-1] != 1.0:
            raise InputError(f"boundaries must start at 0 and end at 1, got {b[0]!r}..{b[-1]!r}")
        if any(not math.isfinite(v) for v in b):
            raise InputError("boundaries must be finite")
        if any(hi <= lo for lo, hi in zip(b, b[1:])):
            raise InputError(f"boundaries must be strictly increasing: {list(b)}")
        if any(not lo < (lo + hi) / 2 < hi for lo, hi in zip(b, b[1:])):
            raise InputError("a bucket is too narrow to hold its midpoint in floating point")

    @property
    def K(self) -> int:
        return len(self.boundaries) - 1

    @property
    def midpoints(self) -> tuple[float, ...]:
        b = self.boundaries
        return tuple((b[j] + b[j + 1]) / 2 for j in range(self.K))

    @property
    def midpoint_array(self) -> np.ndarray:
        return np.asarray(self.midpoints, dtype=np.float64)

    def labels(self, y) -> np.ndarray:
        """Vectorised :func:`map_to_label`; returns an int64 array."""
        y = np.asarray(y, dtype=np.float64)
        if not np.all(np.isfinite(y)):
            raise InputError("similarity values must be finite")
        # side="left" puts a value equal to b_j into bucket j-1 (right-closed intervals),
        # and clamps y <= 0 to 0 and y > 1 to K-1.
        inner = np.asarray(self.boundaries[1:-1])
        return np.searchsorted(inner, y, side="left").astype(np.int64)

    def to_dict(self) -> dict:
        return {"format": SCHEME_FORMAT, "K": self.K, "boundaries": list(self.boundaries)}


def paper_scheme() -> BucketScheme:
    """The fixed five-bucket scheme ``(0, .82], (.82, .90], (.90, .95], (.95, .97], (.97, 1]``."""
    return BucketScheme(PAPER_BOUNDARIES)


def map_to_label(scheme: BucketScheme, y: float) -> int:
    """Ordinal label of similarity ``y``; values outside (0, 1] clamp to the end labels."""
    y = float(y)
    if not math.isfinite(y):
        raise InputError(f"similarity must be finite, got {y!r}")
    return int(scheme.labels(y))


def midpoint(scheme: BucketScheme, label: int) -> float:
    if isinstance(label, bool) or not 0 <= int(label) < scheme.K or int(label) != label:
        raise InputError(f"label {label!r} out of range for K={scheme.K}")
    return scheme.midpoints[int(label)]


def derive_quantile_scheme(similarities, K: int) -> BucketScheme:
    """Equal-frequency scheme from nearest-rank empirical quantiles.

    The boundary for fraction ``j/K`` is the ``ceil(j*n/K)``-th smallest
    value, so with distinct values every bucket holds ``floor(n/K)`` or
    ``ceil(n/K)`` of them.
    """
    if isinstance(K, bool) or int(K) != K or K < 2:
        raise InputError(f"K must be an integer >= 2, got {K!r}")
    K = int(K)
    values = np.asarray(similarities, dtype=np.float64).ravel()
    if values.size == 0:
        raise InputError("cannot derive a scheme from an empty list")
    if not np.all(np.isfinite(values)) or np.any(values <= 0.0) or np.any(values > 1.0):
        raise InputError("similarities must lie in (0, 1]")
    if np.unique(values).size < K:
        raise DegenerateSchemeError(
            f"need at least {K} distinct similarity values, got {np.unique(values).size}"
        )
    ordered = np.sort(values)
    n = ordered.size
    cuts = [ordered[math.ceil(j * n / K) - 1] for j in range(1, K)]
    boundaries = sorted({0.0, 1.0, *(float(c) for c in cuts)})
    if len(boundaries) != K + 1:
        raise DegenerateSchemeError(
            f"quantile boundaries collapse to {len(boundaries) - 1} buckets (wanted {K}); "
            "too many tied similarity values"
        )
    try:
        return BucketScheme(tuple(boundaries))
    except InputError as exc:
        raise DegenerateSchemeError(str(exc)) from exc


def bucket_counts(scheme: BucketScheme, y) -> np.ndarray:
    return np.bincount(scheme.labels(y), minlength=scheme.K)


def save_scheme(scheme: BucketScheme, path) -> None:
    Path(path).write_text(json.dumps(scheme.to_dict(), indent=2) + "\n", encoding="utf-8")


def scheme_from_dict(doc: dict, source=None) -> BucketScheme:
    if not isinstance(doc, dict) or doc.get("format") != SCHEME_FORMAT:
        raise DataFormatError(f"not a bucket scheme document (expected format {SCHEME_FORMAT!r})", source)
    try:
        scheme = BucketScheme(tuple(doc["boundaries"]))
    except (KeyError, TypeError, InputError) as exc:
        raise DataFormatError(f"invalid scheme: {exc}", source) from exc
    if doc.get("K", scheme.K) != scheme.K:
        raise DataFormatError(f"K={doc['K']} disagrees with {scheme.K + 1} boundaries", source)
    return scheme


def load_scheme(path) -> BucketScheme:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc}", path) from exc
    return scheme_from_dict(doc, path)
