"""Label-distance evaluation: MALE, MSE and per-bucket confusion counts."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bucketing import BucketScheme
from .errors import DataFormatError, InputError

REPORT_FORMAT = "ordinal-sim-report/1"


def male(actual_labels, predicted_labels) -> float:
    """Mean absolute label error ``mean(|predicted - actual|)``."""
    a = np.asarray(actual_labels, dtype=np.int64).ravel()
    p = np.asarray(predicted_labels, dtype=np.int64).ravel()
    if a.size == 0:
        raise InputError("empty label list")
    if a.shape != p.shape:
        raise InputError(f"{a.size} actual labels but {p.size} predicted")
    return float(np.abs(p - a).sum() / a.size)


def confusion_matrix(actual_labels, predicted_labels, K: int) -> np.ndarray:
    """K x K counts indexed ``[actual, predicted]``."""
    a = np.asarray(actual_labels, dtype=np.int64).ravel()
    p = np.asarray(predicted_labels, dtype=np.int64).ravel()
    if a.shape != p.shape:
        raise InputError(f"{a.size} actual labels but {p.size} predicted")
    if a.size and (min(a.min(), p.min()) < 0 or max(a.max(), p.max()) >= K):
        raise InputError(f"labels must lie in [0, {K - 1}]")
    return np.bincount(a * K + p, minlength=K * K).reshape(K, K)


def male_from_confusion(confusion) -> float:
    c = np.asarray(confusion)
    K = c.shape[0]
    dist = np.abs(np.arange(K)[:, None] - np.arange(K)[None, :])
    return float((c * dist).sum() / c.sum())


@dataclass(frozen=True)
class EvalReport:
    n: int
    K: int
    male: float
    mse: float
    confusion: np.ndarray
    hist_actual: np.ndarray
    hist_predicted: np.ndarray

    def to_text(self) -> str:
        """Fixed-order ``key = value`` lines; reals use 17 significant digits."""
        lines = [
            f"format = {REPORT_FORMAT}",
            f"n = {self.n}",
            f"K = {self.K}",
            f"male = {self.male:.17g}",
            f"mse = {self.mse:.17g}",
            "confusion = " + " ".join(str(int(v)) for v in self.confusion.ravel()),
            "hist_actual = " + " ".join(str(int(v)) for v in self.hist_actual),
            "hist_predicted = " + " ".join(str(int(v)) for v in self.hist_predicted),
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, source=None) -> "EvalReport":
        fields = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            key, sep, value = line.partition(" = ")
            if not sep:
                raise DataFormatError("expected 'key = value'", source, lineno)
            fields[key.strip()] = value.strip()
        if fields.get("format") != REPORT_FORMAT:
            raise DataFormatError(f"not an evaluation report ({REPORT_FORMAT})", source)
        try:
            K = int(fields["K"])
            return cls(
                n=int(fields["n"]),
                K=K,
                male=float(fields["male"]),
                mse=float(fields["mse"]),
                confusion=np.array(fields["confusion"].split(), dtype=np.int64).reshape(K, K),
                hist_actual=np.array(fields["hist_actual"].split(), dtype=np.int64),
                hist_predicted=np.array(fields["hist_predicted"].split(), dtype=np.int64),
            )
        except (KeyError, ValueError) as exc:
            raise DataFormatError(f"malformed report: {exc}", source) from exc


def evaluate(yhat, y, scheme: BucketScheme) -> EvalReport:
    """Map predictions and targets to labels with ``scheme`` and summarise.

    Predictions outside (0, 1] clamp to the end labels; MSE uses the raw values.
    """
    yhat = np.asarray(yhat, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size == 0:
        raise InputError("nothing to evaluate")
    if yhat.shape != y.shape:
        raise InputError(f"{yhat.size} predictions for {y.size} targets")
    if np.any(y <= 0.0) or np.any(y > 1.0):
        raise InputError("targets must lie in (0, 1]")
    actual = scheme.labels(y)
    predicted = scheme.labels(yhat)
    K = scheme.K
    confusion = confusion_matrix(actual, predicted, K)
    diff = yhat - y
    return EvalReport(
        n=int(y.size),
        K=K,
        male=male(actual, predicted),
        mse=float(np.mean(diff * diff)),
        confusion=confusion,
        hist_actual=confusion.sum(axis=1),
        hist_predicted=confusion.sum(axis=0),
    )


def write_report(report: EvalReport, path) -> None:
    Path(path).write_text(report.to_text(), encoding="utf-8")


def read_report(path) -> EvalReport:
    return EvalReport.from_text(Path(path).read_text(encoding="utf-8"), path)
