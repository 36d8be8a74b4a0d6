"""Dataset ingestion (libsvm text format), feature scaling, seeded splits."""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

SCALE_MODES = ("none", "minmax", "zscore")


class LibsvmParseError(ValueError):
    """Malformed libsvm input; carries the offending 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Dataset:
    """Dense feature matrix with labels in {-1, +1}.

    Arrays are frozen (non-writeable views) so trainers cannot mutate the
    data they were handed.
    """

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        y = np.ascontiguousarray(np.asarray(self.labels, dtype=np.float64))
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"features must be a nonempty 2-D matrix, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValueError(f"labels shape {y.shape} does not match {X.shape[0]} rows")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must contain only -1 and +1")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class SplitSpec:
    """Train fraction in (0, 1) plus the shuffle seed."""

    train_fraction: float = 0.75
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")


def _map_label(raw: float, label_map: Mapping[float, int] | None, line_no: int) -> float:
    if label_map is not None:
        for key, val in label_map.items():
            if raw == float(key):
                if val not in (-1, 1):
                    raise LibsvmParseError(line_no, f"label map target must be -1 or +1, got {val}")
                return float(val)
        raise LibsvmParseError(line_no, f"label {raw:g} not covered by label map")
    if raw == 1.0 or raw == -1.0:
        return raw
    raise LibsvmParseError(
        line_no, f"label {raw:g} is not in {{-1,+1}}; pass a label_map to coerce it"
    )


def parse_libsvm(
    text: str | Iterable[str],
    label_map: Mapping[float, int] | None = None,
    n_features: int | None = None,
) -> Dataset:
    """Parse sparse libsvm text (``<label> <idx>:<val> ...``) into a dense Dataset.

    Indices are 1-based and must be strictly increasing within a line; absent
    indices densify to 0. Labels other than +-1 are errors unless a
    ``label_map`` (raw value -> +-1) covers them. ``n_features`` widens the
    matrix beyond the max index seen (needed to align test files with train).
    """
    if isinstance(text, str):
        lines: Iterable[str] = io.StringIO(text)
    else:
        lines = text

    labels: list[float] = []
    rows: list[list[tuple[int, float]]] = []
    max_idx = 0
    for line_no, raw_line in enumerate(lines, start=1):
        line = raw_line.strip()
        if not line:
            continue
        parts = line.split()
        try:
            raw_label = float(parts[0])
        except ValueError:
            raise LibsvmParseError(line_no, f"invalid label token {parts[0]!r}") from None
        labels.append(_map_label(raw_label, label_map, line_no))

        feats: list[tuple[int, float]] = []
        prev_idx = 0
        for tok in parts[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise LibsvmParseError(line_no, f"invalid feature token {tok!r}")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise LibsvmParseError(line_no, f"invalid feature token {tok!r}") from None
            if idx < 1:
                raise LibsvmParseError(line_no, f"feature index must be >= 1, got {idx}")
            if idx <= prev_idx:
                raise LibsvmParseError(
                    line_no, f"feature indices must be strictly increasing ({idx} after {prev_idx})"
                )
            prev_idx = idx
            feats.append((idx, val))
        max_idx = max(max_idx, prev_idx)
        rows.append(feats)

    if not rows:
        raise LibsvmParseError(0, "empty input")

    d = max(max_idx, n_features or 0)
    if d < 1:
        raise LibsvmParseError(0, "no feature indices found and n_features not given")
    if n_features is not None and max_idx > n_features:
        raise LibsvmParseError(0, f"feature index {max_idx} exceeds n_features={n_features}")

    X = np.zeros((len(rows), d))
    for i, feats in enumerate(rows):
        for idx, val in feats:
            X[i, idx - 1] = val
    return Dataset(X, np.asarray(labels))


def load_libsvm(
    path, label_map: Mapping[float, int] | None = None, n_features: int | None = None
) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_libsvm(fh, label_map=label_map, n_features=n_features)


def write_libsvm(ds: Dataset) -> str:
    """Serialize a Dataset back to libsvm text (zeros omitted)."""
    out = []
    for row, label in zip(ds.features, ds.labels):
        toks = [f"{int(label):+d}"]
        toks.extend(f"{j + 1}:{float(row[j])!r}" for j in np.flatnonzero(row != 0.0))
        out.append(" ".join(toks))
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class ScalerParams:
    """Per-column affine transform x -> (x - shift) * scale, fit on one split."""

    mode: str
    shift: np.ndarray
    scale: np.ndarray


def fit_scaler(ds: Dataset, mode: str) -> ScalerParams:
    if mode not in SCALE_MODES:
        raise ValueError(f"unknown scaling mode {mode!r}")
    X = ds.features
    if mode == "none":
        shift = np.zeros(ds.d)
        scale = np.ones(ds.d)
    elif mode == "minmax":
        lo = X.min(axis=0)
        hi = X.max(axis=0)
        span = hi - lo
        const = span == 0.0
        # map [lo, hi] onto [-1, 1]; constant columns collapse to 0
        scale = np.where(const, 0.0, 2.0 / np.where(const, 1.0, span))
        shift = np.where(const, lo, (lo + hi) / 2.0)
    else:
        if ds.n < 2:
            raise ValueError("zscore scaling needs at least 2 rows")
        mean = X.mean(axis=0)
        sigma = X.std(axis=0)  # population std
        const = sigma == 0.0
        scale = np.where(const, 0.0, 1.0 / np.where(const, 1.0, sigma))
        shift = mean
    return ScalerParams(mode, shift, scale)


def apply_scaler(ds: Dataset, params: ScalerParams) -> Dataset:
    if params.mode == "none":
        return ds
    X = (ds.features - params.shift) * params.scale
    return Dataset(X, ds.labels)


def scale_features(ds: Dataset, mode: str) -> Dataset:
    """Fit-and-apply convenience; the harness fits on train and applies to test."""
    return apply_scaler(ds, fit_scaler(ds, mode))


def _fisher_yates(n: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Deterministic shuffled split; |train| = round(train_fraction * n).

    The round result is clamped to [1, n-1] so both parts are nonempty.
    """
    if ds.n < 2:
        raise ValueError("need at least 2 examples to split")
    perm = _fisher_yates(ds.n, spec.seed)
    n_train = int(round(spec.train_fraction * ds.n))
    n_train = min(max(n_train, 1), ds.n - 1)
    tr, te = perm[:n_train], perm[n_train:]
    return (
        Dataset(ds.features[tr], ds.labels[tr]),
        Dataset(ds.features[te], ds.labels[te]),
    )
