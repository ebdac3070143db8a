"""Dataset ingestion, synthetic benchmark generation, serialization.

Supported formats: comma-separated values (optional header detected by a
non-numeric first row, configurable label column, '#' comment lines) and
sparse "label idx:val ..." text with 1-based indices.  Values are written
with 17 significant digits so a save/load round trip is bit exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DataError, Dataset

_INLIER_OFFSET = 2.0       # class clouds centered at +-2 e1
_CLUSTER_SIGMA = 0.25      # family-A outlier cluster spread
_CLUSTER_DIST = (6.0, 10.0)  # family-A cluster center distance from origin
_BOX_INFLATE = 1.5         # family-B outlier box inflation factor


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic instance.

    Family "A" plants the flipped-label samples in a single tight cluster
    far from the data; family "B" scatters them uniformly over the inflated
    bounding box of the remaining samples.
    """

    n: int
    m: int
    family: str
    outlier_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("need n >= 1 and m >= 1")
        if self.family not in ("A", "B"):
            raise ValueError(f"family must be 'A' or 'B', got {self.family!r}")
        if not 0.0 <= self.outlier_fraction <= 0.5:
            raise ValueError("outlier_fraction must lie in [0, 0.5]")
        if self.n < 2 * self.m:
            warnings.warn(
                f"n={self.n} below the recommended 2*m={2 * self.m}",
                stacklevel=2,
            )


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Draw one instance: two Gaussian class clouds plus planted outliers.

    Classes are balanced to within one sample, clouds are unit-variance
    Gaussians centered at +-2 along the first axis, and floor(fraction * n)
    samples get flipped labels and family-specific positions.  The draw is
    a pure function of the spec, including its seed.
    """
    rng = np.random.default_rng(spec.seed)
    n, m = spec.n, spec.m
    n_neg = n // 2
    n_pos = n - n_neg
    labels = np.concatenate([np.ones(n_pos), -np.ones(n_neg)])
    features = rng.standard_normal((n, m))
    features[:n_pos, 0] += _INLIER_OFFSET
    features[n_pos:, 0] -= _INLIER_OFFSET

    n_out = int(math.floor(spec.outlier_fraction * n))
    if n_out:
        chosen = np.sort(rng.choice(n, size=n_out, replace=False))
        labels[chosen] *= -1.0
        if spec.family == "A":
            direction = rng.standard_normal(m)
            while np.linalg.norm(direction) < 1e-12:
                direction = rng.standard_normal(m)
            direction /= np.linalg.norm(direction)
            center = rng.uniform(*_CLUSTER_DIST) * direction
            for i in chosen:
                # redraw until inside 4 sigma so the cluster is provably tight
                offset = rng.standard_normal(m) * _CLUSTER_SIGMA
                while np.linalg.norm(offset) > 4.0 * _CLUSTER_SIGMA:
                    offset = rng.standard_normal(m) * _CLUSTER_SIGMA
                features[i] = center + offset
        else:
            keep = np.setdiff1d(np.arange(n), chosen)
            lo = features[keep].min(axis=0)
            hi = features[keep].max(axis=0)
            mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0 * _BOX_INFLATE
            features[chosen] = rng.uniform(
                mid - half, mid + half, size=(n_out, m)
            )

    name = f"type{spec.family}_n{n}_m{m}_seed{spec.seed}"
    return Dataset(features, labels, name=name)


def load_csv(path, label_column: int = -1) -> Dataset:
    """Read a delimited file into a dataset.

    Labels may be encoded as -1/+1 or 0/1 (0 maps to -1).  Malformed rows
    are rejected with their file line number; every feature must be finite.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    name = path.stem
    rows: list[list[float]] = []
    line_nos: list[int] = []
    width = None
    header_allowed = True
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("name:"):
                    name = body[len("name:"):].strip() or name
                continue
            fields = [f.strip() for f in line.split(",")]
            try:
                values = [float(f) for f in fields]
            except ValueError:
                if header_allowed:
                    header_allowed = False
                    continue
                bad = next(f for f in fields if not _is_number(f))
                raise DataError(f"row {lineno}: non-numeric value {bad!r}")
            header_allowed = False
            if width is None:
                width = len(values)
                if width < 2:
                    raise DataError(
                        f"row {lineno}: need at least one feature and a label"
                    )
            elif len(values) != width:
                raise DataError(
                    f"row {lineno}: expected {width} fields, got {len(values)}"
                )
            if not all(math.isfinite(v) for v in values):
                raise DataError(f"row {lineno}: non-finite value")
            rows.append(values)
            line_nos.append(lineno)
    if not rows:
        raise DataError(f"{path}: no data rows")

    arr = np.asarray(rows)
    col = label_column if label_column >= 0 else arr.shape[1] + label_column
    if not 0 <= col < arr.shape[1]:
        raise DataError(f"label column {label_column} out of range")
    raw_labels = arr[:, col]
    features = np.delete(arr, col, axis=1)
    labels = _map_labels(raw_labels, line_nos)
    return Dataset(features, labels, name=name)


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def _map_labels(raw: np.ndarray, line_nos: list[int]) -> np.ndarray:
    values = set(np.unique(raw))
    if values <= {-1.0, 1.0}:
        return raw
    if values <= {0.0, 1.0}:
        return np.where(raw == 0.0, -1.0, 1.0)
    # neither encoding fits; blame the first row breaking the strict one
    for v, lineno in zip(raw, line_nos):
        if v not in (-1.0, 1.0):
            raise DataError(f"row {lineno}: label {v:g} not mappable to -1/+1")
    raise DataError("labels not mappable to -1/+1")


def load_libsvm(path) -> Dataset:
    """Read sparse "label idx:val ..." lines with 1-based indices.

    The feature count is the largest index seen; absent entries are zero.
    Labels must be one of -1, +1, 0, 1 (0 maps to -1).
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    samples: list[dict[int, float]] = []
    labels: list[float] = []
    m = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                lab = float(tokens[0])
            except ValueError:
                raise DataError(f"line {lineno}: bad label {tokens[0]!r}")
            if lab not in (-1.0, 1.0, 0.0):
                raise DataError(
                    f"line {lineno}: label {tokens[0]} not in {{-1,+1,0,1}}"
                )
            entries: dict[int, float] = {}
            for tok in tokens[1:]:
                idx_str, _, val_str = tok.partition(":")
                try:
                    idx = int(idx_str)
                    val = float(val_str)
                except ValueError:
                    raise DataError(f"line {lineno}: malformed token {tok!r}")
                if idx < 1:
                    raise DataError(
                        f"line {lineno}: index {idx} must be positive"
                    )
                if idx in entries:
                    raise DataError(f"line {lineno}: duplicate index {idx}")
                if not math.isfinite(val):
                    raise DataError(f"line {lineno}: non-finite value {tok!r}")
                entries[idx] = val
                m = max(m, idx)
            samples.append(entries)
            labels.append(-1.0 if lab == 0.0 else lab)
    if not samples:
        raise DataError(f"{path}: no data rows")
    if m == 0:
        raise DataError(f"{path}: no feature indices present")
    features = np.zeros((len(samples), m))
    for i, entries in enumerate(samples):
        for idx, val in entries.items():
            features[i, idx - 1] = val
    return Dataset(features, np.asarray(labels), name=path.stem)


def save_dataset(dataset: Dataset, path) -> None:
    """Write features plus a trailing label column, 17 significant digits.

    The name travels in a '#' comment so a reload reproduces the dataset
    exactly; unnamed datasets pick up the file stem on reload.
    """
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            if dataset.name:
                fh.write(f"# name: {dataset.name}\n")
            for row, label in zip(dataset.features, dataset.labels):
                cells = [f"{v:.17g}" for v in row] + [f"{int(label):d}"]
                fh.write(",".join(cells) + "\n")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc
