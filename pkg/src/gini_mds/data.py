"""Dataset loading, preprocessing, contamination and simulated heavy-tailed data.

Random streams
--------------
Every random draw comes from a PCG64 generator seeded with
``SeedSequence([seed, experiment, replication, column])`` (see :func:`stream`).
The experiment ids are the ``EXPERIMENT_*`` constants below, so contamination
and simulation never share a stream even when given the same user seed.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DataParseError, DegenerateInputError, InvalidConfigError, InvalidInputError

__all__ = [
    "Dataset",
    "ContaminationSpec",
    "SimSpec",
    "stream",
    "load_csv",
    "write_csv",
    "standardize",
    "contaminate",
    "gen_heavy_tailed",
    "atomic_write",
]

EXPERIMENT_CONTAMINATION = 1
EXPERIMENT_SIMULATION = 2

STANDARDIZATION_MODES = ("none", "mean_unit", "median_unit")
CONTAMINATION_MODES = ("multiply_by_factor_sigma", "add_factor_sigma")


def stream(seed: int, experiment: int, replication: int = 0, column: int = 0) -> np.random.Generator:
    """Independent, reproducible generator for one (experiment, replication, column) cell."""
    keys = [int(seed) & 0xFFFFFFFFFFFFFFFF, int(experiment), int(replication), int(column)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(keys)))


@dataclass
class Dataset:
    X: np.ndarray
    labels: Optional[np.ndarray] = None
    feature_names: Optional[list] = None
    label_names: Optional[list] = None
    label_column: Optional[str] = None
    standardization: str = "none"
    centers: Optional[np.ndarray] = None
    scales: Optional[np.ndarray] = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise InvalidInputError(f"X must be 2-D, got shape {self.X.shape}")
        if not np.all(np.isfinite(self.X)):
            raise InvalidInputError("X contains non-finite entries")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.X.shape[0],):
                raise InvalidInputError(
                    f"labels must have length {self.X.shape[0]}, got {self.labels.shape}"
                )

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def names(self) -> list:
        return list(self.feature_names) if self.feature_names else [f"x{j + 1}" for j in range(self.d)]


@dataclass(frozen=True)
class ContaminationSpec:
    fraction: float = 0.02
    factor: float = 10.0
    seed: int = 0
    mode: str = "multiply_by_factor_sigma"
    replication: int = 0

    def __post_init__(self):
        if not 0.0 <= float(self.fraction) <= 1.0:
            raise InvalidConfigError(f"fraction must lie in [0, 1], got {self.fraction}")
        if self.mode not in CONTAMINATION_MODES:
            raise InvalidConfigError(f"unknown contamination mode {self.mode!r}")


def _normal_with_outliers(rng, n, share=0.05, scale=10.0):
    x = rng.standard_normal(n)
    k = _round_half_up(share * n)
    idx = rng.choice(n, size=k, replace=False)
    x[idx] = rng.normal(0.0, scale, size=k)
    return x


HEAVY_TAILED_RECIPE: tuple = (
    ("normal_5pct_outliers", _normal_with_outliers),
    ("cauchy", lambda rng, n: rng.standard_cauchy(n)),
    ("weibull_0.5", lambda rng, n: rng.weibull(0.5, n)),
    # numpy's pareto is the Lomax form; shifting by 1 gives minimum 1, mean alpha/(alpha-1).
    ("pareto_2", lambda rng, n: rng.pareto(2.0, n) + 1.0),
    ("student_t_2", lambda rng, n: rng.standard_t(2.0, n)),
    ("lognormal_1.5", lambda rng, n: rng.lognormal(0.0, 1.5, n)),
)


@dataclass(frozen=True)
class SimSpec:
    n: int = 500
    d: int = 6
    seed: int = 0
    replication: int = 0
    recipe: tuple = field(default=HEAVY_TAILED_RECIPE)

    def __post_init__(self):
        if self.n < 2:
            raise InvalidConfigError(f"n must be >= 2, got {self.n}")
        if self.d != len(self.recipe):
            raise InvalidConfigError(f"d={self.d} does not match a recipe of {len(self.recipe)} columns")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _parse_cell(text, row, col):
    try:
        value = float(text)
    except ValueError:
        raise DataParseError(f"non-numeric cell {text!r}", row=row, column=col) from None
    if not math.isfinite(value):
        raise DataParseError(f"non-finite cell {text!r}", row=row, column=col)
    return value


def _factorize(values):
    codes, names, seen = [], [], {}
    for v in values:
        if v not in seen:
            seen[v] = len(names)
            names.append(v)
        codes.append(seen[v])
    return np.asarray(codes, dtype=np.int64), names


def load_csv(path, has_header: bool = True, label_column=None) -> Dataset:
    """Read a rectangular numeric CSV.

    ``label_column`` may be a header name or a 0-based column index.  Labels are
    factorized to ``0..C-1`` in order of first appearance.  Rows and columns in
    error messages are 1-based file positions.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataParseError(f"{path}: empty file")
    header = None
    first_line = 1
    if has_header:
        header = [h.strip() for h in rows[0]]
        rows = rows[1:]
        first_line = 2
    if not rows:
        raise DataParseError(f"{path}: no data rows")
    width = len(header) if header is not None else len(rows[0])
    for k, r in enumerate(rows):
        if len(r) != width:
            raise DataParseError(f"{path}: expected {width} fields, found {len(r)}", row=first_line + k)

    label_idx = None
    if label_column is not None:
        if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
            if header is None or label_column not in header:
                raise DataParseError(f"{path}: label column {label_column!r} not found")
            label_idx = header.index(label_column)
        else:
            label_idx = int(label_column)
            if label_idx < 0:
                label_idx += width
            if not 0 <= label_idx < width:
                raise DataParseError(f"{path}: label column index {label_column} out of range")

    feat_idx = [j for j in range(width) if j != label_idx]
    if not feat_idx:
        raise DataParseError(f"{path}: no feature columns")
    X = np.empty((len(rows), len(feat_idx)))
    for k, r in enumerate(rows):
        for c, j in enumerate(feat_idx):
            X[k, c] = _parse_cell(r[j].strip(), first_line + k, j + 1)

    labels = label_names = label_name = None
    if label_idx is not None:
        labels, label_names = _factorize([r[label_idx].strip() for r in rows])
        label_name = header[label_idx] if header is not None else "label"
    names = [header[j] for j in feat_idx] if header is not None else None
    return Dataset(X=X, labels=labels, feature_names=names, label_names=label_names,
                   label_column=label_name)


def _format(value: float) -> str:
    return format(float(value), ".17g")


def dataset_to_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ds.names()
    if ds.labels is not None:
        header.append(ds.label_column or "label")
    w.writerow(header)
    for i in range(ds.n):
        row = [_format(v) for v in ds.X[i]]
        if ds.labels is not None:
            code = int(ds.labels[i])
            row.append(ds.label_names[code] if ds.label_names else str(code))
        w.writerow(row)
    return buf.getvalue()


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(ds: Dataset, path) -> None:
    """Write features (17 significant digits) and labels with a header row."""
    atomic_write(path, dataset_to_csv(ds))


def standardize(ds: Dataset, mode: str = "mean_unit", skip_zero_scale: bool = False) -> Dataset:
    """Centre each feature (mean or median) and divide by its standard deviation.

    The standard deviation is the population one (``ddof=0``).  Centers and
    scales are stored on the returned dataset so the transform can be undone.
    """
    if mode not in STANDARDIZATION_MODES:
        raise InvalidConfigError(f"unknown standardization {mode!r}; choose from {STANDARDIZATION_MODES}")
    if mode == "none":
        return replace(ds, standardization="none", centers=np.zeros(ds.d), scales=np.ones(ds.d))
    X = ds.X
    centers = X.mean(axis=0) if mode == "mean_unit" else np.median(X, axis=0)
    scales = X.std(axis=0)
    zero = scales <= 0
    if np.any(zero):
        if not skip_zero_scale:
            bad = [ds.names()[j] for j in np.flatnonzero(zero)]
            raise DegenerateInputError(f"zero-variance feature(s): {', '.join(bad)}")
        scales = np.where(zero, 1.0, scales)
    return replace(ds, X=(X - centers) / scales, standardization=mode,
                   centers=centers, scales=scales)


def contaminate(ds: Dataset, spec: ContaminationSpec):
    """Scale a seeded random subset of rows by ``factor`` times each feature's std.

    Returns the new dataset and the sorted indices of the altered rows.
    """
    n = ds.n
    k = _round_half_up(float(spec.fraction) * n)
    rng = stream(spec.seed, EXPERIMENT_CONTAMINATION, spec.replication)
    rows = np.sort(rng.choice(n, size=k, replace=False)) if k else np.empty(0, dtype=np.int64)
    sigma = ds.X.std(axis=0)
    X = ds.X.copy()
    if k:
        if spec.mode == "multiply_by_factor_sigma":
            X[rows] = X[rows] * (spec.factor * sigma)
        else:
            X[rows] = X[rows] + spec.factor * sigma
    return replace(ds, X=X), rows


def gen_heavy_tailed(spec: SimSpec = SimSpec()) -> Dataset:
    """Simulated n x 6 heavy-tailed features with a median-split binary label.

    Columns, in order: standard normal with 5% of entries redrawn from
    N(0, 10^2), Cauchy(0, 1), Weibull(shape 0.5), Pareto(shape 2, minimum 1),
    Student-t with 2 df, and log-normal(0, 1.5^2).  Column ``j`` draws from its
    own stream, so changing one recipe entry leaves the others untouched.
    """
    cols = []
    for j, (_, draw) in enumerate(spec.recipe):
        rng = stream(spec.seed, EXPERIMENT_SIMULATION, spec.replication, j)
        cols.append(np.asarray(draw(rng, spec.n), dtype=np.float64))
    X = np.column_stack(cols)
    labels = (X[:, 0] > np.median(X[:, 0])).astype(np.int64)
    names = [name for name, _ in spec.recipe]
    return Dataset(X=X, labels=labels, feature_names=names, label_names=["0", "1"], label_column="y")


def row_subset(ds: Dataset, rows: Sequence[int]) -> Dataset:
    rows = np.asarray(rows)
    return replace(ds, X=ds.X[rows], labels=None if ds.labels is None else ds.labels[rows])
