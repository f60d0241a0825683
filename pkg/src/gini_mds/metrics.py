"""Midranks and the Gini distance family.

The base pseudo-distance weights each coordinate gap ``x_j - y_j`` by how far
its midrank sits from the centre rank ``(d + 1) / 2``.  The generalized form
replaces the centred rank by a power ``nu - 1`` of the empirical survival
function of the gap vector, estimated with Hazen plotting positions so that
``nu = 2`` recovers the base pseudo-distance exactly.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import InvalidInputError, InvalidParameterError

__all__ = [
    "GiniParams",
    "SurvivalVector",
    "midrank",
    "gini_norm",
    "gini_pseudo_distance",
    "empirical_survival",
    "gen_gini_directed",
    "gen_gini_distance",
    "pairwise_matrix",
    "pair_ranks",
    "gini_condensed",
    "validate_distance_matrix",
]

SURVIVAL_AT_ZERO = 0.5


@dataclass(frozen=True)
class GiniParams:
    """Distribution-weight hyperparameter of the generalized Gini distance."""

    nu: float = 2.0

    def __post_init__(self):
        nu = float(self.nu)
        if not np.isfinite(nu) or nu <= 1.0:
            raise InvalidParameterError(f"nu must be a finite real > 1, got {self.nu!r}")
        object.__setattr__(self, "nu", nu)


@dataclass(frozen=True)
class SurvivalVector:
    values: np.ndarray
    at_zero: float = SURVIVAL_AT_ZERO


def _as_params(params) -> GiniParams:
    if isinstance(params, GiniParams):
        return params
    return GiniParams(params)


def _as_finite_vector(v, name="v") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def _as_pair(x, y):
    x = _as_finite_vector(x, "x")
    y = _as_finite_vector(y, "y")
    if x.shape != y.shape:
        raise InvalidInputError(f"length mismatch: {x.size} vs {y.size}")
    return x, y


def _midrank_lastaxis(a: np.ndarray) -> np.ndarray:
    # Sort once, locate the first and last sorted position of every tie group,
    # and give each member the average of those 1-based positions.
    order = np.argsort(a, axis=-1, kind="stable")
    s = np.take_along_axis(a, order, axis=-1)
    d = a.shape[-1]
    pos = np.broadcast_to(np.arange(d), a.shape)
    starts = np.ones(a.shape, dtype=bool)
    starts[..., 1:] = s[..., 1:] != s[..., :-1]
    ends = np.ones(a.shape, dtype=bool)
    ends[..., :-1] = starts[..., 1:]
    first = np.maximum.accumulate(np.where(starts, pos, 0), axis=-1)
    last = np.minimum.accumulate(np.where(ends, pos, d - 1)[..., ::-1], axis=-1)[..., ::-1]
    ranks = np.empty(a.shape, dtype=np.float64)
    np.put_along_axis(ranks, order, (first + last) / 2.0 + 1.0, axis=-1)
    return ranks


def midrank(v) -> np.ndarray:
    """Tie-averaged ranks of ``v``, starting at 1.

    Every member of a tie group receives the mean of the sorted positions the
    group occupies, so the ranks always sum to ``d (d + 1) / 2`` and the
    all-zero vector maps to ``(d + 1) / 2`` everywhere.

    Examples
    --------
    >>> midrank([1, 2, 2, 4]).tolist()
    [1.0, 2.5, 2.5, 4.0]
    """
    return _midrank_lastaxis(_as_finite_vector(v))


def gini_norm(x) -> float:
    """Gini seminorm ``sum_j x_j (R(x_j) - (d + 1) / 2)``."""
    x = _as_finite_vector(x, "x")
    centre = (x.size + 1) / 2.0
    return float(np.sum(x * (_midrank_lastaxis(x) - centre)))


def gini_pseudo_distance(x, y) -> float:
    """Base Gini pseudo-distance: the Gini seminorm of ``x - y``."""
    x, y = _as_pair(x, y)
    return gini_norm(x - y)


def _survival_from_ranks(ranks: np.ndarray) -> np.ndarray:
    d = ranks.shape[-1]
    return 1.0 - (ranks - 0.5) / d


def empirical_survival(z) -> SurvivalVector:
    """Hazen survival estimate ``1 - (R(z_j) - 0.5) / d``; ``at_zero`` is fixed at 1/2."""
    z = _as_finite_vector(z, "z")
    return SurvivalVector(_survival_from_ranks(_midrank_lastaxis(z)))


def _directed_rows(z, ranks, nu):
    d = z.shape[-1]
    a = nu - 1.0
    weights = _survival_from_ranks(ranks) ** a - SURVIVAL_AT_ZERO**a
    return -d * np.sum(z * weights, axis=-1)


def _symmetric_rows(z, ranks, nu):
    # Reversing the gap reverses the midranks exactly: R(-z) = d + 1 - R(z).
    d = z.shape[-1]
    forward = _directed_rows(z, ranks, nu)
    backward = _directed_rows(-z, (d + 1.0) - ranks, nu)
    return np.maximum(0.5 * forward + 0.5 * backward, 0.0)


def gen_gini_directed(x, y, params) -> float:
    """Directed generalized Gini dissimilarity; not symmetric and may be negative."""
    nu = _as_params(params).nu
    x, y = _as_pair(x, y)
    z = x - y
    return float(_directed_rows(z, _midrank_lastaxis(z), nu))


def gen_gini_distance(x, y, params) -> float:
    """Symmetrized generalized Gini pseudo-distance (average of both directions)."""
    nu = _as_params(params).nu
    x, y = _as_pair(x, y)
    z = x - y
    return float(_symmetric_rows(z[None, :], _midrank_lastaxis(z)[None, :], nu)[0])


def _as_data_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidInputError(f"expected an n x d matrix, got shape {X.shape}")
    if X.shape[0] < 2:
        raise InvalidInputError(f"need at least 2 rows, got {X.shape[0]}")
    if X.shape[1] < 1:
        raise InvalidInputError("need at least one feature column")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("data matrix contains non-finite entries")
    return X


def resolve_threads(threads=None) -> int:
    if threads is None:
        env = os.environ.get("GINI_MDS_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def _row_blocks(n, threads):
    # Condensed (i < j) index ranges grouped by leading row i.
    offsets = np.concatenate([[0], np.cumsum(np.arange(n - 1, 0, -1))])
    bounds = np.linspace(0, n - 1, min(threads, n - 1) + 1).astype(int)
    return [(bounds[k], bounds[k + 1], offsets[bounds[k]], offsets[bounds[k + 1]])
            for k in range(len(bounds) - 1) if bounds[k] < bounds[k + 1]]


def pair_ranks(X, threads=None):
    """Gap vectors and their midranks for every pair ``i < j``, in condensed order.

    Midranks do not depend on ``nu``, so a grid sweep computes them once and
    reuses them through :func:`gini_condensed`.
    """
    X = _as_data_matrix(X)
    n, d = X.shape
    m = n * (n - 1) // 2
    gaps = np.empty((m, d))
    ranks = np.empty((m, d))

    def work(block):
        r0, r1, c0, _ = block
        c = c0
        for i in range(r0, r1):
            z = X[i] - X[i + 1:]
            gaps[c:c + len(z)] = z
            ranks[c:c + len(z)] = _midrank_lastaxis(z)
            c += len(z)

    _run_blocks(work, _row_blocks(n, resolve_threads(threads)))
    return gaps, ranks


def _run_blocks(work, blocks):
    if len(blocks) <= 1:
        for b in blocks:
            work(b)
        return
    with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
        list(pool.map(work, blocks))


def gini_condensed(gaps, ranks, params) -> np.ndarray:
    """Condensed generalized Gini distances from precomputed :func:`pair_ranks`."""
    return _symmetric_rows(gaps, ranks, _as_params(params).nu)


def pairwise_matrix(X, params=None, metric="gini", threads=None) -> np.ndarray:
    """Full ``n x n`` dissimilarity matrix.

    Parameters
    ----------
    X : (n, d) array
        Observations in rows.
    params : GiniParams or float
        Required when ``metric == "gini"``.
    metric : {"gini", "euclidean"}
    threads : int, optional
        Worker cap; entries are computed independently so the result does not
        depend on it.
    """
    X = _as_data_matrix(X)
    if metric == "euclidean":
        return squareform(pdist(X, "euclidean"))
    if metric != "gini":
        raise InvalidParameterError(f"unknown metric {metric!r}")
    if params is None:
        raise InvalidParameterError("metric 'gini' requires nu")
    gaps, ranks = pair_ranks(X, threads=threads)
    return squareform(gini_condensed(gaps, ranks, params), checks=False)


def validate_distance_matrix(D, atol=1e-9) -> np.ndarray:
    """Return ``D`` as a float array after checking the dissimilarity-matrix invariants."""
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise InvalidInputError(f"distance matrix must be square, got shape {D.shape}")
    if D.shape[0] < 2:
        raise InvalidInputError("distance matrix needs at least 2 points")
    if not np.all(np.isfinite(D)):
        raise InvalidInputError("distance matrix contains non-finite entries")
    scale = max(1.0, float(np.max(np.abs(D))))
    if np.max(np.abs(D - D.T)) > atol * scale:
        raise InvalidInputError("distance matrix is not symmetric")
    if np.any(np.abs(np.diag(D)) > atol * scale):
        raise InvalidInputError("distance matrix has a non-zero diagonal")
    if np.any(D < -atol * scale):
        raise InvalidInputError("distance matrix has negative entries")
    return D
