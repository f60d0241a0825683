"""Embedding quality: neighbourhood trust, label agreement, silhouette and
correlation between original and embedded pairwise distances.

Neighbour orderings always break distance ties by ascending index and never
include the point itself.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import DegenerateInputError, InvalidConfigError, InvalidInputError
from .metrics import midrank

__all__ = [
    "EvalReport",
    "trustworthiness",
    "nn_label_agreement",
    "silhouette",
    "distance_correlations",
    "evaluate_embedding",
]

K_TRUST = 5
K_NN = 10


@dataclass
class EvalReport:
    trustworthiness: Optional[float]
    nn_agreement: Optional[float]
    silhouette: Optional[float]
    pearson: Optional[float]
    spearman: Optional[float]
    k_trust: int = K_TRUST
    k_nn: int = K_NN

    def to_dict(self) -> dict:
        return asdict(self)


def _matrix(a, name):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return a


def _neighbour_order(points):
    D = cdist(points, points)
    np.fill_diagonal(D, np.inf)
    # Stable sort keeps the lower index first among equal distances; self sorts last.
    return np.argsort(D, axis=1, kind="stable")[:, :-1]


def trustworthiness(X, coords, k: int = K_TRUST) -> float:
    """Trustworthiness of the ``k``-neighbourhoods of ``coords`` with respect to ``X``.

    Each embedded neighbour of ``i`` that is not among its ``k`` original
    neighbours costs ``rank_X(i, j) - k``, ranks starting at 1.  The total is
    normalized so that a random embedding scores near 0 and a perfect one 1.
    """
    X = _matrix(X, "X")
    coords = _matrix(coords, "coords")
    n = X.shape[0]
    if coords.shape[0] != n:
        raise InvalidInputError(f"row mismatch: X has {n}, coords has {coords.shape[0]}")
    if not (1 <= k and 2 * k < n):
        raise InvalidConfigError(f"trustworthiness needs 1 <= k < n/2, got k={k}, n={n}")
    order_x = _neighbour_order(X)
    ranks = np.empty((n, n), dtype=np.int64)
    rows = np.arange(n)[:, None]
    ranks[rows, order_x] = np.arange(1, n)
    embedded = _neighbour_order(coords)[:, :k]
    r = ranks[rows, embedded]
    penalty = np.sum(np.where(r > k, r - k, 0))
    return float(1.0 - 2.0 / (n * k * (2 * n - 3 * k - 1)) * penalty)


def _labels(labels, n):
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise InvalidInputError(f"labels must have length {n}, got shape {labels.shape}")
    return labels


def nn_label_agreement(coords, labels, k: int = K_NN) -> float:
    """Share of each point's ``k`` embedded neighbours carrying its label."""
    coords = _matrix(coords, "coords")
    n = coords.shape[0]
    labels = _labels(labels, n)
    if not 1 <= k < n:
        raise InvalidConfigError(f"need 1 <= k < n, got k={k}, n={n}")
    nbrs = _neighbour_order(coords)[:, :k]
    return float(np.mean(labels[nbrs] == labels[:, None]))


def silhouette(coords, labels) -> float:
    """Mean silhouette ``(b_i - a_i) / max(a_i, b_i)`` over all points.

    ``a_i`` is the mean distance to the rest of ``i``'s class and ``b_i`` the
    smallest mean distance to another class.  Points in singleton classes, and
    points with ``a_i = b_i = 0``, score 0.
    """
    coords = _matrix(coords, "coords")
    n = coords.shape[0]
    labels = _labels(labels, n)
    classes, codes = np.unique(labels, return_inverse=True)
    if len(classes) < 2:
        raise InvalidConfigError("silhouette needs at least two classes")
    D = cdist(coords, coords)
    onehot = np.zeros((n, len(classes)))
    onehot[np.arange(n), codes] = 1.0
    sizes = onehot.sum(axis=0)
    sums = D @ onehot
    own = sizes[codes]
    a = np.where(own > 1, sums[np.arange(n), codes] / np.maximum(own - 1, 1), 0.0)
    means = sums / sizes
    means[np.arange(n), codes] = np.inf
    b = means.min(axis=1)
    top = np.maximum(a, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where((own > 1) & (top > 0), (b - a) / top, 0.0)
    return float(np.mean(s))


def _pearson(u, v):
    u = u - u.mean()
    v = v - v.mean()
    nu, nv = np.sqrt(np.dot(u, u)), np.sqrt(np.dot(v, v))
    if nu == 0 or nv == 0:
        raise DegenerateInputError("correlation undefined: a distance vector has zero variance")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def distance_correlations(X, coords):
    """Pearson and Spearman correlation between the ``n(n-1)/2`` pairwise
    Euclidean distances of ``X`` and of ``coords``."""
    X = _matrix(X, "X")
    coords = _matrix(coords, "coords")
    if X.shape[0] != coords.shape[0]:
        raise InvalidInputError(f"row mismatch: X has {X.shape[0]}, coords has {coords.shape[0]}")
    if X.shape[0] < 3:
        raise InvalidInputError("need at least 3 points")
    dx, de = pdist(X), pdist(coords)
    pearson = _pearson(dx, de)
    spearman = _pearson(midrank(dx), midrank(de))
    return pearson, spearman


def evaluate_embedding(X, coords, labels=None, k_trust: int = K_TRUST, k_nn: int = K_NN) -> EvalReport:
    """All metrics at once; label-based ones are ``None`` without labels."""
    trust = trustworthiness(X, coords, k_trust)
    pearson, spearman = distance_correlations(X, coords)
    nn = sil = None
    if labels is not None:
        nn = nn_label_agreement(coords, labels, k_nn)
        sil = silhouette(coords, labels) if len(np.unique(labels)) > 1 else None
    return EvalReport(trust, nn, sil, pearson, spearman, k_trust, k_nn)
