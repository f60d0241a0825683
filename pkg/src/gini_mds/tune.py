"""Selecting the Gini hyperparameter ``nu``.

:func:`tune_nu` scores every ``nu`` on a grid by the fold-averaged Kruskal
stress of an MDS embedding of the fold's Gini distances and refits the winner
on all rows.  :func:`alternating_tune` alternates a Sammon embedding at the
current ``nu`` with a grid sweep that re-picks ``nu`` against that embedding.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .data import stream
from .embed import Embedding, StressConfig, classical_mds, minimize_stress
from .errors import InvalidConfigError, InvalidInputError
from .metrics import gini_condensed, pair_ranks, resolve_threads

__all__ = ["NuGrid", "TuneReport", "default_grid", "parse_grid", "make_folds",
           "tune_nu", "alternating_tune"]

EXPERIMENT_FOLDS = 3
TUNE_METHODS = ("classical", "kruskal", "huber", "sammon", "smacof")


@dataclass(frozen=True)
class NuGrid:
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise InvalidConfigError("nu grid is empty")
        if any(not np.isfinite(v) or v <= 1.0 for v in vals):
            raise InvalidConfigError(f"every nu must be a finite real > 1, got {vals}")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise InvalidConfigError("nu grid must be strictly increasing")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


def default_grid(lo: float = 1.1, hi: float = 5.0, count: int = 30) -> NuGrid:
    return NuGrid(tuple(np.linspace(lo, hi, count)))


def parse_grid(text: str) -> NuGrid:
    """Parse ``"lo:hi:count"``; a count of 1 requires ``lo == hi``."""
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise InvalidConfigError(f"grid must look like lo:hi:count, got {text!r}") from None
    if count < 1:
        raise InvalidConfigError("grid count must be >= 1")
    if count == 1:
        if lo != hi:
            raise InvalidConfigError("a one-point grid needs lo == hi")
        return NuGrid((lo,))
    return default_grid(lo, hi, count)


def _as_grid(grid) -> NuGrid:
    if grid is None:
        return default_grid()
    return grid if isinstance(grid, NuGrid) else NuGrid(tuple(grid))


@dataclass
class TuneReport:
    per_nu_mean_stress: dict
    nu_star: float
    best_embedding: Embedding
    folds: int
    seed: int
    fold_stress: np.ndarray = field(repr=False, default=None)
    method: str = "classical"

    def to_dict(self) -> dict:
        return {
            "nu_star": self.nu_star,
            "folds": self.folds,
            "seed": self.seed,
            "method": self.method,
            "per_nu": [{"nu": nu, "mean_stress": s} for nu, s in self.per_nu_mean_stress.items()],
            "refit_stress": self.best_embedding.stress,
        }


def make_folds(n: int, k: int, seed: int) -> list:
    """Seeded shuffle split into ``k`` contiguous blocks, each returned sorted.

    ``k = 1`` is the degenerate single fold holding every row.
    """
    if k < 1 or k > n:
        raise InvalidConfigError(f"need 1 <= folds <= n, got folds={k}, n={n}")
    if k == 1:
        return [np.arange(n)]
    perm = stream(seed, EXPERIMENT_FOLDS).permutation(n)
    return [np.sort(block) for block in np.array_split(perm, k)]


def _embed(D, p, method, config):
    if method == "classical":
        return classical_mds(D, p)
    cfg = replace(config, loss=method) if config is not None else StressConfig(loss=method)
    return minimize_stress(D, p, cfg)


def _ks_condensed(E, condensed):
    # An all-zero distance matrix is embedded exactly by coincident points.
    denom = float(np.sum(condensed * condensed))
    if denom == 0.0:
        return 0.0
    return float(np.sqrt(np.sum((E - condensed) ** 2) / denom))


def tune_nu(X, p: int, grid=None, k_folds: int = 5, loss: str = "classical", seed: int = 0,
            config: Optional[StressConfig] = None, threads=None) -> TuneReport:
    """Grid search over ``nu`` by mean K-fold Kruskal stress.

    For each ``nu`` and fold the fold's generalized Gini distance matrix is
    embedded in ``p`` dimensions with ``loss`` (``"classical"`` for Torgerson
    scaling) and scored by Kruskal stress against those same distances.  The
    smallest mean wins, ties going to the smaller ``nu``; the winner is then
    refitted on all rows.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidInputError(f"expected an n x d matrix, got shape {X.shape}")
    if loss not in TUNE_METHODS:
        raise InvalidConfigError(f"unknown method {loss!r}; choose from {TUNE_METHODS}")
    grid = _as_grid(grid)
    n = X.shape[0]
    folds = make_folds(n, int(k_folds), seed)
    smallest = min(len(f) for f in folds)
    if smallest < p + 1:
        raise InvalidConfigError(f"smallest fold has {smallest} rows; need at least p + 1 = {p + 1}")

    gaps, ranks = pair_ranks(X, threads=threads)
    table = np.empty((len(grid), len(folds)))

    def score(a):
        D = squareform(gini_condensed(gaps, ranks, grid.values[a]), checks=False)
        for b, rows in enumerate(folds):
            Df = D[np.ix_(rows, rows)]
            emb = _embed(Df, p, loss, config)
            table[a, b] = _ks_condensed(pdist(emb.coords), squareform(Df, checks=False))

    workers = min(resolve_threads(threads), len(grid))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(score, range(len(grid))))
    else:
        for a in range(len(grid)):
            score(a)

    means = table.mean(axis=1)
    best = int(np.argmin(means))
    nu_star = grid.values[best]
    D_all = squareform(gini_condensed(gaps, ranks, nu_star), checks=False)
    return TuneReport(
        per_nu_mean_stress={nu: float(m) for nu, m in zip(grid.values, means)},
        nu_star=nu_star,
        best_embedding=_embed(D_all, p, loss, config),
        folds=len(folds),
        seed=seed,
        fold_stress=table,
        method=loss,
    )


def alternating_tune(X, p: int = 2, T: int = 3, grid=None, seed: int = 0, nu0: float = 2.0,
                     config: Optional[StressConfig] = None, threads=None, trace: Optional[list] = None):
    """Alternate a Sammon embedding at the current ``nu`` with a ``nu`` re-pick.

    Each round (a) minimizes Sammon stress on the generalized Gini distances at
    ``nu``, then (b) sets ``nu`` to the grid value whose Gini distances have the
    lowest Kruskal stress against that embedding.  Returns the embedding of
    the last round and the final ``nu``.  Pass a list as ``trace`` to collect
    ``(round, nu_used, nu_next, kruskal_stress)`` tuples.
    """
    if int(T) < 1:
        raise InvalidConfigError(f"T must be >= 1, got {T}")
    grid = _as_grid(grid)
    cfg = replace(config, loss="sammon", seed=seed) if config is not None else StressConfig(loss="sammon", seed=seed)
    gaps, ranks = pair_ranks(X, threads=threads)
    nu = float(nu0)
    emb = None
    for t in range(int(T)):
        D = squareform(gini_condensed(gaps, ranks, nu), checks=False)
        emb = minimize_stress(D, p, cfg)
        E = pdist(emb.coords)
        stresses = [_ks_condensed(E, gini_condensed(gaps, ranks, v)) for v in grid]
        k = int(np.argmin(stresses))
        if trace is not None:
            trace.append((t + 1, nu, grid.values[k], float(stresses[k])))
        nu = grid.values[k]
    return emb, nu
