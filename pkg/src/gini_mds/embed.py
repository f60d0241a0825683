"""Classical (Torgerson) MDS and stress-minimizing refinements.

Residuals are ``e_ij = d_ij - ||x_i - x_j||`` over pairs ``i < j``.  Four
objectives are supported:

* ``kruskal``  normalized root stress ``sqrt(sum e^2 / sum d^2)``
* ``huber``    ``sum rho_delta(e)``, quadratic inside ``delta``, linear outside
* ``sammon``   ``sum(e^2 / d) / sum(d)``
* ``smacof``   ``sum w e^2`` minimized by Guttman-transform majorization

Kruskal, Huber and Sammon are minimized by gradient descent with Armijo
backtracking, always starting from the classical solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np
from scipy.spatial.distance import cdist

from .errors import (
    DegenerateInputError,
    InvalidConfigError,
    InvalidInputError,
    NumericError,
)
from .metrics import validate_distance_matrix

__all__ = [
    "Embedding",
    "StressConfig",
    "LOSSES",
    "double_center",
    "classical_mds",
    "kruskal_stress",
    "stress_loss",
    "stress_gradient",
    "minimize_stress",
    "embed",
]

LOSSES = ("kruskal", "huber", "sammon", "smacof")
METHODS = ("classical",) + LOSSES
HUBER_AUTO_FACTORS = (0.5, 1.0, 2.0)
ARMIJO = 1e-4


@dataclass
class Embedding:
    """Low-dimensional coordinates plus diagnostics of how they were obtained."""

    coords: np.ndarray
    stress: float
    method: str
    eigenvalues: Optional[np.ndarray] = None
    clamped_count: int = 0
    clamped_mass: float = 0.0
    converged: bool = True
    n_iter: int = 0
    history: list = field(default_factory=list)
    huber_delta: Optional[float] = None

    @property
    def dims(self) -> int:
        return self.coords.shape[1]


@dataclass(frozen=True)
class StressConfig:
    loss: str = "smacof"
    huber_delta: Union[float, str] = "auto"
    smacof_weights: Optional[np.ndarray] = None
    max_iters: int = 300
    rel_tol: float = 1e-6
    seed: int = 0
    init: str = "classical"

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise InvalidConfigError(f"unknown loss {self.loss!r}; choose from {LOSSES}")
        if not self.rel_tol > 0:
            raise InvalidConfigError(f"rel_tol must be > 0, got {self.rel_tol}")
        if int(self.max_iters) < 1:
            raise InvalidConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.huber_delta != "auto":
            delta = float(self.huber_delta)
            if not (np.isfinite(delta) or delta == np.inf) or delta <= 0:
                raise InvalidConfigError(f"huber_delta must be > 0 or 'auto', got {self.huber_delta!r}")
        if self.init not in ("classical", "random"):
            raise InvalidConfigError(f"init must be 'classical' or 'random', got {self.init!r}")


def double_center(squared_distances) -> np.ndarray:
    """Gram matrix ``B = -1/2 H D2 H`` with ``H = I - 11'/n``."""
    D2 = np.asarray(squared_distances, dtype=np.float64)
    if D2.ndim != 2 or D2.shape[0] != D2.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {D2.shape}")
    scale = max(1.0, float(np.max(np.abs(D2)))) if D2.size else 1.0
    if np.max(np.abs(D2 - D2.T), initial=0.0) > 1e-9 * scale:
        raise InvalidInputError("squared-distance matrix is not symmetric")
    row = D2.mean(axis=1, keepdims=True)
    col = D2.mean(axis=0, keepdims=True)
    B = -0.5 * (D2 - row - col + D2.mean())
    return 0.5 * (B + B.T)


def _fix_signs(V):
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def classical_mds(D, p: int) -> Embedding:
    """Torgerson scaling of a dissimilarity matrix into ``p`` dimensions.

    Negative eigenvalues, which arise for non-Euclidean inputs such as Gini
    matrices, are clamped to zero before taking square roots.  The reported
    ``eigenvalues`` are the top ``p`` values before clamping; ``clamped_mass``
    is the share of absolute spectral mass carried by negative eigenvalues.
    """
    D = validate_distance_matrix(D)
    n = D.shape[0]
    if not 1 <= int(p) <= n - 1:
        raise InvalidInputError(f"target dimension must lie in [1, {n - 1}], got {p}")
    p = int(p)
    B = double_center(D * D)
    try:
        evals, evecs = np.linalg.eigh(B)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    if not np.all(np.isfinite(evals)):
        raise NumericError("eigensolver returned non-finite eigenvalues")
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    top = evals[:p]
    V = _fix_signs(evecs[:, :p])
    coords = V * np.sqrt(np.clip(top, 0.0, None))

    tol = 1e-12 * max(1.0, float(np.max(np.abs(evals))))
    negative = evals[evals < -tol]
    total = float(np.sum(np.abs(evals)))
    mass = float(np.sum(np.abs(negative)) / total) if total > 0 else 0.0
    return Embedding(
        coords=coords,
        stress=_kruskal_or_zero(coords, D),
        method="classical",
        eigenvalues=top.copy(),
        clamped_count=int(np.sum(top < 0)),
        clamped_mass=mass,
    )


def _upper(M):
    i, j = np.triu_indices(M.shape[0], k=1)
    return M[i, j]


def _kruskal_or_zero(coords, D):
    if not np.any(_upper(D)):
        return 0.0
    return kruskal_stress(coords, D)


def kruskal_stress(coords, D) -> float:
    """``sqrt(sum_{i<j} (||x_i - x_j|| - d_ij)^2 / sum_{i<j} d_ij^2)``."""
    coords = np.asarray(coords, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    d = _upper(D)
    denom = float(np.sum(d * d))
    if denom <= 0:
        raise DegenerateInputError("Kruskal stress is undefined for an all-zero distance matrix")
    delta = _upper(cdist(coords, coords))
    return float(np.sqrt(np.sum((delta - d) ** 2) / denom))


def _resolve_delta(config, D):
    if config.huber_delta == "auto":
        return float(np.median(_upper(D)))
    return float(config.huber_delta)


def _weights(config, n):
    if config.smacof_weights is None:
        return None
    W = np.asarray(config.smacof_weights, dtype=np.float64)
    if W.shape != (n, n) or np.any(W < 0) or not np.allclose(W, W.T):
        raise InvalidConfigError("smacof_weights must be a symmetric non-negative n x n matrix")
    return W


def _check_sammon(D):
    d = _upper(D)
    if np.any(d <= 0):
        raise DegenerateInputError(
            "Sammon loss needs strictly positive off-diagonal distances; deduplicate points first"
        )


def _loss_and_coef(kind, coords, D, config, delta, want_grad):
    """Loss value and, optionally, dL/d(embedded distance) as an n x n matrix."""
    E = cdist(coords, coords)
    R = D - E
    iu = np.triu_indices(D.shape[0], k=1)
    e = R[iu]
    coef = None
    if kind == "kruskal":
        d = D[iu]
        denom = float(np.sum(d * d))
        if denom <= 0:
            raise DegenerateInputError("Kruskal stress is undefined for an all-zero distance matrix")
        ks = float(np.sqrt(np.sum(e * e) / denom))
        if want_grad:
            coef = np.zeros_like(D) if ks == 0 else -R / (ks * denom)
        value = ks
    elif kind == "huber":
        a = np.abs(e)
        inside = a <= delta
        linear = delta * (a[~inside] - 0.5 * delta)
        value = float(np.sum(0.5 * e[inside] ** 2) + np.sum(linear))
        if want_grad:
            rho_prime = np.where(np.abs(R) <= delta, R, delta * np.sign(R))
            coef = -rho_prime
    elif kind == "sammon":
        d = D[iu]
        _check_sammon(D)
        total = float(np.sum(d))
        value = float(np.sum(e * e / d) / total)
        if want_grad:
            safe = np.where(D > 0, D, 1.0)
            coef = -2.0 * R / (safe * total)
    elif kind == "smacof":
        W = _weights(config, D.shape[0])
        w = 1.0 if W is None else W[iu]
        value = float(np.sum(w * e * e))
        if want_grad:
            coef = -2.0 * R * (1.0 if W is None else W)
    else:
        raise InvalidConfigError(f"unknown loss {kind!r}")
    if coef is not None:
        np.fill_diagonal(coef, 0.0)
    return value, coef, E


def _coords_gradient(coords, coef, E):
    # d||x_i - x_j|| / dx_i = (x_i - x_j) / ||x_i - x_j||, taken as 0 for coincident points.
    with np.errstate(divide="ignore", invalid="ignore"):
        G = np.where(E > 0, coef / E, 0.0)
    return G.sum(axis=1)[:, None] * coords - G @ coords


def stress_loss(kind, coords, D, config: Optional[StressConfig] = None) -> float:
    """Value of one of the four stress objectives for ``coords`` against ``D``.

    With ``huber_delta="auto"`` the Huber threshold is the median target
    distance.
    """
    config = config or StressConfig(loss=kind)
    coords = np.asarray(coords, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    delta = _resolve_delta(config, D) if kind == "huber" else None
    return _loss_and_coef(kind, coords, D, config, delta, want_grad=False)[0]


def stress_gradient(kind, coords, D, config: Optional[StressConfig] = None) -> np.ndarray:
    """Analytic gradient of :func:`stress_loss` with respect to ``coords``."""
    config = config or StressConfig(loss=kind)
    coords = np.asarray(coords, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    delta = _resolve_delta(config, D) if kind == "huber" else None
    _, coef, E = _loss_and_coef(kind, coords, D, config, delta, want_grad=True)
    return _coords_gradient(coords, coef, E)


def _initial_coords(D, p, config):
    if config.init == "random":
        rng = np.random.default_rng(config.seed)
        scale = float(np.mean(_upper(D))) or 1.0
        return rng.normal(scale=scale, size=(D.shape[0], p))
    return classical_mds(D, p).coords


def _relative_drop(old, new):
    if old <= 0:
        return 0.0
    return (old - new) / old


def _gradient_descent(kind, X, D, config, delta):
    f, coef, E = _loss_and_coef(kind, X, D, config, delta, want_grad=True)
    history = [f]
    step = 1.0
    converged = False
    it = 0
    for it in range(1, int(config.max_iters) + 1):
        if f == 0.0:
            converged = True
            break
        g = _coords_gradient(X, coef, E)
        gnorm2 = float(np.sum(g * g))
        if gnorm2 == 0.0:
            converged = True
            break
        step *= 2.0
        accepted = False
        for _ in range(60):
            trial = X - step * g
            f_new = _loss_and_coef(kind, trial, D, config, delta, want_grad=False)[0]
            if f_new <= f - ARMIJO * step * gnorm2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        drop = _relative_drop(f, f_new)
        X = trial
        f, coef, E = _loss_and_coef(kind, X, D, config, delta, want_grad=True)
        history.append(f)
        if drop < config.rel_tol:
            converged = True
            break
    if not np.all(np.isfinite(X)):
        raise NumericError(f"{kind} descent produced non-finite coordinates")
    return X, f, converged, it, history


def _guttman_operator(W, n):
    if W is None:
        return None
    V = -W.copy()
    np.fill_diagonal(V, 0.0)
    np.fill_diagonal(V, -V.sum(axis=1))
    return np.linalg.pinv(V)


def _smacof(X, D, config):
    n = D.shape[0]
    W = _weights(config, n)
    Vplus = _guttman_operator(W, n)
    f, _, E = _loss_and_coef("smacof", X, D, config, None, want_grad=False)
    history = [f]
    converged = False
    it = 0
    for it in range(1, int(config.max_iters) + 1):
        if f == 0.0:
            converged = True
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            Bm = np.where(E > 0, -D / E, 0.0)
        if W is not None:
            Bm = Bm * W
        np.fill_diagonal(Bm, 0.0)
        np.fill_diagonal(Bm, -Bm.sum(axis=1))
        X_new = Bm @ X / n if Vplus is None else Vplus @ (Bm @ X)
        f_new, _, E_new = _loss_and_coef("smacof", X_new, D, config, None, want_grad=False)
        drop = _relative_drop(f, f_new)
        X, f, E = X_new, f_new, E_new
        history.append(f)
        if drop < config.rel_tol:
            converged = True
            break
    if not np.all(np.isfinite(X)):
        raise NumericError("SMACOF produced non-finite coordinates")
    return X, f, converged, it, history


def _minimize_once(D, p, config, delta, X0):
    if config.loss == "smacof":
        X, f, conv, it, hist = _smacof(X0.copy(), D, config)
    else:
        X, f, conv, it, hist = _gradient_descent(config.loss, X0.copy(), D, config, delta)
    return Embedding(coords=X, stress=f, method=config.loss, converged=conv,
                     n_iter=it, history=hist, huber_delta=delta)


def minimize_stress(D, p: int, config: Optional[StressConfig] = None, init=None) -> Embedding:
    """Embed ``D`` in ``p`` dimensions by minimizing ``config.loss``.

    The starting point is the classical solution unless ``init`` coordinates
    are given.  Hitting ``max_iters`` is not an error: the last (best) iterate
    is returned with ``converged=False``.
    """
    config = config or StressConfig()
    D = validate_distance_matrix(D)
    n = D.shape[0]
    if not 1 <= int(p) <= n - 1:
        raise InvalidInputError(f"target dimension must lie in [1, {n - 1}], got {p}")
    if config.loss == "sammon":
        _check_sammon(D)
    X0 = np.asarray(init, dtype=np.float64) if init is not None else _initial_coords(D, int(p), config)
    if X0.shape != (n, int(p)):
        raise InvalidInputError(f"init must have shape {(n, int(p))}, got {X0.shape}")

    if config.loss == "huber" and config.huber_delta == "auto":
        med = float(np.median(_upper(D)))
        best, best_ks = None, np.inf
        for factor in HUBER_AUTO_FACTORS:
            delta = factor * med if med > 0 else factor
            emb = _minimize_once(D, p, replace(config, huber_delta=delta), delta, X0)
            ks = _kruskal_or_zero(emb.coords, D)
            if ks < best_ks:
                best, best_ks = emb, ks
        return best
    delta = _resolve_delta(config, D) if config.loss == "huber" else None
    return _minimize_once(D, p, config, delta, X0)


def embed(D, p: int, method: str = "classical", config: Optional[StressConfig] = None) -> Embedding:
    """Dispatch to :func:`classical_mds` or :func:`minimize_stress` by method name."""
    if method == "classical":
        return classical_mds(D, p)
    if method not in LOSSES:
        raise InvalidConfigError(f"unknown method {method!r}; choose from {METHODS}")
    config = replace(config, loss=method) if config is not None else StressConfig(loss=method)
    return minimize_stress(D, p, config)
