"""Fuzzy C-means on score vectors, plus three outlier-robust variants.

* ``fcm_run``: standard fuzzy C-means with squared Euclidean distances.
* ``fcm_exponential_run``: distances ``1 - exp(-beta * d^2)``.
* ``fcm_noise_run``: an extra noise cluster at constant distance ``delta``.
* ``fcm_trimmed_run``: least-trimmed objective over the ``floor(n(1-alpha))``
  series with the smallest harmonic-type scores.

All runs take an ``(n, q)`` matrix of feature or PCA score vectors.
Memberships are computed in log space so that tiny distances or fuzziness
close to one do not overflow. A point that coincides exactly with a centroid
gets an indicator row on the first such centroid.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .errors import ClusteringFailedError, ConfigError, DegenerateInputError, EmptyClusterError, ShapeError

__all__ = [
    "VARIANTS",
    "ClusterConfig",
    "FuzzyPartition",
    "squared_distances",
    "membership_update",
    "centroid_update",
    "fcm_objective",
    "fcm_run",
    "select_beta",
    "exp_membership_update",
    "fcm_exponential_run",
    "compute_noise_distance",
    "noise_membership_update",
    "fcm_noise_run",
    "delta_scan",
    "trimmed_score",
    "trimmed_scores",
    "kept_count",
    "fcm_trimmed_run",
    "cluster",
]

VARIANTS = ("fcm", "exp", "noise", "trimmed")
DIST_FLOOR = 1e-300
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class ClusterConfig:
    """Parameters of one clustering run.

    ``n_clusters`` counts real clusters only; the noise variant adds one
    extra column. Of ``beta``, ``lam``/``delta`` and ``alpha``, only the one
    belonging to the chosen variant is consulted. ``beta=None`` selects beta
    from the data; for the noise variant a fixed ``delta`` takes precedence
    over ``lam``.
    """

    n_clusters: int = 2
    m: float = 2.0
    max_iter: int = 1000
    tol: float = 1e-6
    seed: int = 0
    restarts: int = 5
    beta: Optional[float] = None
    lam: Optional[float] = None
    delta: Optional[float] = None
    alpha: float = 0.0

    def __post_init__(self):
        if not self.m > 1:
            raise ConfigError(f"fuzziness m must exceed 1, got {self.m}")
        if self.n_clusters < 1:
            raise ConfigError(f"n_clusters must be positive, got {self.n_clusters}")
        if self.max_iter < 1 or self.restarts < 1:
            raise ConfigError("max_iter and restarts must be positive")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.beta is not None and self.beta < 0:
            raise ConfigError(f"beta must be nonnegative, got {self.beta}")
        if self.lam is not None and not self.lam > 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if self.delta is not None and not self.delta > 0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        if not 0 <= self.alpha < 1:
            raise ConfigError(f"alpha must lie in [0, 1), got {self.alpha}")

    def replace(self, **changes) -> "ClusterConfig":
        return ClusterConfig(**{**asdict(self), **changes})


@dataclass
class FuzzyPartition:
    """Result of a clustering run.

    ``U`` is ``(n, C)``, or ``(n, C + 1)`` for the noise variant with the
    noise memberships in the last column. Trimmed series have rows of NaN
    and are listed in ``trimmed_ids``. ``objective_trace[k]`` is the
    objective after iteration k; ``phase_start_trace[k]`` is the objective
    of the state entering iteration k, evaluated with that iteration's noise
    distance or kept set, so ``objective_trace[k] <= phase_start_trace[k]``
    holds for every variant.
    """

    U: np.ndarray
    centroids: np.ndarray
    objective_trace: list
    variant: str = "fcm"
    phase_start_trace: list = field(default_factory=list)
    trimmed_ids: tuple = ()
    iterations_used: int = 0
    converged: bool = False
    config: Optional[ClusterConfig] = None
    seed: Optional[int] = None
    beta: Optional[float] = None
    delta: Optional[float] = None
    delta_trace: list = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.objective_trace[-1] if self.objective_trace else math.nan

    @property
    def n_real(self) -> int:
        return self.centroids.shape[0]

    @property
    def real_memberships(self) -> np.ndarray:
        return self.U[:, : self.n_real]

    @property
    def noise_memberships(self) -> Optional[np.ndarray]:
        if self.variant != "noise":
            return None
        return self.U[:, -1]

    def crisp_labels(self) -> np.ndarray:
        """Index of the largest membership per row (-1 for trimmed rows)."""
        labels = np.full(self.U.shape[0], -1)
        ok = ~np.isnan(self.U).any(axis=1)
        labels[ok] = np.argmax(self.U[ok], axis=1)
        return labels

    def to_dict(self) -> dict:
        def clean(a):
            return [[None if not np.isfinite(v) else float(v) for v in row] for row in np.atleast_2d(a)]

        return {
            "variant": self.variant,
            "U": clean(self.U),
            "centroids": clean(self.centroids),
            "objective_trace": [float(v) for v in self.objective_trace],
            "phase_start_trace": [float(v) for v in self.phase_start_trace],
            "trimmed_ids": [int(i) for i in self.trimmed_ids],
            "iterations_used": int(self.iterations_used),
            "converged": bool(self.converged),
            "seed": self.seed,
            "beta": self.beta,
            "delta": self.delta,
            "config": asdict(self.config) if self.config else None,
        }

    def to_json(self, path=None, **extra) -> str:
        payload = {**self.to_dict(), **extra}
        text = json.dumps(payload, indent=2)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, data: dict) -> "FuzzyPartition":
        def arr(rows):
            return np.array([[np.nan if v is None else v for v in row] for row in rows], dtype=float)

        config = data.get("config")
        return cls(
            U=arr(data["U"]),
            centroids=arr(data["centroids"]),
            objective_trace=list(data["objective_trace"]),
            variant=data.get("variant", "fcm"),
            phase_start_trace=list(data.get("phase_start_trace", [])),
            trimmed_ids=tuple(data.get("trimmed_ids", [])),
            iterations_used=data.get("iterations_used", 0),
            converged=data.get("converged", False),
            config=ClusterConfig(**config) if config else None,
            seed=data.get("seed"),
            beta=data.get("beta"),
            delta=data.get("delta"),
        )


def _as_matrix(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ShapeError(f"scores must be a 2-D array, got ndim={X.ndim}")
    return X


def squared_distances(X, V) -> np.ndarray:
    X = _as_matrix(X)
    V = _as_matrix(V)
    diff = X[:, None, :] - V[None, :, :]
    return np.einsum("ncq,ncq->nc", diff, diff)


def _inverse_power_weights(D, m):
    """Rows proportional to ``D ** (-1/(m-1))``, normalized to sum to one.

    Exact zeros in a row produce an indicator on the first zero column.
    """
    D = np.asarray(D, dtype=float)
    logw = -np.log(np.maximum(D, DIST_FLOOR)) / (m - 1.0)
    logw -= logw.max(axis=1, keepdims=True)
    W = np.exp(logw)
    U = W / W.sum(axis=1, keepdims=True)
    zero_rows = np.flatnonzero((D == 0).any(axis=1))
    if zero_rows.size:
        first = np.argmax(D[zero_rows] == 0, axis=1)
        U[zero_rows] = 0.0
        U[zero_rows, first] = 1.0
    return U


def membership_update(X, V, m) -> np.ndarray:
    """Optimal memberships for fixed centroids under squared Euclidean distance."""
    return _inverse_power_weights(squared_distances(X, V), m)


def centroid_update(X, U, m, rows=None) -> np.ndarray:
    """Membership-weighted means ``sum_i u_ic^m x_i / sum_i u_ic^m``.

    ``rows`` optionally restricts the sums to a subset of series.
    """
    X = _as_matrix(X)
    W = np.asarray(U, dtype=float) ** m
    if rows is not None:
        X = X[rows]
        W = W[rows]
    totals = W.sum(axis=0)
    bad = np.flatnonzero(~(totals > 0))
    if bad.size:
        raise EmptyClusterError(int(bad[0]))
    return (W.T @ X) / totals[:, None]


def fcm_objective(X, U, V, m) -> float:
    return float(np.sum(np.asarray(U) ** m * squared_distances(X, V)))


def _dirichlet_init(n, k, seed):
    rng = np.random.default_rng(seed)
    return rng.dirichlet(np.ones(k), size=n)


def _check_n(X, C):
    if X.shape[0] < C:
        raise ConfigError(f"need at least as many series as clusters (n={X.shape[0]}, C={C})")


def _best_of_restarts(run_once, config, u_init):
    """Run ``run_once(U0, seed)`` per restart and keep the lowest objective.

    Objectives within a relative 1e-9 of the minimum count as ties, won by
    the earliest restart, so rounding noise never decides the winner.
    """
    if u_init is not None:
        return run_once(np.array(u_init, dtype=float), config.seed)
    results = []
    last_error = None
    for r in range(config.restarts):
        try:
            results.append(run_once(None, config.seed + r))
        except EmptyClusterError as exc:
            last_error = exc
    if not results:
        raise ClusteringFailedError(f"all {config.restarts} restarts failed: {last_error}")
    lowest = min(p.objective for p in results)
    cutoff = lowest + TIE_RTOL * abs(lowest)
    return next(p for p in results if p.objective <= cutoff)


def _alternate(X, U, m, config, dissimilarity, variant, centroid_weights=None):
    """Shared loop for the standard and exponential models."""
    trace, starts = [], []
    V_prev = None
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        U_old = U
        V = centroid_update(X, U, m) if centroid_weights is None else centroid_weights(X, U, V_prev)
        if V_prev is None:
            starts.append(float(np.sum(U ** m * dissimilarity(X, V))))
        else:
            starts.append(trace[-1])
        D = dissimilarity(X, V)
        U = _inverse_power_weights(D, m)
        trace.append(float(np.sum(U ** m * D)))
        V_prev = V
        if np.max(np.abs(U - U_old)) < config.tol:
            converged = True
            break
    return FuzzyPartition(
        U=U,
        centroids=V_prev,
        objective_trace=trace,
        variant=variant,
        phase_start_trace=starts,
        iterations_used=it,
        converged=converged,
        config=config,
    )


def fcm_run(scores, config: ClusterConfig, u_init=None) -> FuzzyPartition:
    """Standard fuzzy C-means, best of ``config.restarts`` initializations.

    Each iteration updates the centroids from the memberships, then the
    memberships from the centroids, until the largest membership change
    falls below ``tol``. ``u_init`` fixes the initial membership matrix and
    disables restarts.
    """
    X = _as_matrix(scores)
    C = config.n_clusters
    if C < 2:
        raise ConfigError("fcm_run needs at least 2 clusters")
    _check_n(X, C)

    def run_once(U0, seed):
        U = _dirichlet_init(X.shape[0], C, seed) if U0 is None else U0
        part = _alternate(X, U, config.m, config, squared_distances, "fcm")
        part.seed = seed
        return part

    return _best_of_restarts(run_once, config, u_init)


def select_beta(scores) -> float:
    """Inverse mean squared distance to the medoid.

    The medoid minimizes the summed squared distances to all points (ties go
    to the smallest index).
    """
    X = _as_matrix(scores)
    if X.shape[0] < 2:
        raise DegenerateInputError("beta selection needs at least 2 points")
    D = squared_distances(X, X)
    k = int(np.argmin(D.sum(axis=0)))
    spread = D[:, k].mean()
    if not spread > 0:
        raise DegenerateInputError("all points coincide; beta is undefined")
    return float(1.0 / spread)


def _exp_dissimilarity(beta):
    if beta == 0:
        # limit beta -> 0: ratios of 1 - exp(-beta d^2) become ratios of d^2
        return squared_distances

    def dissimilarity(X, V):
        return -np.expm1(-beta * squared_distances(X, V))

    return dissimilarity


def exp_membership_update(X, V, m, beta) -> np.ndarray:
    """Memberships for the exponential distance ``1 - exp(-beta * d^2)``."""
    if beta < 0:
        raise ConfigError(f"beta must be nonnegative, got {beta}")
    return _inverse_power_weights(_exp_dissimilarity(beta)(X, V), m)


def _exp_centroids(beta, m):
    def update(X, U, V_prev):
        if V_prev is None or beta == 0:
            return centroid_update(X, U, m)
        # majorization step: weights u^m exp(-beta d^2) at the previous centroids
        scaled = beta * squared_distances(X, V_prev)
        # a per-column shift cancels in the ratio and avoids underflow
        W = U ** m * np.exp(-(scaled - scaled.min(axis=0)))
        totals = W.sum(axis=0)
        bad = np.flatnonzero(~(totals > 0))
        if bad.size:
            raise EmptyClusterError(int(bad[0]))
        return (W.T @ X) / totals[:, None]

    return update


def fcm_exponential_run(scores, config: ClusterConfig, u_init=None, weighted_centroids=True) -> FuzzyPartition:
    """Fuzzy C-means with the exponential distance.

    ``config.beta=None`` computes beta with :func:`select_beta`. With
    ``weighted_centroids`` (the default) each point's centroid weight
    ``u^m`` is multiplied by ``exp(-beta * d^2)`` at the previous centroid.
    That step minimizes a tangent majorizer of the concave distance, so the
    objective never increases. Setting it to False uses plain
    membership-weighted means, which are not guaranteed to descend.
    """
    X = _as_matrix(scores)
    C = config.n_clusters
    if C < 2:
        raise ConfigError("fcm_exponential_run needs at least 2 clusters")
    _check_n(X, C)
    beta = select_beta(X) if config.beta is None else float(config.beta)
    dissimilarity = _exp_dissimilarity(beta)
    centroids = _exp_centroids(beta, config.m) if weighted_centroids else None

    def run_once(U0, seed):
        U = _dirichlet_init(X.shape[0], C, seed) if U0 is None else U0
        part = _alternate(X, U, config.m, config, dissimilarity, "exp", centroids)
        part.seed = seed
        part.beta = beta
        return part

    return _best_of_restarts(run_once, config, u_init)


def compute_noise_distance(scores, centroids, lam) -> float:
    """``delta`` with ``delta^2 = lam * mean squared distance to the real centroids``."""
    if not lam > 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    D = squared_distances(scores, centroids)
    return float(math.sqrt(lam * D.mean()))


def _noise_dissimilarity(X, V, delta):
    D = squared_distances(X, V)
    return np.hstack([D, np.full((D.shape[0], 1), delta * delta)])


def noise_membership_update(X, V, m, delta) -> np.ndarray:
    """Real-cluster memberships with a noise cluster at distance ``delta``.

    Returns the ``(n, C)`` real memberships; the noise membership of each
    row is one minus the row sum.
    """
    return _inverse_power_weights(_noise_dissimilarity(X, V, delta), m)[:, :-1]


def _noise_objective(X, U, V, m, delta):
    return float(np.sum(U ** m * _noise_dissimilarity(X, V, delta)))


def fcm_noise_run(scores, config: ClusterConfig, u_init=None) -> FuzzyPartition:
    """Fuzzy C-means with a noise cluster.

    ``config.n_clusters`` is the number of real clusters. The noise distance
    is ``config.delta`` when given; otherwise it is recomputed every
    iteration from ``config.lam`` and the current centroids. The returned
    ``U`` has one extra column holding the noise memberships.
    """
    X = _as_matrix(scores)
    C = config.n_clusters
    _check_n(X, C)
    if config.delta is None and config.lam is None:
        raise ConfigError("the noise variant needs lam or delta")
    m = config.m

    def run_once(U0, seed):
        U = _dirichlet_init(X.shape[0], C + 1, seed) if U0 is None else U0
        if U.shape[1] != C + 1:
            raise ShapeError(f"initial memberships need {C + 1} columns")
        trace, starts, deltas = [], [], []
        V_prev = None
        converged = False
        it = 0
        for it in range(1, config.max_iter + 1):
            U_old = U
            V = centroid_update(X, U[:, :C], m)
            delta = config.delta if config.delta is not None else compute_noise_distance(X, V, config.lam)
            starts.append(_noise_objective(X, U, V if V_prev is None else V_prev, m, delta))
            D = _noise_dissimilarity(X, V, delta)
            U = _inverse_power_weights(D, m)
            trace.append(float(np.sum(U ** m * D)))
            deltas.append(delta)
            V_prev = V
            if np.max(np.abs(U - U_old)) < config.tol:
                converged = True
                break
        return FuzzyPartition(
            U=U,
            centroids=V_prev,
            objective_trace=trace,
            variant="noise",
            phase_start_trace=starts,
            iterations_used=it,
            converged=converged,
            config=config,
            seed=seed,
            delta=deltas[-1],
            delta_trace=deltas,
        )

    return _best_of_restarts(run_once, config, u_init)


def delta_scan(scores, config: ClusterConfig, lambdas) -> list:
    """Noise-cluster runs over a decreasing grid of scale multipliers.

    Returns one dict per multiplier with keys ``lam``, ``delta`` and
    ``proportion``, the fraction of series whose largest membership is the
    noise column.
    """
    lambdas = [float(v) for v in lambdas]
    if not lambdas or any(v <= 0 for v in lambdas):
        raise ConfigError("lambda grid must be non-empty and positive")
    if any(b >= a for a, b in zip(lambdas, lambdas[1:])):
        raise ConfigError("lambda grid must be strictly decreasing")
    rows = []
    for lam in lambdas:
        part = fcm_noise_run(scores, config.replace(lam=lam, delta=None))
        noise_wins = np.argmax(part.U, axis=1) == part.U.shape[1] - 1
        rows.append({"lam": lam, "delta": part.delta, "proportion": float(noise_wins.mean())})
    return rows


def trimmed_scores(X, V, m) -> np.ndarray:
    """``h_i = [sum_c (d_ic^2)^(1/(1-m))]^(1-m)`` for every row; 0 at a centroid."""
    D = squared_distances(X, V)
    with np.errstate(divide="ignore"):
        logD = np.log(D)
    h = np.exp((1.0 - m) * logsumexp(logD / (1.0 - m), axis=1))
    h[(D == 0).any(axis=1)] = 0.0
    return h


def trimmed_score(row, centroids, m) -> float:
    return float(trimmed_scores(np.atleast_2d(np.asarray(row, dtype=float)), centroids, m)[0])


def kept_count(n, alpha) -> int:
    """``floor(n * (1 - alpha))``, guarded against representation error."""
    return int(math.floor(n * (1.0 - alpha) + 1e-9))


def fcm_trimmed_run(scores, config: ClusterConfig, u_init=None) -> FuzzyPartition:
    """Trimmed fuzzy C-means keeping ``floor(n(1 - alpha))`` series.

    Initial centroids come from the initial memberships over all series.
    Each iteration keeps the series with the smallest ``h_i`` (ties keep the
    smaller index), updates memberships with the standard rule and
    recomputes centroids over the kept series. It stops once the kept set is
    unchanged and no centroid coordinate moves by ``tol`` or more.
    """
    X = _as_matrix(scores)
    n = X.shape[0]
    C = config.n_clusters
    if C < 2:
        raise ConfigError("fcm_trimmed_run needs at least 2 clusters")
    H = kept_count(n, config.alpha)
    if H < C:
        raise ConfigError(f"only {H} series kept for {C} clusters (alpha={config.alpha})")
    m = config.m

    def run_once(U0, seed):
        U = _dirichlet_init(n, C, seed) if U0 is None else U0
        V = centroid_update(X, U, m)
        trace, starts = [], []
        kept = None
        converged = False
        it = 0
        for it in range(1, config.max_iter + 1):
            h = trimmed_scores(X, V, m)
            new_kept = np.sort(np.argsort(h, kind="stable")[:H])
            starts.append(float(np.sum(U[new_kept] ** m * squared_distances(X[new_kept], V))))
            U = membership_update(X, V, m)
            V_new = centroid_update(X, U, m, rows=new_kept)
            trace.append(float(np.sum(U[new_kept] ** m * squared_distances(X[new_kept], V_new))))
            same_set = kept is not None and np.array_equal(kept, new_kept)
            moved = np.max(np.abs(V_new - V))
            kept, V = new_kept, V_new
            if same_set and moved < config.tol:
                converged = True
                break
        out = np.full_like(U, np.nan)
        out[kept] = U[kept]
        trimmed = tuple(int(i) for i in np.setdiff1d(np.arange(n), kept))
        return FuzzyPartition(
            U=out,
            centroids=V,
            objective_trace=trace,
            variant="trimmed",
            phase_start_trace=starts,
            trimmed_ids=trimmed,
            iterations_used=it,
            converged=converged,
            config=config,
            seed=seed,
        )

    return _best_of_restarts(run_once, config, u_init)


def cluster(scores, variant: str, config: ClusterConfig, **kwargs) -> FuzzyPartition:
    """Dispatch to the run function for ``variant`` (one of ``VARIANTS``)."""
    runs = {
        "fcm": fcm_run,
        "exp": fcm_exponential_run,
        "noise": fcm_noise_run,
        "trimmed": fcm_trimmed_run,
    }
    if variant not in runs:
        raise ConfigError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return runs[variant](scores, config, **kwargs)
