"""Principal component reduction of feature matrices, and correlation features."""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DegenerateInputError, DomainError, ParseError, ShapeError
from .features import FeatureVector
from .series import MTSeries

__all__ = [
    "PCAModel",
    "feature_matrix",
    "fit_pca",
    "transform_pca",
    "correlation_features",
    "write_pca_model",
    "read_pca_model",
]

SIGN_CONVENTION = "max-abs-entry-positive"


def feature_matrix(features) -> np.ndarray:
    """Stack feature vectors (or 1-D arrays, or an ``(n, p)`` array) row-wise."""
    if isinstance(features, np.ndarray) and features.ndim == 2:
        return np.asarray(features, dtype=float)
    rows = [f.as_array() if isinstance(f, FeatureVector) else np.ravel(np.asarray(f, dtype=float)) for f in features]
    lengths = {r.size for r in rows}
    if len(lengths) > 1:
        raise ShapeError(f"feature vectors have different lengths: {sorted(lengths)}")
    return np.vstack(rows)


@dataclass(frozen=True)
class PCAModel:
    mean: np.ndarray
    loadings: np.ndarray
    explained: np.ndarray

    @property
    def q(self) -> int:
        return self.loadings.shape[1]

    @property
    def p(self) -> int:
        return self.mean.size


def fit_pca(features, variance_target: float = 0.90) -> PCAModel:
    """Principal directions of the centered feature matrix.

    Keeps the smallest number of components whose cumulative explained
    variance reaches ``variance_target`` (at least one, at most
    ``min(n - 1, p)``). Each loading column is signed so that its entry of
    largest magnitude is positive.
    """
    if not 0.0 < variance_target <= 1.0:
        raise ConfigError(f"variance_target must lie in (0, 1], got {variance_target}")
    X = feature_matrix(features)
    n, p = X.shape
    if n < 2:
        raise ShapeError(f"PCA needs at least 2 feature vectors, got {n}")
    mean = X.mean(axis=0)
    Xc = X - mean
    scale = max(float(np.max(np.abs(X))), np.finfo(float).tiny)
    if float(np.max(np.abs(Xc))) <= 1e-14 * scale:
        raise DegenerateInputError("all feature vectors are identical; total variance is zero")

    # n << p in practice, so the thin SVD costs O(n^2 p)
    _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    rank_cap = min(n - 1, p)
    s = s[:rank_cap]
    Vt = Vt[:rank_cap]
    var = s ** 2
    explained = var / var.sum()
    cumulative = np.cumsum(explained)
    q = int(np.searchsorted(cumulative, variance_target - 1e-12) + 1)
    q = min(max(q, 1), rank_cap)

    loadings = Vt[:q].T.copy()
    pivot = np.argmax(np.abs(loadings), axis=0)
    signs = np.sign(loadings[pivot, np.arange(q)])
    signs[signs == 0] = 1.0
    loadings *= signs
    return PCAModel(mean=mean, loadings=loadings, explained=explained[:q])


def transform_pca(model: PCAModel, features) -> np.ndarray:
    """Scores ``(features - mean) @ loadings``, shape ``(n, q)``."""
    X = feature_matrix(features)
    if X.shape[1] != model.p:
        raise ShapeError(f"feature length {X.shape[1]} does not match model length {model.p}")
    return (X - model.mean) @ model.loadings


def _standardized(x):
    centered = x - x.mean()
    sd = np.sqrt(np.mean(centered ** 2))
    return centered, sd


def _cross_corr(a, b, h, sa, sb):
    # corr(a_t, b_{t+h}) with divisor T
    T = a.size
    if h >= 0:
        num = a[: T - h] @ b[h:]
    else:
        num = a[-h:] @ b[: T + h]
    return num / (T * sa * sb)


def correlation_features(series: MTSeries, max_lag: int = 1) -> np.ndarray:
    """Autocorrelations and cross-correlations up to ``max_lag``.

    Order: for each component j, autocorrelations at lags ``1..max_lag``;
    then for each pair ``j1 < j2``, ``corr(X_t,j1, X_t+h,j2)`` for
    ``h = -max_lag..max_lag``. Means, standard deviations and sums use
    divisor T over the full series.
    """
    max_lag = int(max_lag)
    if max_lag < 1:
        raise ConfigError(f"max_lag must be >= 1, got {max_lag}")
    x = series.values
    T, d = x.shape
    if T <= max_lag:
        raise DomainError(f"series length T={T} must exceed max_lag={max_lag}")
    cols = []
    for j in range(d):
        c, s = _standardized(x[:, j])
        if s == 0:
            raise DomainError(f"component j={j + 1} has zero variance")
        cols.append((c, s))
    out = []
    for c, s in cols:
        out.extend(_cross_corr(c, c, h, s, s) for h in range(1, max_lag + 1))
    for j1 in range(d):
        for j2 in range(j1 + 1, d):
            (a, sa), (b, sb) = cols[j1], cols[j2]
            out.extend(_cross_corr(a, b, h, sa, sb) for h in range(-max_lag, max_lag + 1))
    return np.array(out)


def write_pca_model(model: PCAModel, path):
    """CSV of ``mean`` and loading columns plus a JSON sidecar."""
    path = Path(path)
    header = "mean," + ",".join(f"pc{c + 1}" for c in range(model.q))
    rows = [header]
    for k in range(model.p):
        rows.append(",".join(repr(float(v)) for v in (model.mean[k], *model.loadings[k])))
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    meta = {
        "q": model.q,
        "explained": [float(v) for v in model.explained],
        "sign_convention": SIGN_CONVENTION,
    }
    path.with_name(path.name + ".json").write_text(json.dumps(meta, indent=2), encoding="utf-8")


def read_pca_model(path) -> PCAModel:
    path = Path(path)
    meta = json.loads(path.with_name(path.name + ".json").read_text(encoding="utf-8"))
    if meta.get("sign_convention") != SIGN_CONVENTION:
        raise ParseError(f"unknown sign convention {meta.get('sign_convention')!r}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return PCAModel(mean=data[:, 0], loadings=data[:, 1:], explained=np.array(meta["explained"]))
