"""Quantile cross-spectral density features.

Each series is reduced to indicator series ``I{F_j(X_tj) <= tau}`` built
from the empirical marginal CDFs, their cross-periodograms are smoothed with
a periodized Epanechnikov kernel, and the smoothed estimates at the Fourier
frequencies ``2*pi*s/T, s = 0..floor(T/2)`` are flattened into a feature
vector.

Feature index layout (frozen, see ``LAYOUT_VERSION``): the flat position of
``(j1, j2, k, i, i')`` is ``(((j1*d + j2)*K + k)*r + i)*r + i'`` with all
indices zero-based, ``j1`` outermost and ``i'`` innermost.
"""

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, DomainError, ParseError, ShapeError
from .series import Dataset, MTSeries

__all__ = [
    "LAYOUT_VERSION",
    "QuantileLevels",
    "FrequencyGrid",
    "SmoothingKernel",
    "FeatureVector",
    "QuantileCovariance",
    "rank_indicator",
    "indicator_matrix",
    "ccr_periodogram",
    "smoothed_ccr",
    "qcd_feature_vector",
    "qcd_features",
    "d_qcd",
    "distance_matrix",
    "quantile_cross_covariance",
    "write_features",
    "read_features",
]

LAYOUT_VERSION = "j1-j2-k-i-iprime/1"


@dataclass(frozen=True)
class QuantileLevels:
    levels: tuple = (0.1, 0.5, 0.9)

    def __post_init__(self):
        levels = tuple(float(t) for t in self.levels)
        if not levels:
            raise ConfigError("at least one quantile level is required")
        if any(not 0.0 < t < 1.0 for t in levels):
            raise ConfigError(f"quantile levels must lie in (0, 1): {levels}")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ConfigError(f"quantile levels must be strictly increasing: {levels}")
        object.__setattr__(self, "levels", levels)

    @property
    def r(self) -> int:
        return len(self.levels)

    def __iter__(self):
        return iter(self.levels)


@dataclass(frozen=True)
class FrequencyGrid:
    """Fourier frequencies ``2*pi*s/T`` for ``s = 0..floor(T/2)``."""

    T: int

    @property
    def K(self) -> int:
        return self.T // 2 + 1

    @property
    def frequencies(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.K) / self.T


@dataclass(frozen=True)
class SmoothingKernel:
    """Epanechnikov weight function on ``[-pi, pi]`` with bandwidth ``h``.

    ``W(u) = 3/(4*pi) * (1 - (u/pi)**2)`` for ``|u| <= pi`` integrates to
    one; ``weights`` evaluates the periodized, rescaled version
    ``W_T(u) = sum_v W((u + 2*pi*v)/h) / h``.
    """

    bandwidth: float

    def __post_init__(self):
        h = float(self.bandwidth)
        if not (0.0 < h <= np.pi) or not np.isfinite(h):
            raise ConfigError(f"bandwidth must lie in (0, pi], got {self.bandwidth}")
        object.__setattr__(self, "bandwidth", h)

    @classmethod
    def auto(cls, T: int) -> "SmoothingKernel":
        """Default bandwidth ``0.5 * T**(-1/4)``."""
        return cls(0.5 * T ** -0.25)

    @staticmethod
    def profile(u):
        u = np.asarray(u, dtype=float)
        z = u / np.pi
        return np.where(np.abs(z) <= 1.0, 0.75 / np.pi * (1.0 - z * z), 0.0)

    def weights(self, u):
        u = np.asarray(u, dtype=float)
        h = self.bandwidth
        # u ranges over (-2*pi, 2*pi) and the rescaled support is pi*h <= pi**2
        total = np.zeros_like(u)
        for v in range(-3, 4):
            total += self.profile((u + 2 * np.pi * v) / h)
        return total / h


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Real and imaginary parts of the flattened smoothed QCD estimates."""

    real: np.ndarray
    imag: np.ndarray

    def __post_init__(self):
        re = np.array(self.real, dtype=float).ravel()
        im = np.array(self.imag, dtype=float).ravel()
        if re.shape != im.shape:
            raise ShapeError(f"real/imag length mismatch: {re.size} vs {im.size}")
        re.setflags(write=False)
        im.setflags(write=False)
        object.__setattr__(self, "real", re)
        object.__setattr__(self, "imag", im)

    def __len__(self):
        return self.real.size

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return np.array_equal(self.real, other.real) and np.array_equal(self.imag, other.imag)

    def as_array(self) -> np.ndarray:
        """Concatenation ``[real, imag]`` used as the Euclidean embedding."""
        return np.concatenate([self.real, self.imag])


@dataclass(frozen=True)
class QuantileCovariance:
    """Sample indicator cross-covariances at one lag.

    ``values[i, i2, j1, j2]`` estimates
    ``Cov(I{X_t,j1 <= q_j1(tau_i)}, I{X_t+l,j2 <= q_j2(tau_i2)})``.
    """

    lag: int
    levels: QuantileLevels
    values: np.ndarray

    def matrix(self, i: int, i2: int) -> np.ndarray:
        return self.values[i, i2]


def _component(series, j):
    if not 0 <= j < series.d:
        raise DomainError(f"component index {j} out of range for d={series.d}")
    return series.values[:, j]


def rank_indicator(series: MTSeries, tau: float, j: int) -> np.ndarray:
    """Indicator of ``F_hat(X_tj) <= tau`` for the zero-based component ``j``.

    ``F_hat`` is the empirical CDF of the component over the whole series, so
    tied values share the maximal rank.
    """
    if not 0.0 < tau < 1.0:
        raise ConfigError(f"quantile level must lie in (0, 1), got {tau}")
    x = _component(series, j)
    counts = np.searchsorted(np.sort(x), x, side="right")
    return (counts / x.size <= tau).astype(float)


def indicator_matrix(series: MTSeries, levels: QuantileLevels) -> np.ndarray:
    """All indicator series, shape ``(d, r, T)``."""
    x = series.values
    T = x.shape[0]
    ecdf = np.empty_like(x)
    for j in range(x.shape[1]):
        ecdf[:, j] = np.searchsorted(np.sort(x[:, j]), x[:, j], side="right") / T
    tau = np.asarray(levels.levels)
    return (ecdf.T[:, None, :] <= tau[None, :, None]).astype(float)


def _dft(indicator, omega):
    t = np.arange(1, indicator.size + 1)
    return np.sum(indicator * np.exp(-1j * omega * t))


def ccr_periodogram(series: MTSeries, omega: float, tau: float, tau2: float, j1: int, j2: int) -> complex:
    """Rank-based copula cross-periodogram at a single frequency.

    ``I(omega) = d_j1(omega, tau) * d_j2(-omega, tau2) / (2*pi*T)`` where
    ``d_j(omega, tau) = sum_{t=1..T} I{F_hat(X_tj) <= tau} exp(-i*omega*t)``.
    """
    a = rank_indicator(series, tau, j1)
    b = rank_indicator(series, tau2, j2)
    return complex(_dft(a, omega) * _dft(b, -omega) / (2 * np.pi * series.T))


@lru_cache(maxsize=32)
def _smoothing_matrix(T, bandwidth):
    grid = FrequencyGrid(T)
    omega_s = 2 * np.pi * np.arange(1, T) / T
    diff = grid.frequencies[:, None] - omega_s[None, :]
    W = SmoothingKernel(bandwidth).weights(diff) * (2 * np.pi / T)
    W.setflags(write=False)
    return W


def smoothed_ccr(
    series: MTSeries,
    kernel: SmoothingKernel = None,
    grid: FrequencyGrid = None,
    levels: QuantileLevels = None,
) -> np.ndarray:
    """Smoothed CCR-periodogram for every component pair and level pair.

    Returns
    -------
    ndarray of complex, shape ``(d, d, K, r, r)``
        ``G[j1, j2, k, i, i2]`` at frequency ``grid.frequencies[k]``.
    """
    T = series.T
    if T < 4:
        raise DataError(f"smoothing needs T >= 4, got T={T}")
    levels = levels or QuantileLevels()
    grid = grid or FrequencyGrid(T)
    if grid.T != T:
        raise ShapeError(f"frequency grid built for T={grid.T}, series has T={T}")
    kernel = kernel or SmoothingKernel.auto(T)

    ind = indicator_matrix(series, levels)
    # the phase from starting t at 1 cancels in the product below
    D = np.fft.fft(ind, axis=-1)[:, :, 1:]
    d, r = ind.shape[:2]
    P = D[:, None, :, None, :] * np.conj(D[None, :, None, :, :]) / (2 * np.pi * T)
    W = _smoothing_matrix(T, kernel.bandwidth)
    flat = P.reshape(-1, T - 1)
    G = (flat.real @ W.T) + 1j * (flat.imag @ W.T)
    return G.reshape(d, d, r, r, grid.K).transpose(0, 1, 4, 2, 3)


def qcd_feature_vector(
    series: MTSeries,
    kernel: SmoothingKernel = None,
    grid: FrequencyGrid = None,
    levels: QuantileLevels = None,
) -> FeatureVector:
    G = smoothed_ccr(series, kernel, grid, levels)
    return FeatureVector(G.real.ravel(), G.imag.ravel())


def qcd_features(dataset: Dataset, levels: QuantileLevels = None, bandwidth=None) -> list:
    """Feature vectors for every series of an equal-length dataset.

    ``bandwidth`` of ``None`` or ``"auto"`` selects ``0.5 * T**(-1/4)``.
    """
    T = dataset.common_length()
    levels = levels or QuantileLevels()
    if bandwidth is None or bandwidth == "auto":
        kernel = SmoothingKernel.auto(T)
    else:
        kernel = SmoothingKernel(bandwidth)
    grid = FrequencyGrid(T)
    return [qcd_feature_vector(s, kernel, grid, levels) for s in dataset]


def d_qcd(a: FeatureVector, b: FeatureVector) -> float:
    if len(a) != len(b):
        raise ShapeError(f"feature lengths differ: {len(a)} vs {len(b)}")
    dr = a.real - b.real
    di = a.imag - b.imag
    return float(np.sqrt(dr @ dr + di @ di))


def distance_matrix(features) -> np.ndarray:
    """Pairwise Euclidean distances between feature vectors (or matrix rows)."""
    X = np.vstack([f.as_array() if isinstance(f, FeatureVector) else np.ravel(f) for f in features])
    sq = np.sum(X * X, axis=1)
    D2 = sq[:, None] + sq[None, :] - 2 * X @ X.T
    np.maximum(D2, 0.0, out=D2)
    D = np.sqrt(D2)
    np.fill_diagonal(D, 0.0)
    return (D + D.T) / 2


def quantile_cross_covariance(
    series: MTSeries, lag: int, levels: QuantileLevels = None, circular: bool = False
) -> QuantileCovariance:
    """Indicator cross-covariances at ``lag`` with divisor T.

    Products are centered by the full-series indicator means. With
    ``circular=True`` the time index wraps around modulo T, which is the
    quantity recovered exactly from the periodogram ordinates.
    """
    T = series.T
    lag = int(lag)
    if abs(lag) >= T:
        raise DomainError(f"|lag| must be < T={T}, got {lag}")
    levels = levels or QuantileLevels()
    ind = indicator_matrix(series, levels)
    centered = ind - ind.mean(axis=-1, keepdims=True)
    if circular:
        a = centered
        b = np.roll(centered, -lag, axis=-1)
    elif lag >= 0:
        a = centered[..., : T - lag]
        b = centered[..., lag:]
    else:
        a = centered[..., -lag:]
        b = centered[..., : T + lag]
    # values[i, i2, j1, j2] = sum_t a[j1, i, t] * b[j2, i2, t] / T
    values = np.einsum("jit,kut->iujk", a, b) / T
    return QuantileCovariance(lag, levels, values)


def write_features(path, ids, features, T, d, levels: QuantileLevels, bandwidth, kind="qcd"):
    """Persist features as CSV plus a JSON sidecar next to it.

    QCD features use columns ``series_id,j1,j2,k,i,iprime,re,im`` with
    one-based component and level indices and zero-based frequency index
    ``k``. Correlation features use ``series_id,index,value``.
    """
    path = Path(path)
    lines = []
    if kind == "qcd":
        r = levels.r
        K = T // 2 + 1
        j1, j2, k, i, i2 = np.unravel_index(np.arange(d * d * K * r * r), (d, d, K, r, r))
        lines.append("series_id,j1,j2,k,i,iprime,re,im")
        for sid, f in zip(ids, features):
            if len(f) != j1.size:
                raise ShapeError(f"feature length {len(f)} does not match layout size {j1.size}")
            for row in zip(j1 + 1, j2 + 1, k, i + 1, i2 + 1, f.real, f.imag):
                lines.append(f"{sid},{row[0]},{row[1]},{row[2]},{row[3]},{row[4]},{float(row[5])!r},{float(row[6])!r}")
    elif kind == "correlation":
        lines.append("series_id,index,value")
        for sid, f in zip(ids, features):
            for idx, v in enumerate(np.ravel(f)):
                lines.append(f"{sid},{idx},{float(v)!r}")
    else:
        raise ConfigError(f"unknown feature kind {kind!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    meta = {
        "kind": kind,
        "T": int(T),
        "d": int(d),
        "r": levels.r if levels else None,
        "quantiles": list(levels.levels) if levels else None,
        "kernel": "epanechnikov" if kind == "qcd" else None,
        "bandwidth": bandwidth,
        "layout_version": LAYOUT_VERSION if kind == "qcd" else "correlation/1",
        "series_ids": [str(s) for s in ids],
    }
    sidecar_path(path).write_text(json.dumps(meta, indent=2), encoding="utf-8")


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def read_features(path):
    """Inverse of :func:`write_features`.

    Returns ``(ids, features, meta)`` where ``features`` are
    :class:`FeatureVector` objects (QCD) or 1-D arrays (correlation).
    """
    path = Path(path)
    try:
        meta = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ParseError(f"missing sidecar {sidecar_path(path)}") from None
    kind = meta.get("kind", "qcd")
    if kind == "qcd" and meta.get("layout_version") != LAYOUT_VERSION:
        raise ParseError(f"unsupported feature layout {meta.get('layout_version')!r}")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        body = fh.read().splitlines()
    order = []
    cols = {}
    width = len(header)
    for row, line in enumerate(body, start=1):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != width:
            raise ParseError(f"expected {width} cells, found {len(cells)}", row)
        sid = cells[0]
        if sid not in cols:
            order.append(sid)
            cols[sid] = []
        try:
            if kind == "qcd":
                cols[sid].append((float(cells[6]), float(cells[7])))
            else:
                cols[sid].append(float(cells[2]))
        except ValueError:
            raise ParseError("non-numeric feature value", row) from None
    if kind == "qcd":
        feats = [FeatureVector(*np.array(cols[s]).T) for s in order]
    else:
        feats = [np.array(cols[s]) for s in order]
    return order, feats, meta
