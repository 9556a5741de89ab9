"""Monte Carlo benchmark harness, classification rules and 2-D scaling."""

import itertools
import json
import math
import platform
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .clustering import ClusterConfig, FuzzyPartition, cluster
from .errors import ConfigError, DegenerateInputError, QCDClusterError, ShapeError
from .features import QuantileLevels, distance_matrix, qcd_features
from .simulation import OUTLIER, InnovationSpec, build_pool, build_scenario
from .transform import correlation_features, fit_pca, transform_pca

__all__ = [
    "AssignmentRules",
    "TrialResult",
    "BenchmarkReport",
    "judge_trial",
    "classification_rate",
    "parse_grid",
    "trapezoid_auc",
    "normalize_auc",
    "scenario_scores",
    "run_benchmark",
    "classical_mds",
    "pool_embedding",
]


@dataclass(frozen=True)
class AssignmentRules:
    """Membership cutoffs for judging a partition.

    A regular series is placed in a cluster when its membership exceeds
    ``regular_cutoff``. An outlier counts as handled by the exponential or
    standard model when no real-cluster membership reaches
    ``regular_cutoff``, and by the noise model when its noise membership
    exceeds ``noise_cutoff``.
    """

    regular_cutoff: float = 0.7
    noise_cutoff: float = 0.5

    def __post_init__(self):
        for value in (self.regular_cutoff, self.noise_cutoff):
            if not 0 < value < 1:
                raise ConfigError(f"cutoffs must lie in (0, 1), got {value}")


@dataclass
class TrialResult:
    success: bool
    verdicts: list
    matching: tuple = ()
    partition: Optional[FuzzyPartition] = None
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def _outlier_ok(i, partition, rules, variant):
    if variant == "trimmed":
        return i in partition.trimmed_ids
    if variant == "noise":
        return bool(partition.U[i, -1] > rules.noise_cutoff)
    row = partition.real_memberships[i]
    return bool(np.all(np.isfinite(row)) and row.max() < rules.regular_cutoff)


def judge_trial(partition: FuzzyPartition, labels, rules: AssignmentRules = AssignmentRules(), variant: Optional[str] = None) -> TrialResult:
    """Apply the assignment rules under the best cluster-to-label matching.

    ``labels`` holds 1-based cluster labels for regular series and
    ``OUTLIER`` for outliers. Every bijection between real clusters and
    labels is tried; the one passing the most series wins, and ties go to
    the larger verdict sequence so relabeling clusters never changes them.
    """
    variant = variant or partition.variant
    labels = list(labels)
    R = partition.real_memberships
    if R.shape[0] != len(labels):
        raise ShapeError(f"partition has {R.shape[0]} rows but {len(labels)} labels were given")
    C = R.shape[1]
    regular = sorted({lab for lab in labels if lab != OUTLIER})
    if len(regular) > C:
        raise ShapeError(f"{len(regular)} true clusters but only {C} fitted clusters")

    outlier_verdicts = {i: _outlier_ok(i, partition, rules, variant) for i, lab in enumerate(labels) if lab == OUTLIER}
    best = None
    for perm in itertools.permutations(range(C), len(regular)):
        to_cluster = dict(zip(regular, perm))
        verdicts = []
        for i, lab in enumerate(labels):
            if lab == OUTLIER:
                verdicts.append(outlier_verdicts[i])
            else:
                u = R[i, to_cluster[lab]]
                verdicts.append(bool(np.isfinite(u) and u > rules.regular_cutoff))
        if best is None or (sum(verdicts), verdicts) > (sum(best[1]), best[1]):
            best = (perm, verdicts)
    perm, verdicts = best
    return TrialResult(success=all(verdicts), verdicts=verdicts, matching=tuple(perm), partition=partition)


def classification_rate(results) -> float:
    results = list(results)
    if not results:
        raise ConfigError("classification rate of an empty result list is undefined")
    return sum(r.success for r in results) / len(results)


def parse_grid(text) -> np.ndarray:
    """``"start:stop:step"`` (inclusive of stop) or a comma-separated list."""
    if isinstance(text, (list, tuple, np.ndarray)):
        grid = np.asarray(text, dtype=float)
    else:
        text = str(text).strip()
        try:
            if ":" in text:
                start, stop, step = (float(v) for v in text.split(":"))
                if not step > 0 or stop < start:
                    raise ConfigError(f"grid {text!r} needs step > 0 and stop >= start")
                count = int(math.floor((stop - start) / step + 1e-9)) + 1
                grid = np.round(start + step * np.arange(count), 12)
            else:
                grid = np.array([float(v) for v in text.split(",") if v.strip()])
        except ValueError:
            raise ConfigError(f"cannot parse grid {text!r}") from None
    if grid.size == 0:
        raise ConfigError("hyperparameter grid is empty")
    return grid


def trapezoid_auc(grid, rates) -> float:
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2:
        return 0.0
    return float(np.trapezoid(np.asarray(rates, dtype=float), grid))


def normalize_auc(aucs: dict) -> dict:
    """Divide each method's AUC by the largest one in its (T, m) block."""
    top = max(aucs.values())
    if not top > 0:
        return {k: 0.0 for k in aucs}
    return {k: v / top for k, v in aucs.items()}


@dataclass
class BenchmarkReport:
    scenario: str
    T: int
    m: float
    variant: str
    grid_param: str
    grid: list
    rates: list
    failures: list
    trials: int
    base_seed: int
    config: dict = field(default_factory=dict)
    runtime_seconds: float = 0.0
    failure_messages: list = field(default_factory=list)

    @property
    def max_rate(self) -> float:
        return max(self.rates)

    @property
    def best_value(self) -> float:
        return self.grid[int(np.argmax(self.rates))]

    @property
    def auc(self) -> float:
        return trapezoid_auc(self.grid, self.rates)

    @property
    def flagged(self) -> bool:
        return any(self.failures)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(max_rate=self.max_rate, best_value=self.best_value, auc=self.auc, flagged=self.flagged)
        return out

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text

    def curve_rows(self) -> list:
        return [
            {"scenario": self.scenario, "T": self.T, "m": self.m, "variant": self.variant,
             "param": self.grid_param, "value": v, "rate": r, "failures": f}
            for v, r, f in zip(self.grid, self.rates, self.failures)
        ]


def scenario_scores(dataset, features="qcd", levels=None, pca_variance=0.9, max_lag=1) -> np.ndarray:
    """Feature extraction followed by PCA, fitted on ``dataset`` alone."""
    if features == "qcd":
        feats = qcd_features(dataset, levels or QuantileLevels())
    elif features == "correlation":
        feats = [correlation_features(s, max_lag) for s in dataset]
    else:
        raise ConfigError(f"unknown feature type {features!r}")
    return transform_pca(fit_pca(feats, pca_variance), feats)


def _grid_config(base: ClusterConfig, variant, grid_param, value, alpha):
    if variant == "exp":
        return base.replace(beta=float(value))
    if variant == "noise":
        return base.replace(**{grid_param: float(value)})
    if variant == "trimmed":
        return base.replace(alpha=alpha)
    return base


def _trial_seed(base_seed, index):
    child = np.random.SeedSequence(base_seed).spawn(index + 1)[index]
    return int(child.generate_state(1)[0])


def _run_trial(job):
    index, opts = job
    seed = _trial_seed(opts["base_seed"], index)
    n_grid = len(opts["grid"])
    try:
        scen = build_scenario(opts["scenario"], opts["T"], seed, opts["innovation"])
        scores = scenario_scores(scen.dataset, opts["features"], opts["levels"], opts["pca_variance"])
    except (QCDClusterError, np.linalg.LinAlgError) as exc:
        return index, [False] * n_grid, [f"trial {index}: {exc}"] * n_grid

    alpha = len(scen.outlier_indices) / scen.dataset.n
    base = opts["config"].replace(seed=seed)
    successes, errors = [], []
    for value in opts["grid"]:
        cfg = _grid_config(base, opts["variant"], opts["grid_param"], value, alpha)
        try:
            part = cluster(scores, opts["variant"], cfg)
            ok = judge_trial(part, scen.labels, opts["rules"], opts["variant"]).success
            successes.append(ok)
            errors.append(None)
        except (QCDClusterError, np.linalg.LinAlgError) as exc:
            successes.append(False)
            errors.append(f"trial {index}, value {value}: {exc}")
    return index, successes, errors


def run_benchmark(
    scenario,
    T: int,
    m: float,
    variant: str,
    grid=None,
    trials: int = 100,
    base_seed: int = 0,
    *,
    grid_param: Optional[str] = None,
    features: str = "qcd",
    innovation: InnovationSpec = InnovationSpec(),
    levels: Optional[QuantileLevels] = None,
    pca_variance: float = 0.9,
    rules: AssignmentRules = AssignmentRules(),
    config: Optional[ClusterConfig] = None,
    n_jobs: int = 1,
) -> BenchmarkReport:
    """Success rate of one method over a hyperparameter grid.

    Each trial simulates one dataset, extracts features and PCA scores once,
    then clusters it at every grid value. ``grid_param`` names the swept
    parameter: ``beta`` for ``exp``; ``lam`` (default) or ``delta`` for
    ``noise``. The trimmed and standard variants ignore the grid; the
    trimmed ratio is the true outlier fraction of each dataset. Failed trials
    count as misclassified and are tallied in ``failures``.
    """
    if variant not in ("fcm", "exp", "noise", "trimmed"):
        raise ConfigError(f"unknown variant {variant!r}")
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    if variant in ("fcm", "trimmed"):
        grid = [math.nan] if grid is None else parse_grid(grid)[:1]
        grid_param = "none" if variant == "fcm" else "alpha"
    else:
        if grid is None:
            raise ConfigError(f"variant {variant!r} needs a hyperparameter grid")
        grid = parse_grid(grid)
        grid_param = grid_param or ("beta" if variant == "exp" else "lam")
        allowed = ("beta",) if variant == "exp" else ("lam", "delta")
        if grid_param not in allowed:
            raise ConfigError(f"grid parameter {grid_param!r} does not apply to variant {variant!r}")
        if variant == "noise" and np.any(grid <= 0):
            raise ConfigError("noise grid values must be positive")
    config = (config or ClusterConfig()).replace(m=m)
    opts = dict(
        scenario=scenario, T=T, variant=variant, grid=[float(v) for v in grid], grid_param=grid_param,
        features=features, innovation=innovation, levels=levels, pca_variance=pca_variance,
        rules=rules, config=config, base_seed=base_seed,
    )

    started = time.perf_counter()
    jobs = [(k, opts) for k in range(trials)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_run_trial, jobs))
    else:
        results = [_run_trial(job) for job in jobs]
    results.sort(key=lambda r: r[0])

    wins = np.array([r[1] for r in results], dtype=bool)
    errors = [[e for e in r[2]] for r in results]
    failures = [sum(errs[g] is not None for errs in errors) for g in range(len(grid))]
    messages = sorted({e for errs in errors for e in errs if e is not None})
    return BenchmarkReport(
        scenario=str(scenario),
        T=T,
        m=m,
        variant=variant,
        grid_param=grid_param,
        grid=[float(v) for v in grid],
        rates=[float(v) for v in wins.mean(axis=0)],
        failures=failures,
        trials=trials,
        base_seed=base_seed,
        config={
            **asdict(config),
            "features": features,
            "innovation": asdict(innovation),
            "quantiles": list((levels or QuantileLevels()).levels),
            "pca_variance": pca_variance,
            "rules": asdict(rules),
            "n_jobs": n_jobs,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        runtime_seconds=time.perf_counter() - started,
        failure_messages=messages,
    )


def classical_mds(distances, dims: int = 2):
    """Torgerson scaling of a distance matrix.

    Returns ``(coords, r2, eigenvalues)`` where ``eigenvalues`` is the full
    spectrum of the double-centered matrix in decreasing order and ``r2`` is
    the share of the positive spectrum carried by the leading ``dims``.
    """
    D = np.asarray(distances, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ShapeError(f"distance matrix must be square, got {D.shape}")
    if not np.allclose(D, D.T, rtol=0, atol=1e-9) or np.any(np.abs(np.diag(D)) > 1e-9):
        raise DegenerateInputError("distance matrix must be symmetric with zero diagonal")
    if np.any(D < 0):
        raise DegenerateInputError("distances must be nonnegative")
    n = D.shape[0]
    J = np.eye(n) - 1.0 / n
    B = -0.5 * J @ (D ** 2) @ J
    vals, vecs = np.linalg.eigh((B + B.T) / 2)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]

    positive = vals[vals > 1e-12 * max(abs(vals).max(), 1e-300)]
    if positive.size < dims:
        warnings.warn(f"only {positive.size} positive eigenvalues; trailing coordinates set to zero", RuntimeWarning)
    kept = np.clip(vals[:dims], 0.0, None)
    kept[positive.size:] = 0.0
    coords = vecs[:, :dims] * np.sqrt(kept)
    total = positive.sum()
    r2 = float(kept.sum() / total) if total > 0 else 0.0
    return coords, r2, vals


def pool_embedding(scenario="2.2", T=500, per_process=20, seed=0, levels=None):
    """Classical scaling of QCD distances over a pool of every process in ``scenario``.

    Returns ``(coords, r2, labels)`` with one label per generating process.
    """
    dataset, labels = build_pool(scenario, T, seed, per_process)
    coords, r2, _ = classical_mds(distance_matrix(qcd_features(dataset, levels or QuantileLevels())))
    return coords, r2, labels
