"""Command line front end.

Exit statuses: 0 on success, 2 for invalid options, 3 for bad input data,
4 for numerical failures.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .clustering import ClusterConfig, cluster, delta_scan
from .errors import ConfigError, DataError, QCDClusterError
from .evaluation import classical_mds, run_benchmark
from .features import QuantileLevels, SmoothingKernel, qcd_features, read_features, write_features
from .series import load_csv
from .simulation import InnovationSpec, build_scenario, write_scenario
from .transform import correlation_features, feature_matrix, fit_pca, transform_pca

__all__ = ["main", "build_parser"]


def _levels(text):
    try:
        return QuantileLevels(tuple(float(v) for v in text.split(",")))
    except ValueError:
        raise ConfigError(f"cannot parse quantile levels {text!r}") from None


def _bandwidth(text):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"bandwidth must be 'auto' or a number, got {text!r}") from None


def _load_scores(path, pca_variance):
    ids, feats, meta = read_features(path)
    model = fit_pca(feats, pca_variance)
    return ids, feats, transform_pca(model, feats), model


def cmd_features(args):
    dataset = load_csv(args.input, args.layout)
    T = dataset.common_length()
    levels = _levels(args.quantiles)
    if args.kind == "correlation":
        feats = [correlation_features(s, args.max_lag) for s in dataset]
        write_features(args.out, dataset.ids, feats, T, dataset.d, levels, None, kind="correlation")
        return
    bandwidth = _bandwidth(args.bandwidth)
    h = SmoothingKernel.auto(T).bandwidth if bandwidth == "auto" else SmoothingKernel(bandwidth).bandwidth
    feats = qcd_features(dataset, levels, h)
    write_features(args.out, dataset.ids, feats, T, dataset.d, levels, h)


def cmd_cluster(args):
    ids, _, scores, model = _load_scores(args.features, args.pca_variance)
    beta = None if args.beta in (None, "auto") else float(args.beta)
    config = ClusterConfig(
        n_clusters=args.clusters,
        m=args.m,
        max_iter=args.max_iter,
        tol=args.tol,
        seed=args.seed,
        restarts=args.restarts,
        beta=beta,
        lam=args.lam,
        delta=args.delta,
        alpha=args.alpha,
    )
    if args.variant == "noise" and args.lam is None and args.delta is None:
        raise ConfigError("--variant noise needs --lambda or --delta")
    part = cluster(scores, args.variant, config)
    part.to_json(args.out, series_ids=ids, pca_components=model.q, pca_explained=[float(v) for v in model.explained])


def cmd_simulate(args):
    scenario = build_scenario(args.scenario, args.length, args.seed, InnovationSpec.parse(args.innovations))
    write_scenario(scenario, args.out)


def cmd_benchmark(args):
    report = run_benchmark(
        args.scenario,
        args.length,
        args.m,
        args.variant,
        args.grid,
        args.trials,
        args.seed,
        grid_param=args.grid_param,
        features=args.feature_type,
        innovation=InnovationSpec.parse(args.innovations),
        pca_variance=args.pca_variance,
        config=ClusterConfig(restarts=args.restarts),
        n_jobs=args.jobs,
    )
    report.to_json(args.out)
    if args.curves:
        rows = report.curve_rows()
        with open(args.curves, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    print(f"max rate {report.max_rate:.3f} at {report.grid_param}={report.best_value}; AUC {report.auc:.4f}")
    if report.flagged:
        print(f"warning: {sum(report.failures)} failed runs, see failure_messages in {args.out}", file=sys.stderr)


def cmd_mds(args):
    ids, feats, _ = read_features(args.features)
    X = feature_matrix(feats)
    sq = np.einsum("ij,ij->i", X, X)
    D = np.sqrt(np.clip(sq[:, None] + sq[None, :] - 2 * X @ X.T, 0.0, None))
    np.fill_diagonal(D, 0.0)
    coords, r2, eigenvalues = classical_mds(D)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series_id", "dim1", "dim2"])
        for sid, (a, b) in zip(ids, coords):
            writer.writerow([sid, repr(float(a)), repr(float(b))])
    meta = {"r2": r2, "eigenvalues": [float(v) for v in eigenvalues]}
    Path(str(args.out) + ".json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
    print(f"R2 {r2:.4f}")


def cmd_delta_scan(args):
    _, _, scores, _ = _load_scores(args.features, args.pca_variance)
    try:
        lambdas = [float(v) for v in args.lambdas.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse lambda grid {args.lambdas!r}") from None
    config = ClusterConfig(n_clusters=args.clusters, m=args.m, seed=args.seed, restarts=args.restarts)
    rows = delta_scan(scores, config, lambdas)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["lam", "delta", "proportion"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def build_parser():
    parser = argparse.ArgumentParser(prog="qcdcluster", description="Robust fuzzy clustering of multivariate time series.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", help="extract QCD (or correlation) features from a CSV dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--layout", choices=("wide", "long"), default="wide")
    p.add_argument("--quantiles", default="0.1,0.5,0.9")
    p.add_argument("--bandwidth", default="auto")
    p.add_argument("--kind", choices=("qcd", "correlation"), default="qcd")
    p.add_argument("--max-lag", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("cluster", help="fuzzy clustering of PCA scores of stored features")
    p.add_argument("--features", required=True)
    p.add_argument("--variant", choices=("fcm", "exp", "noise", "trimmed"), default="fcm")
    p.add_argument("--clusters", type=int, default=2)
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--beta", default="auto")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--pca-variance", type=float, default=0.9)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("simulate", help="simulate a named scenario to CSV plus ground truth")
    p.add_argument("--scenario", required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--innovations", default="gaussian")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("benchmark", help="Monte Carlo success rates over a hyperparameter grid")
    p.add_argument("--scenario", required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--m", type=float, default=1.8)
    p.add_argument("--variant", choices=("fcm", "exp", "noise", "trimmed"), required=True)
    p.add_argument("--grid")
    p.add_argument("--grid-param", choices=("beta", "lam", "delta"))
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--innovations", default="gaussian")
    p.add_argument("--feature-type", choices=("qcd", "correlation"), default="qcd")
    p.add_argument("--pca-variance", type=float, default=0.9)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--curves")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("mds", help="classical 2-D scaling of feature distances")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mds)

    p = sub.add_parser("delta-scan", help="share of series in the noise cluster over a lambda grid")
    p.add_argument("--features", required=True)
    p.add_argument("--clusters", type=int, default=2)
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--lambdas", default="4,2,1,0.5,0.25")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--pca-variance", type=float, default=0.9)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_delta_scan)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except QCDClusterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
