#!/usr/bin/env python3
# How the share of PCA variance kept changes Monte Carlo success rates in
# scenario 2.2. Takes a few minutes; lower TRIALS for a quicker look.

from qcdcluster.evaluation import run_benchmark

TRIALS = 20

for target in (0.5, 0.7, 0.8, 0.9):
    noise = run_benchmark("2.2", 600, 1.8, "noise", "0.1:1.5:0.1", TRIALS, grid_param="delta", pca_variance=target)
    trimmed = run_benchmark("2.2", 600, 1.8, "trimmed", None, TRIALS, pca_variance=target)
    exp = run_benchmark("2.2", 600, 1.8, "exp", "0:2:0.05", TRIALS, pca_variance=target)
    print(f"variance kept {target:.1f}: exp {exp.max_rate:.2f}  noise {noise.max_rate:.2f} "
          f"(delta={noise.best_value})  trimmed {trimmed.max_rate:.2f}")
