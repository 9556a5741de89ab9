#!/usr/bin/env python3
# Elbow inspection for the noise cluster: share of series sent to the noise
# cluster as the scale multiplier shrinks.

import numpy as np

from qcdcluster import ClusterConfig, delta_scan, fit_pca, qcd_features, transform_pca
from qcdcluster.simulation import build_scenario

scen = build_scenario("3.1", T=1500, seed=2)
feats = qcd_features(scen.dataset)
scores = transform_pca(fit_pca(feats), feats)

lambdas = np.round(np.geomspace(8, 0.01, 15), 4)
rows = delta_scan(scores, ClusterConfig(m=1.8), lambdas)
print(f"{'lambda':>8} {'delta':>8} {'noise share':>12}")
for row in rows:
    bar = "#" * int(round(row["proportion"] * scen.dataset.n))
    print(f"{row['lam']:8.4f} {row['delta']:8.4f} {row['proportion']:12.3f}  {bar}")
