#!/usr/bin/env python3
# Simulate one dataset with two outliers, extract quantile spectral features,
# and compare the plain and robust fuzzy partitions.

import numpy as np

from qcdcluster import ClusterConfig, cluster, fit_pca, qcd_features, transform_pca
from qcdcluster.simulation import build_scenario

np.set_printoptions(precision=3, suppress=True)

scen = build_scenario("2.2", T=600, seed=1)
print("series:", scen.dataset.ids)

feats = qcd_features(scen.dataset)
pca = fit_pca(feats, 0.9)
scores = transform_pca(pca, feats)
print("feature length", len(feats[0].real), "-> PCA components", pca.q)

cfg = ClusterConfig(n_clusters=2, m=1.8)
for variant, extra in [("fcm", {}), ("exp", {"beta": 0.75}), ("trimmed", {"alpha": 2 / 12})]:
    part = cluster(scores, variant, cfg.replace(**extra))
    print("\n" + variant)
    print(part.U)
    if part.trimmed_ids:
        print("trimmed:", [scen.dataset.ids[i] for i in part.trimmed_ids])
