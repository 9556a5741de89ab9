#!/usr/bin/env python3
# Two-dimensional classical scaling of QCD distances over a pool of series
# from every generating process of scenario 2.2.

from collections import defaultdict

from qcdcluster.evaluation import pool_embedding

coords, r2, labels = pool_embedding("2.2", T=500, per_process=20, seed=0)
print(f"R2 of the 2-D map: {r2:.3f}")

groups = defaultdict(list)
for (x, y), lab in zip(coords, labels):
    groups[lab].append((x, y))
for lab, pts in groups.items():
    xs, ys = zip(*pts)
    print(f"{lab:>6}: centre ({sum(xs) / len(xs):+.3f}, {sum(ys) / len(ys):+.3f})")

# uncomment for a picture
# import matplotlib.pyplot as plt
# for lab, pts in groups.items():
#     plt.scatter(*zip(*pts), label=lab, s=12)
# plt.legend(); plt.show()
