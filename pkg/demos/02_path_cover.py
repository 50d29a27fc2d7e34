"""
Splitting a graph and covering one side with paths
===================================================

The first two stages of the pipeline on their own: a random split of the
vertices into V and W, then paths on exactly m vertices inside V.
"""

import numpy as np

from tfpack import build_path_cover, gen_random_regular, split_V_W

n, d, m = 4096, 64, 8
g = gen_random_regular(n, d, seed=3)

V, W = split_V_W(g, p=0.1, gamma=0.4, seed=3)
print(len(V), "vertices in V,", len(W), "in W")

# every vertex should see roughly 10% of its neighbours in W
inW = np.zeros(n, dtype=int)
inW[W] = 1
into_W = g.csr @ inW
print("neighbours in W: min", into_W.min(), "max", into_W.max(), "expected", 0.1 * d)

cover = build_path_cover(g, V, m, d, gamma=0.4, epsilon=0.1, seed=3)
print(len(cover.paths), "paths, at least", cover.stats["target_paths"], "needed")
print("largest endvertex degree", cover.stats["max_endvertex_degree"], "bound", 4 * d / m)
