"""
Checking the heuristics against brute force
============================================

On graphs with at most ten vertices the oracle finds an optimal packing
by exhaustive search, so the packer can be held to it.
"""

import numpy as np

from tfpack import OracleLimits, build_graph, cross_check, named_pattern

rng = np.random.default_rng(0)
F = named_pattern("K4")

rows = []
for i in range(20):
    n = int(rng.integers(5, 11))
    edges = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < 0.6]
    rep = cross_check(build_graph(n, edges), F, OracleLimits(max_n=10))
    rows.append((n, rep.oracle_coverage, rep.packer_coverage, rep.ok))

for n, opt, got, ok in rows:
    print(f"n={n:2d}  optimum {opt:.2f}  packer {got:.2f}  {'ok' if ok else 'MISMATCH'}")

# the packer is built for large degree, so on tiny graphs it mostly finds nothing
