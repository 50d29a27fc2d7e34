"""
Packing triangle subdivisions into a random regular graph
==========================================================

A 64-regular graph on 2000 vertices, and as many vertex-disjoint
subdivided triangles (cycles) as the packer can find.
"""

import collections

from tfpack import PackerConfig, gen_random_regular, named_pattern, pack_full, validate_packing

g = gen_random_regular(2000, 64, seed=1)
F = named_pattern("C3")

packing = pack_full(g, F, PackerConfig(seed=0))
report = validate_packing(g, packing)
print("valid:", report.valid, " coverage:", round(report.coverage, 3))

# members are long cycles threaded through the cover paths
sizes = collections.Counter(w.size for w in packing.witnesses)
print("cycle lengths:", sorted(sizes.items())[:10])

# the packer keeps some bookkeeping around
for key in ("rounds", "J_final", "aux_density"):
    print(key, packing.stats.get(key))
