"""
Two vertices no cycle can use
=============================

The gadget is d-regular, yet its two marked vertices sit in a block where
every cycle has length four.  Any pattern that needs a longer cycle has to
leave them uncovered.
"""

import networkx as nx

from tfpack import PackerConfig, gen_lower_bound_gadget, named_pattern, pack_full

g, (u, v) = gen_lower_bound_gadget(4)
print(g.n, "vertices, degrees", sorted(set(g.degrees.tolist())))

G = nx.Graph(g.edge_list())
for block in nx.biconnected_components(G):
    if u in block:
        print("block through u:", sorted(block))

F = named_pattern("C5")
hits = sum(bool({u, v} & pack_full(g, F, PackerConfig(seed=s)).covered) for s in range(20))
print("runs covering u or v:", hits, "of 20")
