"""Maximum bipartite matching by Hopcroft-Karp, with an optional warm start."""

from __future__ import annotations

from collections import deque
from typing import Mapping, Sequence

INF = float("inf")


def hopcroft_karp(
    left: Sequence[int],
    adj: Mapping[int, Sequence[int]],
    initial: Mapping[int, int] | None = None,
) -> dict[int, int]:
    """Maximum matching of a bipartite graph as a ``left -> right`` dict.

    ``adj[u]`` lists the right neighbours of left vertex ``u``.  Augmenting
    paths never unmatch a matched vertex, so every vertex matched by
    ``initial`` stays matched in the result.  Search order follows ``left``
    and ``adj``, which makes the result deterministic.
    """
    pair_l: dict[int, int] = dict(initial or {})
    pair_r: dict[int, int] = {v: u for u, v in pair_l.items()}
    dist: dict[int, float] = {}

    def bfs() -> bool:
        q = deque()
        for u in left:
            if u in pair_l:
                dist[u] = INF
            else:
                dist[u] = 0
                q.append(u)
        found = False
        while q:
            u = q.popleft()
            for v in adj.get(u, ()):
                w = pair_r.get(v)
                if w is None:
                    found = True
                elif dist[w] == INF:
                    dist[w] = dist[u] + 1
                    q.append(w)
        return found

    def dfs(root: int) -> bool:
        # iterative version of the layered augmenting-path search
        stack = [(root, iter(adj.get(root, ())))]
        path: list[tuple[int, int]] = []
        while stack:
            u, it = stack[-1]
            advanced = False
            for v in it:
                w = pair_r.get(v)
                if w is None:
                    path.append((u, v))
                    for a, b in path:
                        pair_l[a] = b
                        pair_r[b] = a
                    return True
                if dist[w] == dist[u] + 1:
                    path.append((u, v))
                    stack.append((w, iter(adj.get(w, ()))))
                    advanced = True
                    break
            if not advanced:
                dist[u] = INF
                stack.pop()
                if path:
                    path.pop()
        return False

    while bfs():
        for u in left:
            if u not in pair_l:
                dfs(u)
    return pair_l
