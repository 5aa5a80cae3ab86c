"""Level sets of piecewise-linear fields on triangulations (marching triangles).

A vertex counts as "above" when ``value >= level``; this symbolic
perturbation keeps every crossing on an edge interior, so each cut
triangle contributes exactly one segment.
"""
from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

_EDGES = ((0, 1), (1, 2), (2, 0))


def level_segments(vertices, triangles, values, level=0.0):
    """Return ``(segments, keys)``.

    ``segments`` has shape ``(K, 2, 2)``; ``keys`` has shape ``(K, 2, 2)``
    and holds the sorted vertex pair of the mesh edge each endpoint lies on,
    which is how segments from neighbouring triangles are joined.
    """
    values = np.asarray(values, dtype=float)
    above = values[triangles] >= level
    segs, keys = [], []
    cut = np.nonzero(above.any(axis=1) & ~above.all(axis=1))[0]
    for t in cut:
        pts, ks = [], []
        for i, j in _EDGES:
            if above[t, i] != above[t, j]:
                a, b = triangles[t, i], triangles[t, j]
                va, vb = values[a], values[b]
                s = (level - va) / (vb - va)
                pts.append(vertices[a] + s * (vertices[b] - vertices[a]))
                ks.append((min(a, b), max(a, b)))
        segs.append(pts)
        keys.append(ks)
    return np.array(segs).reshape(-1, 2, 2), np.array(keys, dtype=np.int64).reshape(-1, 2, 2)


def _graph(keys):
    flat = keys.reshape(-1, 2)
    uniq, inv = np.unique(flat, axis=0, return_inverse=True)
    inv = inv.reshape(-1, 2)
    n = len(uniq)
    adj = coo_matrix((np.ones(len(inv)), (inv[:, 0], inv[:, 1])), shape=(n, n))
    return uniq, inv, adj


def component_count(vertices, triangles, values, level=0.0) -> int:
    """Number of connected components of the level set."""
    _, keys = level_segments(vertices, triangles, values, level)
    if len(keys) == 0:
        return 0
    _, _, adj = _graph(keys)
    n, _ = connected_components(adj, directed=False)
    return int(n)


def level_polylines(vertices, triangles, values, level=0.0):
    """Chain segments into polylines; returns a list of ``(points, closed)``."""
    segs, keys = level_segments(vertices, triangles, values, level)
    if len(segs) == 0:
        return []
    uniq, inv, _ = _graph(keys)
    pos = np.zeros((len(uniq), 2))
    pos[inv[:, 0]] = segs[:, 0]
    pos[inv[:, 1]] = segs[:, 1]
    nbrs = [[] for _ in range(len(uniq))]
    for k, (p, q) in enumerate(inv):
        nbrs[p].append((q, k))
        nbrs[q].append((p, k))
    used = np.zeros(len(inv), dtype=bool)
    out = []
    # open chains start at degree-1 nodes, which lie on the mesh boundary
    starts = [i for i in range(len(uniq)) if len(nbrs[i]) == 1]
    starts += [i for i in range(len(uniq)) if len(nbrs[i]) != 1]
    for s in starts:
        if all(used[k] for _, k in nbrs[s]):
            continue
        chain = [s]
        cur = s
        while True:
            nxt = [(q, k) for q, k in nbrs[cur] if not used[k]]
            if not nxt:
                break
            q, k = nxt[0]
            used[k] = True
            chain.append(q)
            cur = q
        closed = len(chain) > 2 and chain[0] == chain[-1]
        out.append((pos[chain], closed))
    return out
