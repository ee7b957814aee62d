"""Numba kernels for the hot paths: growth loops, BFS, DP, batch distances.

All kernels operate on flat int64 arrays indexed by vertex label (slot 0
unused). The growth kernels consume raw uint64 draws from a caller-provided
buffer with the exact same draw discipline as the pure-Python step
functions in :mod:`rftlab.models`, so both paths grow identical trees from
identical streams. Children are kept as an intrusive linked list
(first_child / next_sib / last_child) in arrival order; neighbour index 0
is the parent for v >= 2, matching :class:`rftlab.tree.GrowthTree`.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# model codes shared with rftlab.models
FRIEND, URRT, PA, REDIRECT = 0, 1, 2, 3

_U11 = np.uint64(11)
_INV_2_53 = 2.0 ** -53


@njit(cache=True, inline="always")
def _neighbour_at(parent, first_child, next_sib, v, j):
    # index 0 -> parent (v >= 2), then children in arrival order
    if v >= 2:
        if j == 0:
            return parent[v]
        j -= 1
    c = first_child[v]
    for _ in range(j):
        c = next_sib[c]
    return c


@njit(cache=True)
def grow_kernel(kind, walk_k, p,
                parent, degree, leaf_count, depth,
                first_child, next_sib, last_child,
                n, n_stop, buf, pos):
    """Grow from n to n_stop vertices; returns (n, pos).

    Draws consumed per step: friend walk_k+1, urrt 1, pa 2, redirect 3.
    """
    while n < n_stop:
        if kind == FRIEND:
            r = buf[pos]; pos += 1
            cur = 1 + np.int64(r % np.uint64(n))
            for _ in range(walk_k):
                r = buf[pos]; pos += 1
                j = np.int64(r % np.uint64(degree[cur]))
                cur = _neighbour_at(parent, first_child, next_sib, cur, j)
            w = cur
        elif kind == URRT:
            r = buf[pos]; pos += 1
            w = 1 + np.int64(r % np.uint64(n))
        elif kind == PA:
            r = buf[pos]; pos += 1
            u = 2 + np.int64(r % np.uint64(n - 1))
            r = buf[pos]; pos += 1
            w = u if np.int64(r % np.uint64(2)) == 0 else parent[u]
        else:  # REDIRECT
            r = buf[pos]; pos += 1
            v = 1 + np.int64(r % np.uint64(n))
            r = buf[pos]; pos += 1
            j = np.int64(r % np.uint64(degree[v]))
            nb = _neighbour_at(parent, first_child, next_sib, v, j)
            r = buf[pos]; pos += 1
            x = np.float64(r >> _U11) * _INV_2_53
            w = v if x < p else nb

        m = n + 1
        parent[m] = w
        depth[m] = depth[w] + 1
        degree[m] = 1
        leaf_count[m] = 0
        dw = degree[w]
        if dw == 1:
            nb2 = parent[w] if w >= 2 else first_child[w]
            leaf_count[nb2] -= 1
        degree[w] = dw + 1
        leaf_count[w] += 1
        if first_child[w] == 0:
            first_child[w] = m
        else:
            next_sib[last_child[w]] = m
        last_child[w] = m
        n = m
    return n, pos


@njit(cache=True)
def coupled_grow_kernel(rft_parent, rft_degree, rft_leaf, rft_depth,
                        first_child, next_sib, last_child,
                        ur_parent, ur_degree, ur_leaf, ur_depth,
                        ur_first_child, ur_next_sib, ur_last_child,
                        n, n_stop, buf, pos):
    """Joint growth: one V draw per step attaches n+1 to V in the uniform tree
    and to a uniform neighbour W of V in the friend tree. Two draws per step."""
    while n < n_stop:
        r = buf[pos]; pos += 1
        v = 1 + np.int64(r % np.uint64(n))
        r = buf[pos]; pos += 1
        j = np.int64(r % np.uint64(rft_degree[v]))
        w = _neighbour_at(rft_parent, first_child, next_sib, v, j)

        m = n + 1
        # friend-tree attach to w
        rft_parent[m] = w
        rft_depth[m] = rft_depth[w] + 1
        rft_degree[m] = 1
        rft_leaf[m] = 0
        dw = rft_degree[w]
        if dw == 1:
            nb = rft_parent[w] if w >= 2 else first_child[w]
            rft_leaf[nb] -= 1
        rft_degree[w] = dw + 1
        rft_leaf[w] += 1
        if first_child[w] == 0:
            first_child[w] = m
        else:
            next_sib[last_child[w]] = m
        last_child[w] = m
        # uniform-tree attach to v
        ur_parent[m] = v
        ur_depth[m] = ur_depth[v] + 1
        ur_degree[m] = 1
        ur_leaf[m] = 0
        dv = ur_degree[v]
        if dv == 1:
            nb = ur_parent[v] if v >= 2 else ur_first_child[v]
            ur_leaf[nb] -= 1
        ur_degree[v] = dv + 1
        ur_leaf[v] += 1
        if ur_first_child[v] == 0:
            ur_first_child[v] = m
        else:
            ur_next_sib[ur_last_child[v]] = m
        ur_last_child[v] = m
        n = m
    return n, pos


# -- traversal -----------------------------------------------------------


@njit(cache=True)
def bfs_distances(offsets, order, parent, n, src):
    """Distances from src over the tree (children CSR plus parent pointers)."""
    dist = np.full(n + 1, -1, np.int64)
    queue = np.empty(n, np.int64)
    dist[src] = 0
    queue[0] = src
    head, tail = 0, 1
    while head < tail:
        v = queue[head]; head += 1
        dv = dist[v] + 1
        if v >= 2:
            pv = parent[v]
            if dist[pv] < 0:
                dist[pv] = dv
                queue[tail] = pv; tail += 1
        for i in range(offsets[v], offsets[v + 1]):
            c = order[i]
            if dist[c] < 0:
                dist[c] = dv
                queue[tail] = c; tail += 1
    return dist


@njit(cache=True)
def multi_source_bfs(offsets, order, parent, n, sources):
    """Distance of every vertex to its nearest source."""
    dist = np.full(n + 1, -1, np.int64)
    queue = np.empty(n, np.int64)
    tail = 0
    for i in range(sources.shape[0]):
        s = sources[i]
        dist[s] = 0
        queue[tail] = s; tail += 1
    head = 0
    while head < tail:
        v = queue[head]; head += 1
        dv = dist[v] + 1
        if v >= 2:
            pv = parent[v]
            if dist[pv] < 0:
                dist[pv] = dv
                queue[tail] = pv; tail += 1
        for i in range(offsets[v], offsets[v + 1]):
            c = order[i]
            if dist[c] < 0:
                dist[c] = dv
                queue[tail] = c; tail += 1
    return dist


@njit(cache=True, inline="always")
def _pair_distance(parent, depth, u, v):
    du = depth[u]
    dv = depth[v]
    d = 0
    while du > dv:
        u = parent[u]; du -= 1; d += 1
    while dv > du:
        v = parent[v]; dv -= 1; d += 1
    while u != v:
        u = parent[u]; v = parent[v]; d += 2
    return d


@njit(cache=True)
def distance_pairs(parent, depth, us, vs):
    out = np.empty(us.shape[0], np.int64)
    for i in range(us.shape[0]):
        out[i] = _pair_distance(parent, depth, us[i], vs[i])
    return out


@njit(cache=True)
def min_edge_cover_dp(parent, n):
    """Smallest vertex set touching every edge; O(n) over the rooted tree.

    f1 = cost with the vertex selected, f0 = cost without (every child edge
    then forces the child in). Children carry larger labels, so one reverse
    pass visits children before parents.
    """
    f0 = np.zeros(n + 1, np.int64)
    f1 = np.ones(n + 1, np.int64)
    for m in range(n, 1, -1):
        pm = parent[m]
        f0[pm] += f1[m]
        f1[pm] += min(f0[m], f1[m])
    return min(f0[1], f1[1])


@njit(cache=True)
def subtree_sizes(parent, n):
    """size[v] = number of vertices in the component of v hanging below its parent edge."""
    size = np.ones(n + 1, np.int64)
    size[0] = 0
    for m in range(n, 1, -1):
        size[parent[m]] += size[m]
    return size


# -- small-n Monte Carlo bundle -------------------------------------------


@njit(cache=True)
def _small_stats_row(parent, degree, depth, n, out, row):
    """diam, x1, x_geq2, leaf_depth, y for a tree with tiny n (scalar loops)."""
    x1 = 0
    for v in range(1, n + 1):
        if degree[v] == 1:
            x1 += 1
    diam = 0
    for u in range(1, n + 1):
        for v in range(u + 1, n + 1):
            d = _pair_distance(parent, depth, u, v)
            if d > diam:
                diam = d
    mn = 0
    for v in range(1, n + 1):
        best = np.int64(1 << 60)
        for l in range(1, n + 1):
            if degree[l] == 1:
                d = _pair_distance(parent, depth, v, l)
                if d < best:
                    best = d
        if best > mn:
            mn = best
    s = np.zeros(n + 1, np.float64)
    for m in range(2, n + 1):
        pm = parent[m]
        s[m] += degree[pm]
        s[pm] += degree[m]
    y = 0.0
    for v in range(1, n + 1):
        y += s[v] / degree[v]
    y /= n
    out[row, 0] = diam
    out[row, 1] = x1
    out[row, 2] = n - x1
    out[row, 3] = mn
    out[row, 4] = y


@njit(cache=True)
def mc_small_stats(kind, walk_k, p, n_target, reps, raws):
    """Grow ``reps`` independent trees to n_target through grow_kernel and
    return a (reps, 5) matrix of (diam, x1, x_geq2, leaf_depth, y)."""
    out = np.empty((reps, 5), np.float64)
    size = n_target + 1
    parent = np.zeros(size, np.int64)
    degree = np.zeros(size, np.int64)
    leaf = np.zeros(size, np.int64)
    depth = np.zeros(size, np.int64)
    fc = np.zeros(size, np.int64)
    ns = np.zeros(size, np.int64)
    lc = np.zeros(size, np.int64)
    pos = 0
    for rep in range(reps):
        for i in range(size):
            parent[i] = 0; degree[i] = 0; leaf[i] = 0; depth[i] = 0
            fc[i] = 0; ns[i] = 0; lc[i] = 0
        parent[2] = 1
        degree[1] = 1; degree[2] = 1
        leaf[1] = 1; leaf[2] = 1
        depth[2] = 1
        fc[1] = 2; lc[1] = 2
        n, pos = grow_kernel(kind, walk_k, p,
                             parent, degree, leaf, depth, fc, ns, lc,
                             2, n_target, raws, pos)
        _small_stats_row(parent, degree, depth, n, out, rep)
    return out
