"""Point processes, graph realization, and component counting.

Edge decisions are pure functions of (trial seed, node pair, distance):
a pair (i, j) is linked iff pair_uniform(seed, i, j) < g(d(i, j)).  Both
build modes evaluate that same predicate, so their outputs are identical
bit for bit; CellList only changes which pairs get a distance computed.
"""

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .connfn import ConnectionFunction, effective_cutoff
from .geometry import Region
from .pairrng import STREAM_COUPLING, STREAM_EDGE, pair_uniform

_PAIR_CHUNK = 1 << 22


class MetricMismatchError(ValueError):
    """Operation applied to a graph with the wrong metric."""


@dataclass(frozen=True)
class PointSet:
    positions: np.ndarray   # (n, 2) float64, fundamental domain coordinates
    region: Region
    density: float
    seed: int

    @property
    def n(self):
        return int(self.positions.shape[0])


@dataclass(frozen=True)
class RcmGraph:
    points: PointSet
    edges: np.ndarray       # (m, 2) int64, i < j, lexicographically sorted
    metric: str             # "euclidean" or "toroidal"
    g: ConnectionFunction

    @property
    def n(self):
        return self.points.n


@dataclass(frozen=True)
class Census:
    W: int                  # isolated nodes (= xi.get(1, 0))
    xi: dict                # component order -> count
    largest_order: int


def sample_poisson(region, density, seed, expected_count=None):
    """Poisson(density * area) points, uniform over the region.

    The count is drawn from Poisson(expected_count) when that override is
    given (models pass the algebraically exact mean so equal-seed frames
    draw identical counts), and positions are unit-square draws scaled by
    the side so equal-seed frames agree up to the scale factor.
    """
    if density < 0.0:
        raise ValueError("density must be non-negative")
    mu = density * region.area if expected_count is None else float(expected_count)
    rng = np.random.default_rng(int(seed))
    n = int(rng.poisson(mu))
    unit = rng.random((n, 2)) - 0.5
    return PointSet(positions=unit * region.side, region=region,
                    density=density, seed=int(seed))


def _distances(pos, ii, jj, metric, side):
    dx = pos[ii, 0] - pos[jj, 0]
    dy = pos[ii, 1] - pos[jj, 1]
    if metric == "euclidean":
        return np.hypot(dx, dy)
    best = None
    for sx in (-side, 0.0, side):
        for sy in (-side, 0.0, side):
            cand = np.hypot(dx + sx, dy + sy)
            best = cand if best is None else np.minimum(best, cand)
    return best


def _decide(pos, ii, jj, g, metric, side, seed):
    d = _distances(pos, ii, jj, metric, side)
    u = pair_uniform(seed, ii, jj, stream=STREAM_EDGE)
    keep = u < g._eval(d)
    return ii[keep], jj[keep]


def _pair_block(n, k0, k1):
    """Decode linear pair indices k in [k0, k1) to (i, j) with i < j."""
    k = np.arange(k0, k1, dtype=np.int64)
    # i is the largest row with offset(i) <= k, offset(i) = i*n - i(i+1)/2.
    kf = k.astype(np.float64)
    i = np.floor((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8 * kf)) / 2).astype(np.int64)
    off = i * n - (i * (i + 1)) // 2
    over = off > k
    while np.any(over):
        i[over] -= 1
        off = i * n - (i * (i + 1)) // 2
        over = off > k
    under = (i + 1) * n - ((i + 1) * (i + 2)) // 2 <= k
    while np.any(under):
        i[under] += 1
        off = i * n - (i * (i + 1)) // 2
        under = (i + 1) * n - ((i + 1) * (i + 2)) // 2 <= k
    j = (k - off) + i + 1
    return i, j


def _edges_exact(pts, g, metric, seed):
    pos = pts.positions
    n = pts.n
    side = pts.region.side
    total = n * (n - 1) // 2
    out_i, out_j = [], []
    for k0 in range(0, total, _PAIR_CHUNK):
        ii, jj = _pair_block(n, k0, min(k0 + _PAIR_CHUNK, total))
        ei, ej = _decide(pos, ii, jj, g, metric, side, seed)
        out_i.append(ei)
        out_j.append(ej)
    if not out_i:
        return np.empty((0, 2), dtype=np.int64)
    return np.column_stack([np.concatenate(out_i), np.concatenate(out_j)])


def _cell_candidates(pos, side, ncell, wrap):
    """All unordered pairs whose cells are identical or 3x3 neighbours."""
    width = side / ncell
    ix = np.clip(((pos[:, 0] + 0.5 * side) / width).astype(np.int64), 0, ncell - 1)
    iy = np.clip(((pos[:, 1] + 0.5 * side) / width).astype(np.int64), 0, ncell - 1)
    cid = ix * ncell + iy
    order = np.argsort(cid, kind="stable")
    counts = np.bincount(cid, minlength=ncell * ncell)
    starts = np.concatenate([[0], np.cumsum(counts)])

    pairs_i, pairs_j = [], []
    # Half neighbourhood: same cell plus 4 directed offsets covers every
    # adjacent unordered cell pair exactly once.
    for dx, dy in ((0, 0), (1, 0), (0, 1), (1, 1), (-1, 1)):
        nx = ix + dx
        ny = iy + dy
        if wrap:
            nx %= ncell
            ny %= ncell
            valid = np.ones(len(pos), dtype=bool)
        else:
            valid = (nx >= 0) & (nx < ncell) & (ny >= 0) & (ny < ncell)
        src = np.nonzero(valid)[0]
        if src.size == 0:
            continue
        ncid = nx[src] * ncell + ny[src]
        sizes = counts[ncid]
        keep = sizes > 0
        src, ncid, sizes = src[keep], ncid[keep], sizes[keep]
        if src.size == 0:
            continue
        tot = int(sizes.sum())
        rep_src = np.repeat(src, sizes)
        base = np.repeat(starts[ncid], sizes)
        offs = np.arange(tot, dtype=np.int64) - np.repeat(
            np.concatenate([[0], np.cumsum(sizes)[:-1]]), sizes)
        tgt = order[base + offs]
        if dx == 0 and dy == 0:
            m = rep_src < tgt
        else:
            m = rep_src != tgt
        pairs_i.append(rep_src[m])
        pairs_j.append(tgt[m])
    if not pairs_i:
        return (np.empty(0, dtype=np.int64),) * 2
    ii = np.concatenate(pairs_i)
    jj = np.concatenate(pairs_j)
    lo = np.minimum(ii, jj)
    hi = np.maximum(ii, jj)
    # Directed offsets can see a cross pair once only, but same-cell plus
    # wrap-around in tiny grids is excluded by the ncell >= 3 guard; dedupe
    # is still cheap insurance against double decisions.
    key = lo * (hi.max() + 1 if hi.size else 1) + hi
    _, uniq = np.unique(key, return_index=True)
    return lo[uniq], hi[uniq]


_CUTOFF_CACHE = {}


def _cutoff_cached(g, tail_mass):
    key = (g.signature(), float(tail_mass))
    if key not in _CUTOFF_CACHE:
        _CUTOFF_CACHE[key] = effective_cutoff(g, tail_mass)
    return _CUTOFF_CACHE[key]


def _edges_cells(pts, g, metric, seed, tail_mass):
    pos = pts.positions
    n = pts.n
    side = pts.region.side
    wrap = metric == "toroidal"

    r_cut = _cutoff_cached(g, tail_mass)
    max_dist = side * math.sqrt(2.0) * (0.5 if wrap else 1.0)
    if not math.isfinite(r_cut) or r_cut >= max_dist:
        return _edges_exact(pts, g, metric, seed)
    ncell = int(side / r_cut)
    if ncell < 3 or n < 16:
        return _edges_exact(pts, g, metric, seed)

    ii, jj = _cell_candidates(pos, side, ncell, wrap)
    d = _distances(pos, ii, jj, metric, side)
    near = d <= r_cut
    ii, jj, d = ii[near], jj[near], d[near]
    u = pair_uniform(seed, ii, jj, stream=STREAM_EDGE)
    keep = u < g._eval(d)
    near_edges = [(ii[keep], jj[keep])]

    # Long-range remainder: every pair whose uniform clears p_max is visited
    # (gaps are Geometric(p_max) in law); the edge test is unchanged, so the
    # result matches the exact build pair for pair.  p_max bounds g beyond
    # the cutoff: zero once the support ends, else g at the cutoff itself
    # (g is non-increasing, so that is an upper bound for every far pair).
    if g.support_radius <= r_cut:
        p_max = 0.0
    else:
        p_max = float(g._eval(np.asarray(r_cut, dtype=float)))
    far_edges = []
    if p_max > 0.0:
        total = n * (n - 1) // 2
        for k0 in range(0, total, _PAIR_CHUNK):
            bi, bj = _pair_block(n, k0, min(k0 + _PAIR_CHUNK, total))
            ub = pair_uniform(seed, bi, bj, stream=STREAM_EDGE)
            cand = ub < p_max
            bi, bj, ub = bi[cand], bj[cand], ub[cand]
            if bi.size == 0:
                continue
            db = _distances(pos, bi, bj, metric, side)
            far = db > r_cut
            bi, bj, db, ub = bi[far], bj[far], db[far], ub[far]
            kb = ub < g._eval(db)
            far_edges.append((bi[kb], bj[kb]))

    chunks = near_edges + far_edges
    ei = np.concatenate([c[0] for c in chunks])
    ej = np.concatenate([c[1] for c in chunks])
    return np.column_stack([ei, ej])


def build_graph(points, g, metric="euclidean", mode="exact", tail_mass=1e-6):
    """Realize the random connection graph on a sampled point set.

    mode "exact" visits all pairs; mode "cells" uses spatial hashing within
    the effective cutoff plus a thinned scan of the long pairs.  Both give
    the same edge set for the same seed.
    """
    if metric not in ("euclidean", "toroidal"):
        raise MetricMismatchError("metric must be 'euclidean' or 'toroidal'")
    if metric == "toroidal" and points.region.kind != "torus":
        raise MetricMismatchError("toroidal metric needs a torus region")
    if mode not in ("exact", "cells"):
        raise ValueError("mode must be 'exact' or 'cells'")

    if points.n < 2:
        edges = np.empty((0, 2), dtype=np.int64)
    elif mode == "exact":
        edges = _edges_exact(points, g, metric, points.seed)
    else:
        edges = _edges_cells(points, g, metric, points.seed, tail_mass)

    if edges.shape[0] > 1:
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges = edges[order]
    return RcmGraph(points=points, edges=edges, metric=metric, g=g)


class _UnionFind:
    """Array union-find with path halving and union by size."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


def census(graph):
    """Component-order counts via union-find over the edge list."""
    n = graph.n
    uf = _UnionFind(n)
    for i, j in graph.edges.tolist():
        uf.union(i, j)
    sizes = Counter()
    for v in range(n):
        if uf.find(v) == v:
            sizes[uf.size[v]] += 1
    xi = dict(sorted(sizes.items()))
    total = sum(k * c for k, c in xi.items())
    assert total == n, "component orders must partition the nodes"
    return Census(W=xi.get(1, 0), xi=xi, largest_order=max(xi) if xi else 0)


def isolated_count(graph):
    """Number of degree-zero nodes (fast path; equals census(graph).W)."""
    if graph.edges.size == 0:
        return graph.n
    return graph.n - np.unique(graph.edges).size


def is_connected_via_ordering(points, adjacency):
    """Connectivity by greedy ordering growth.

    Tries to order the points so each one (after the first) is adjacent to
    some earlier point; such an ordering exists iff the graph is connected.
    adjacency(p, q) is a symmetric pair predicate on positions.
    """
    pts = [np.asarray(p, dtype=float) for p in points]
    n = len(pts)
    if n == 0:
        return True
    reached = [False] * n
    reached[0] = True
    frontier = [0]
    count = 1
    while frontier:
        nxt = []
        for i in frontier:
            for j in range(n):
                if not reached[j] and adjacency(pts[i], pts[j]):
                    reached[j] = True
                    nxt.append(j)
                    count += 1
        frontier = nxt
    return count == n


def boundary_coupling(torus_graph):
    """Thin a torus realization down to its square-metric law.

    Each torus edge is kept with probability g(d_euclid) / g(d_torus); the
    survivors have exactly the square-graph edge distribution on the same
    points.  Returns (square_graph, W_T, W_E, W) where W_T counts isolated
    nodes before thinning, W after, and W_E = W - W_T >= 0 is the count
    exposed by removing the wrap-around edges.
    """
    if torus_graph.metric != "toroidal":
        raise MetricMismatchError("boundary coupling starts from a torus graph")
    pts = torus_graph.points
    pos = pts.positions
    side = pts.region.side
    g = torus_graph.g
    edges = torus_graph.edges

    if edges.shape[0] == 0:
        keep = np.zeros(0, dtype=bool)
    else:
        ii, jj = edges[:, 0], edges[:, 1]
        d_e = _distances(pos, ii, jj, "euclidean", side)
        d_t = _distances(pos, ii, jj, "toroidal", side)
        g_e = np.atleast_1d(g._eval(d_e))
        g_t = np.atleast_1d(g._eval(d_t))
        # g_t > 0 whenever the edge exists; interior pairs have d_e == d_t,
        # ratio 1, and are never removed.
        v = pair_uniform(pts.seed, ii, jj, stream=STREAM_COUPLING)
        keep = np.atleast_1d(v) < g_e / g_t

    square_pts = PointSet(positions=pos, region=Region("square", side),
                          density=pts.density, seed=pts.seed)
    square_graph = RcmGraph(points=square_pts, edges=edges[keep],
                            metric="euclidean", g=g)
    w_t = isolated_count(torus_graph)
    w = isolated_count(square_graph)
    w_e = w - w_t
    # Thinning only deletes edges, so isolated nodes can only appear.
    assert w_e >= 0, "thinning cannot remove isolated nodes"
    return square_graph, w_t, w_e, w


def window_truncation_census(window_graph, core_side):
    """Isolation counts for core nodes of a padded realization.

    Returns (W_core_truncated, W_core_with_pad): the first ignores edges to
    pad nodes (what a bare square window would report), the second counts a
    node isolated only if it has no neighbour anywhere in the padded region
    (the plane-like answer).  truncated >= with_pad always.
    """
    if core_side <= 0.0 or core_side > window_graph.points.region.side:
        raise ValueError("core must be positive and fit inside the window")
    pos = window_graph.points.positions
    h = 0.5 * core_side
    in_core = (np.abs(pos[:, 0]) <= h) & (np.abs(pos[:, 1]) <= h)
    n = window_graph.n
    deg_any = np.zeros(n, dtype=np.int64)
    deg_core = np.zeros(n, dtype=np.int64)
    if window_graph.edges.size:
        ii, jj = window_graph.edges[:, 0], window_graph.edges[:, 1]
        np.add.at(deg_any, ii, 1)
        np.add.at(deg_any, jj, 1)
        both = in_core[ii] & in_core[jj]
        np.add.at(deg_core, ii[both], 1)
        np.add.at(deg_core, jj[both], 1)
    w_trunc = int(np.sum(in_core & (deg_core == 0)))
    w_pad = int(np.sum(in_core & (deg_any == 0)))
    return w_trunc, w_pad
