"""Canonical tree partitions of the n-gon and their values.

A canonical tree has the polygon vertices ``a_1..a_n`` (in cyclic order) as
its leaves, internal vertices of degree at least three, and no crossings.
Such a tree is determined by its splits: removing an edge cuts off a cyclic
interval of leaves.  We root every tree at leaf ``n``, so each edge is
labelled by the interval ``[p, q]`` (1-based, ``1 <= p <= q <= n - 1``) of
leaves below it, and the root edge by ``[n, n]``.

Faces are labelled by polygon sides: ``R_k`` is the face containing the
side ``(a_{k-1}, a_k)``.  The edge above the interval ``[p, q]`` separates
``R_p`` and ``R_{q+1}``, so it carries the charge pair ``(m_p, m_{q+1})``.
For a leaf edge (``p = q``) this is the pair ``(m_k, m_{k+1})``.
"""
import itertools
import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..propagator import theta
from .explicit import as_sigma, charges


@dataclass(frozen=True)
class CanonicalTree:
    """Non-crossing tree with ``n`` polygon leaves.

    ``edges`` lists ``(parent, child)`` pairs; vertices ``0..n-1`` are the
    leaves ``a_1..a_n`` and ``n, n+1, ...`` are internal.  ``intervals[e]``
    is the 1-based leaf interval below edge ``e`` and ``regions[e]`` the
    pair of faces it separates.
    """

    n: int
    n_internal: int
    edges: tuple
    intervals: tuple

    @property
    def regions(self):
        n = self.n
        return tuple((p, q % n + 1) for p, q in self.intervals)

    def is_internal_edge(self, e):
        p, q = self.intervals[e]
        return p != q

    def splits(self):
        """Leaf sets cut off by each edge, as the canonical form of the tree."""
        return frozenset(frozenset(range(p, q + 1)) for p, q in self.intervals)

    def children(self):
        ch = {}
        for e, (u, v) in enumerate(self.edges):
            ch.setdefault(u, []).append((v, e))
        return ch

    def to_dict(self):
        return {"n": self.n, "n_internal": self.n_internal,
                "edges": [list(e) for e in self.edges],
                "intervals": [list(i) for i in self.intervals],
                "regions": [list(r) for r in self.regions]}


@lru_cache(maxsize=None)
def _interval_shapes(p, q):
    """All subtree shapes covering leaves ``p..q``; a shape is a nested tuple."""
    if p == q:
        return (p,)
    out = []
    # compositions of [p, q] into at least two consecutive parts
    span = q - p
    for cuts in range(1, span + 1):
        for pos in itertools.combinations(range(p + 1, q + 1), cuts):
            bounds = (p,) + pos + (q + 1,)
            parts = [(bounds[i], bounds[i + 1] - 1) for i in range(len(bounds) - 1)]
            for combo in itertools.product(*(_interval_shapes(a, b) for a, b in parts)):
                out.append(tuple(combo))
    return tuple(out)


def _shape_span(shape):
    if isinstance(shape, int):
        return shape, shape
    return _shape_span(shape[0])[0], _shape_span(shape[-1])[1]


def _build(n, shape):
    edges, intervals = [], []
    counter = [n]

    def attach(parent, sh):
        p, q = _shape_span(sh)
        if isinstance(sh, int):
            edges.append((parent, sh - 1))
            intervals.append((p, q))
            return
        v = counter[0]
        counter[0] += 1
        edges.append((parent, v))
        intervals.append((p, q))
        for c in sh:
            attach(v, c)

    # root: leaf n hangs off the vertex covering 1..n-1
    top = counter[0]
    counter[0] += 1
    edges.append((top, n - 1))
    intervals.append((n, n))
    for c in shape:
        attach(top, c)
    return CanonicalTree(n, counter[0] - n, tuple(edges), tuple(intervals))


def enumerate_tsp(n):
    """All canonical trees with ``n`` leaves, ``3 <= n <= 6``."""
    if not 3 <= n <= 6:
        raise ValueError("enumerate_tsp supports 3 <= n <= 6")
    trees, seen = [], set()
    for shape in _interval_shapes(1, n - 1):
        if isinstance(shape, int):
            continue
        tr = _build(n, shape)
        key = tr.splits()
        if key not in seen:
            seen.add(key)
            trees.append(tr)
    return trees


def _prufer_decode(seq, V):
    degree = [1] * V
    for v in seq:
        degree[v] += 1
    edges = []
    for v in seq:
        leaf = min(i for i in range(V) if degree[i] == 1)
        edges.append((leaf, v))
        degree[leaf] -= 1
        degree[v] -= 1
    u, w = [i for i in range(V) if degree[i] == 1]
    edges.append((u, w))
    return edges


def _splits_of(edges, V, n):
    adj = {i: [] for i in range(V)}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    splits = []
    for u, v in edges:
        # leaves reachable from v without crossing (u, v)
        stack, seen = [v], {u, v}
        side = set()
        while stack:
            x = stack.pop()
            if x < n:
                side.add(x)
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        if n - 1 in side:
            side = set(range(n)) - side
        splits.append(frozenset(side))
    return splits


def _cyclic_interval(s, n):
    s = sorted(s)
    if not s:
        return False
    # complement of a cyclic interval is a cyclic interval; test contiguity mod n
    gaps = sum(1 for i in range(len(s)) if (s[(i + 1) % len(s)] - s[i]) % n != 1)
    return gaps <= 1 or len(s) == n


def brute_force_tsp_count(n):
    """Count canonical trees by generate-and-filter over Pruefer codes.

    Vertices ``0..n-1`` are the leaves, ``n..n+r-1`` internal.  Leaves never
    occur in the code and internal labels occur at least twice (degree >= 3).
    Planarity: every split must be a cyclic interval.  Internal labels are
    forgotten by keying on the set of splits.
    """
    found = set()
    for r in range(1, n - 1):
        V = n + r
        labels = range(n, V)
        for seq in itertools.product(labels, repeat=V - 2):
            if any(seq.count(v) < 2 for v in labels):
                continue
            edges = _prufer_decode(list(seq), V)
            sp = _splits_of(edges, V, n)
            if all(_cyclic_interval(s, n) for s in sp):
                found.add(frozenset(frozenset(x + 1 for x in s) for s in sp))
    return len(found)


def _edge_matrices(tree, t, sigma, profile, m):
    ms = charges(sigma, m)
    n = tree.n
    I = np.eye(profile.geo.n_blocks)
    mats = []
    for e, (p, q) in enumerate(tree.intervals):
        T = theta(profile, t * ms[p - 1] * ms[q % n]).dense()
        mats.append(T - I if tree.is_internal_edge(e) else T)
    return ms, mats


def tree_value(tree, t, sigma, blocks, profile, m, mats=None):
    """Value ``prod m_i sum_b prod_e f(e)`` by leaf-ward elimination.

    ``blocks`` are flat block indices ``(a_1, ..., a_n)``.
    """
    if mats is None:
        ms, mats = _edge_matrices(tree, t, sigma, profile, m)
    else:
        ms = charges(sigma, m)
    ch = tree.children()
    n = tree.n

    def message(v):
        # vector over the position of internal vertex v
        out = np.ones(profile.geo.n_blocks, dtype=complex)
        for c, e in ch[v]:
            if c < n:
                out = out * mats[e][blocks[c]]
            else:
                out = out * (mats[e] @ message(c))
        return out

    # the root edge to leaf n is among the children of the top vertex
    val = np.sum(message(tree.edges[0][0]))
    return complex(np.prod(ms) * val)


def tree_value_naive(tree, t, sigma, blocks, profile, m):
    """Direct nested sum over all internal positions (oracle)."""
    ms, mats = _edge_matrices(tree, t, sigma, profile, m)
    nb = profile.geo.n_blocks
    n, r = tree.n, tree.n_internal
    total = 0j
    for pos in itertools.product(range(nb), repeat=r):
        where = {v: pos[v - n] for v in range(n, n + r)}
        where.update({i: blocks[i] for i in range(n)})
        term = 1.0 + 0j
        for e, (u, v) in enumerate(tree.edges):
            term *= mats[e][where[u], where[v]]
        total += term
    return complex(np.prod(ms) * total)


def k_loop_tree(n, t, sigma, blocks, profile, m):
    """``K^(n) = W^{-d(n-1)} sum_trees value``."""
    sigma = as_sigma(sigma)
    if len(sigma) != n or len(blocks) != n:
        raise ValueError("length mismatch")
    total = 0j
    for tr in enumerate_tsp(n):
        total += tree_value(tr, t, sigma, blocks, profile, m)
    return profile.sW ** (n - 1) * total


def k_loop_tree_tensor(n, t, sigma, profile, m):
    """Full tensor of ``K^(n)`` from the tree formula (small ``L`` only)."""
    sigma = as_sigma(sigma)
    nb = profile.geo.n_blocks
    trees = enumerate_tsp(n)
    cache = [_edge_matrices(tr, t, sigma, profile, m)[1] for tr in trees]
    out = np.zeros((nb,) * n, dtype=complex)
    for blocks in itertools.product(range(nb), repeat=n):
        out[blocks] = sum(tree_value(tr, t, sigma, blocks, profile, m, mats)
                          for tr, mats in zip(trees, cache))
    return profile.sW ** (n - 1) * out


def dump_trees(path, n):
    with open(path, "w") as fh:
        json.dump([tr.to_dict() for tr in enumerate_tsp(n)], fh, indent=1)
