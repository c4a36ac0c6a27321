"""Torus geometry for the site lattice Z_{WL}^d and the block lattice Z_L^d.

Sites are stored block-major: the flat index of a site is
``block_flat * W**d + local_flat``, so every block occupies a contiguous
range of ``W**d`` indices and block projections are plain slices.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np


def periodic_rep(delta, side):
    """Periodic representative of ``delta`` modulo ``side``.

    Even sides map into ``[-side/2 + 1, side/2]``, odd sides into the
    symmetric interval ``[-(side-1)/2, (side-1)/2]``.
    """
    if side < 1:
        raise ValueError("side must be >= 1")
    delta = np.asarray(delta, dtype=np.int64)
    hi = side // 2
    # shift so that the window [hi - side + 1, hi] maps onto [0, side)
    rep = np.mod(delta - (hi - side + 1), side) + (hi - side + 1)
    if np.ndim(rep) == 0:
        return int(rep)
    return tuple(int(v) for v in rep) if rep.ndim == 1 else rep


def _interval(side):
    hi = side // 2
    return hi - side + 1, hi


@dataclass(frozen=True)
class TorusGeometry:
    """Geometry of ``Z_{WL}^d`` split into ``L^d`` blocks of ``W^d`` sites.

    Parameters
    ----------
    d : int
        Lattice dimension.
    W : int
        Block side (bandwidth).
    L : int
        Number of blocks per axis.
    """

    d: int
    W: int
    L: int

    def __post_init__(self):
        if self.d < 1 or self.W < 1 or self.L < 1:
            raise ValueError("d, W, L must be positive")

    @property
    def N(self):
        return (self.W * self.L) ** self.d

    @property
    def side(self):
        return self.W * self.L

    @property
    def n_blocks(self):
        return self.L ** self.d

    @property
    def block_size(self):
        return self.W ** self.d

    @property
    def block_low(self):
        """Smallest block coordinate per axis."""
        return _interval(self.L)[0]

    # -- blocks ---------------------------------------------------------
    def block_linear(self, a):
        a = np.asarray(a, dtype=np.int64)
        c = np.mod(a - self.block_low, self.L)
        return int(np.ravel_multi_index(tuple(c), (self.L,) * self.d))

    def block_coords(self, idx):
        c = np.unravel_index(int(idx), (self.L,) * self.d)
        return tuple(int(v) + self.block_low for v in c)

    @cached_property
    def block_table(self):
        """``(L^d, d)`` array of canonical block coordinates, flat order."""
        grid = np.indices((self.L,) * self.d).reshape(self.d, -1).T
        return grid + self.block_low

    @cached_property
    def block_dist_matrix(self):
        """Periodic L1 distance between all pairs of blocks."""
        B = self.block_table
        diff = B[:, None, :] - B[None, :, :]
        return np.abs(periodic_rep(diff, self.L)).sum(-1)

    def block_offsets(self, a):
        """Periodic L1 distance from block ``a`` to every block."""
        diff = self.block_table - np.asarray(a)
        return np.abs(periodic_rep(diff, self.L)).sum(-1)

    # -- sites ----------------------------------------------------------
    def site_linear(self, x):
        """Flat block-major index of site ``x`` (any integer representative)."""
        a = self.block_of(x)
        x = np.asarray(x, dtype=np.int64)
        local = np.mod(x - 1, self.W)
        loc = int(np.ravel_multi_index(tuple(local), (self.W,) * self.d))
        return self.block_linear(a) * self.block_size + loc

    def site_coords(self, idx):
        b, loc = divmod(int(idx), self.block_size)
        a = np.array(self.block_coords(b))
        local = np.array(np.unravel_index(loc, (self.W,) * self.d))
        return tuple(int(v) for v in (a - 1) * self.W + 1 + local)

    @cached_property
    def site_table(self):
        """``(N, d)`` array of site coordinates in flat block-major order."""
        local = np.indices((self.W,) * self.d).reshape(self.d, -1).T
        base = (self.block_table - 1) * self.W + 1
        return (base[:, None, :] + local[None, :, :]).reshape(-1, self.d)

    @cached_property
    def site_block(self):
        """Flat block index of every flat site index."""
        return np.repeat(np.arange(self.n_blocks), self.block_size)

    def block_of(self, x):
        """Block containing site ``x``: ``a(i) = ceil(x(i) / W)`` on the block torus."""
        x = np.asarray(x, dtype=np.int64)
        a = -np.floor_divide(-x, self.W)
        return periodic_rep(a, self.L) if self.d > 0 else a

    def cells_of(self, a):
        """The ``W^d`` sites of block ``a``, as coordinate tuples."""
        b = self.block_linear(a)
        rows = self.site_table[b * self.block_size:(b + 1) * self.block_size]
        return [tuple(int(v) for v in r) for r in rows]

    def block_slice(self, b):
        """Flat site range of flat block index ``b``."""
        return slice(b * self.block_size, (b + 1) * self.block_size)


def dist(x, y, side):
    """Periodic L1 distance on a torus of the given side."""
    diff = np.asarray(x) - np.asarray(y)
    return int(np.abs(periodic_rep(diff, side)).sum()) if np.ndim(diff) else abs(periodic_rep(diff, side))


def dist_site(x, y, geo):
    return dist(x, y, geo.side)


def dist_block(a, b, geo):
    return dist(a, b, geo.L)
