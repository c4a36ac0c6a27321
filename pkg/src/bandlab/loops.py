"""G-loops, cut-and-glue index calculus, loop Ward identities and hierarchy terms.

A G-loop is ``Tr prod_i G(sigma_i) E_{a_i}`` with ``E_a = W^{-d} 1_{I_a}``.
Because sites are stored block-major, ``E_a`` selects a contiguous slab and a
loop reduces to a chain of ``W^d x W^d`` block products.
"""
import csv
from dataclasses import dataclass

import numpy as np

from .primitive.explicit import as_sigma


@dataclass(frozen=True)
class LoopSignature:
    """Charge string and block indices of a loop (flat block indices)."""

    sigma: tuple
    blocks: tuple

    def __post_init__(self):
        if len(self.sigma) != len(self.blocks):
            raise ValueError("charge string and blocks differ in length")

    @property
    def n(self):
        return len(self.sigma)


# -- cut and glue -------------------------------------------------------------

def _check_kl(n, k, l=None):
    if l is None:
        if not 1 <= k <= n:
            raise IndexError(f"k={k} outside 1..{n}")
    elif not 1 <= k < l <= n:
        raise IndexError(f"need 1 <= k < l <= n, got k={k}, l={l}, n={n}")


def glue_insert(sigma, blocks, k, a):
    """``G_k^{(a)}``: duplicate ``sigma_k`` and insert ``a`` before ``a_k`` (1-based ``k``)."""
    _check_kl(len(sigma), k)
    s, b = tuple(sigma), tuple(blocks)
    return s[:k] + s[k - 1:], b[:k - 1] + (a,) + b[k - 1:]


def glue_left(sigma, blocks, k, l, a):
    """``(G_L)_{k,l}^{(a)}``: ``(s_1..s_k, s_l..s_n)``, ``(a_1..a_{k-1}, a, a_l..a_n)``."""
    _check_kl(len(sigma), k, l)
    s, b = tuple(sigma), tuple(blocks)
    return s[:k] + s[l - 1:], b[:k - 1] + (a,) + b[l - 1:]


def glue_right(sigma, blocks, k, l, b):
    """``(G_R)_{k,l}^{(b)}``: ``(s_k..s_l)``, ``(a_k..a_{l-1}, b)``."""
    _check_kl(len(sigma), k, l)
    s, bl = tuple(sigma), tuple(blocks)
    return s[k - 1:l], bl[k - 1:l - 1] + (b,)


def cut_glue(sig, kind, k, l=None, a=None):
    """Dispatch on ``kind`` in ``{"insert", "left", "right"}``."""
    if kind == "insert":
        return LoopSignature(*glue_insert(sig.sigma, sig.blocks, k, a))
    if kind == "left":
        return LoopSignature(*glue_left(sig.sigma, sig.blocks, k, l, a))
    if kind == "right":
        return LoopSignature(*glue_right(sig.sigma, sig.blocks, k, l, a))
    raise ValueError(f"unknown cut-and-glue kind {kind!r}")


# -- evaluation ---------------------------------------------------------------

class LoopEvaluator:
    """G-loops of a single resolvent ``G = G(+)`` and its adjoint ``G(-)``."""

    def __init__(self, bundle, geo):
        self.geo = geo
        self.bundle = bundle
        self.w = geo.block_size
        self._G = {1: bundle.G, -1: bundle.G.conj().T}

    @property
    def eta(self):
        return self.bundle.eta

    def G(self, s):
        return self._G[s]

    def block(self, s, A, B):
        w = self.w
        return self._G[s][A * w:(A + 1) * w, B * w:(B + 1) * w]

    def loop(self, sigma, blocks):
        """``Tr prod_i G(sigma_i) E_{a_i}``."""
        sigma = as_sigma(sigma)
        n = len(sigma)
        if len(blocks) != n:
            raise ValueError("length mismatch")
        if n == 1:
            G = self._G[sigma[0]]
            sl = self.geo.block_slice(blocks[0])
            return complex(np.trace(G[sl, sl]) / self.w)
        M = self.block(sigma[0], blocks[-1], blocks[0])
        for i in range(1, n):
            M = M @ self.block(sigma[i], blocks[i - 1], blocks[i])
        return complex(np.trace(M) / self.w ** n)

    def loop1(self, s):
        """``<G(s) E_a>`` for every block ``a``."""
        d = self._G[s].diagonal()
        return d.reshape(-1, self.w).mean(axis=1)

    def full2(self, sigma):
        """All ``L^d x L^d`` entries of a 2-loop in one pass."""
        s1, s2 = as_sigma(sigma)
        nb, w = self.geo.n_blocks, self.w
        M = self._G[s1].T * self._G[s2]
        return M.reshape(nb, w, nb, w).sum(axis=(1, 3)) / w ** 2

    def full3(self, sigma):
        s1, s2, s3 = as_sigma(sigma)
        nb, w = self.geo.n_blocks, self.w
        G1, G2, G3 = (self._G[s].reshape(nb, w, nb, w) for s in (s1, s2, s3))
        return np.einsum("Cxay,aybz,bzCx->abC", G1, G2, G3, optimize=True) / w ** 3

    def full(self, sigma):
        n = len(as_sigma(sigma))
        if n == 1:
            return self.loop1(as_sigma(sigma)[0])
        if n == 2:
            return self.full2(sigma)
        if n == 3:
            return self.full3(sigma)
        raise ValueError("full tensors are only built for n <= 3")

    def chain(self, sigma, blocks, k):
        """``X^(k) = G_k E_{a_k} G_{k+1} ... E_{a_{k-1}} G_k`` as an ``N x N`` array (1-based k)."""
        sigma = as_sigma(sigma)
        n = len(sigma)
        w = self.w
        order = [(k - 1 + j) % n for j in range(n + 1)]
        first = self._G[sigma[order[0]]][:, self.geo.block_slice(blocks[order[0]])]
        M = np.eye(w, dtype=complex)
        for j in range(1, n):
            i = order[j]
            M = M @ self.block(sigma[i], blocks[order[j - 1]], blocks[i])
        last_block = blocks[order[n - 1]]
        last = self._G[sigma[order[0]]][self.geo.block_slice(last_block), :]
        return (first @ M @ last) / w ** n


def g_loop(bundle, sigma, blocks, geo):
    return LoopEvaluator(bundle, geo).loop(sigma, blocks)


def full_2loop(bundle, sigma, geo):
    return LoopEvaluator(bundle, geo).full2(sigma)


def write_2loop_csv(path, L2, geo):
    """Rows ``(a_lin, b_lin, dist, re, im)``."""
    D = geo.block_dist_matrix
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["a_lin", "b_lin", "dist", "re", "im"])
        for a in range(L2.shape[0]):
            for b in range(L2.shape[1]):
                w.writerow([a, b, int(D[a, b]), repr(float(L2[a, b].real)), repr(float(L2[a, b].imag))])


# -- Ward identities ---------------------------------------------------------

def loop_ward_residual(ev, sigma, eta=None):
    """Relative residual of the vertex Ward identity for a full ``n <= 3`` tensor.

    ``sum_{a_n} L^(n) = (L^(n-1)_{(+, s_2..s_{n-1})} - L^(n-1)_{(-, ...)}) / (2 i W^d eta)``
    for ``sigma_1 = -sigma_n``.
    """
    sigma = as_sigma(sigma)
    n = len(sigma)
    if n < 2 or sigma[0] != -sigma[-1]:
        raise ValueError("loop Ward identity needs n >= 2 and sigma_1 = -sigma_n")
    eta = ev.eta if eta is None else eta
    lhs = ev.full(sigma).sum(axis=-1)
    mid = sigma[1:-1]
    rhs = (ev.full((1,) + mid) - ev.full((-1,) + mid)) / (2j * ev.w * eta)
    return float(np.abs(lhs - rhs).max() / np.abs(rhs).max())


def loop_ward_residual_at(ev, sigma, blocks, eta=None):
    """Pointwise Ward residual for any ``n``: ``blocks`` fixes ``a_1..a_{n-1}``."""
    sigma = as_sigma(sigma)
    eta = ev.eta if eta is None else eta
    nb = ev.geo.n_blocks
    blocks = tuple(blocks)
    lhs = sum(ev.loop(sigma, blocks + (c,)) for c in range(nb))
    mid = sigma[1:-1]
    rhs = (ev.loop((1,) + mid, blocks) - ev.loop((-1,) + mid, blocks)) / (2j * ev.w * eta)
    return abs(lhs - rhs) / abs(rhs)


def ward_inequality_check(ev, sigma, blocks, k):
    """Cauchy-Schwarz chain ``|L| <= (L^(2k)_1 L^(2n-2k)_2)^{1/2}``.

    Returns ``(lhs, rhs)``; the two right-hand loops have symmetric charge
    strings and are nonnegative.
    """
    s = as_sigma(sigma)
    a = tuple(blocks)
    n = len(s)
    if not 1 <= k <= n - 1:
        raise ValueError("split k must satisfy 1 <= k <= n - 1")
    a1 = a[:k] + a[:k - 1][::-1] + (a[n - 1],)
    s1 = s[:k] + tuple(-x for x in s[:k][::-1])
    a2 = a[k:n - 1][::-1] + (a[k - 1],) + a[k:n - 1] + (a[n - 1],)
    s2 = tuple(-x for x in s[k:][::-1]) + s[k:]
    lhs = abs(ev.loop(s, a))
    r1, r2 = ev.loop(s1, a1), ev.loop(s2, a2)
    return lhs, float(np.sqrt(abs(r1.real * r2.real))), (r1, r2)


# -- hierarchy terms -------------------------------------------------------

def centered_block_traces(ev, s, m):
    """``<G_ring(s) E_a>`` for every block, ``G_ring = G - m(s)``."""
    ms = m if s > 0 else np.conj(m)
    return ev.loop1(s) - ms


def lightweight_term(ev, sigma, blocks, profile, m):
    """``W^d sum_k sum_{a,b} <G_ring(s_k) E_a> S_ab (G_k^{(b)} L)`` by explicit block sums."""
    sigma = as_sigma(sigma)
    nb = profile.geo.n_blocks
    total = 0j
    for k in range(1, len(sigma) + 1):
        w = profile.sB @ centered_block_traces(ev, sigma[k - 1], m)
        for b in range(nb):
            if w[b] != 0:
                s2, a2 = glue_insert(sigma, blocks, k, b)
                total += w[b] * ev.loop(s2, a2)
    return total / profile.sW


def lightweight_term_site(ev, sigma, blocks, profile, m):
    """Same term through the site operator ``S[X]_xx = sum_y S_xy X_yy``.

    Evaluated with dense ``N x N`` products as an independent route.
    """
    sigma = as_sigma(sigma)
    geo = profile.geo
    N = geo.N
    S = profile.S()
    E = [np.zeros(N) for _ in blocks]
    for e, a in zip(E, blocks):
        e[geo.block_slice(a)] = 1.0 / geo.block_size
    total = 0j
    for k in range(len(sigma)):
        s = sigma[k]
        ms = m if s > 0 else np.conj(m)
        D = S @ (ev.G(s).diagonal() - ms)
        M = np.eye(N, dtype=complex)
        for i, si in enumerate(sigma):
            Gi = ev.G(si)
            F = (Gi * D) @ Gi if i == k else Gi
            M = (M @ F) * E[i]
        total += np.trace(M)
    return complex(total)


def quadratic_term(loop, sigma, blocks, profile):
    """``W^d sum_{k<l} sum_{a,b} (G_L L)(a) S_ab (G_R L)(b)`` for a loop callable.

    ``loop(sigma, blocks)`` may evaluate G-loops or primitive loops.
    """
    sigma = as_sigma(sigma)
    n = len(sigma)
    nb = profile.geo.n_blocks
    total = 0j
    for k in range(1, n):
        for l in range(k + 1, n + 1):
            x = np.array([loop(*glue_left(sigma, blocks, k, l, a)) for a in range(nb)])
            y = np.array([loop(*glue_right(sigma, blocks, k, l, b)) for b in range(nb)])
            total += x @ profile.sB @ y
    return total / profile.sW


def qvar_signature(sigma, blocks, blocks2, k, b, b2):
    """Charge string and blocks of the quadratic-variation loop, 1-based ``k``."""
    s, a, a2 = as_sigma(sigma), tuple(blocks), tuple(blocks2)
    neg = lambda xs: tuple(-x for x in xs)
    sig = s[k - 1:] + s[:k] + neg(s[:k][::-1]) + neg(s[k - 1:][::-1])
    blk = a[k - 1:] + a[:k - 1] + (b,) + a2[:k - 1][::-1] + a2[k - 1:][::-1] + (b2,)
    return sig, blk


def qvar_loop(ev, sigma, blocks, k, profile, blocks2=None):
    """``W^d sum_{b,b'} S_bb' L^(2n+2)`` with the quadratic-variation index tuple."""
    blocks2 = blocks if blocks2 is None else blocks2
    nb = profile.geo.n_blocks
    sB = profile.sB
    total = 0j
    for b in range(nb):
        for b2 in np.nonzero(sB[b])[0]:
            total += sB[b, b2] * ev.loop(*qvar_signature(sigma, blocks, blocks2, k, b, b2))
    return total / profile.sW


def qvar_site(ev, sigma, blocks, profile, k=None):
    """``sum_xy S_xy |Y_yx|^2`` with ``Y = X^(k)``, or ``Y = sum_k X^(k)`` when ``k`` is None.

    With a single ``k`` this equals :func:`qvar_loop` at ``a' = a``; the
    sum over ``k`` is the full quadratic variation ``E|dL|^2 / dt``.
    """
    n = len(as_sigma(sigma))
    ks = range(1, n + 1) if k is None else [k]
    Y = sum(ev.chain(sigma, blocks, kk) for kk in ks)
    return float(np.sum(profile.S() * np.abs(Y) ** 2))
