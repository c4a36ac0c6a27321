"""Block propagators, control parameters, tails and evolution kernels.

Every block-level operator here is a symmetric circulant on ``Z_L^d`` and
is handled through its Fourier symbol.  Dense matrices are only built for
small ``L`` cross-checks.
"""
import csv
import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .model import circulant_dense


def _as_sigma(sigma):
    if isinstance(sigma, str):
        return tuple(1 if c == "+" else -1 for c in sigma)
    return tuple(int(s) for s in sigma)


def apply_symbol(symbol, A, axis, geo):
    """Apply the circulant with Fourier ``symbol`` along one block axis of ``A``.

    ``A`` has shape ``(L^d,) * n``; axis ``axis`` is unflattened to
    ``(L,) * d`` for the transform.
    """
    d, L = geo.d, geo.L
    X = np.moveaxis(np.asarray(A), axis, -1)
    shp = X.shape
    X = X.reshape(shp[:-1] + (L,) * d)
    ax = tuple(range(-d, 0))
    Y = np.fft.ifftn(np.fft.fftn(X, axes=ax) * symbol, axes=ax)
    return np.moveaxis(Y.reshape(shp), -1, axis)


def kernel_from_symbol(symbol):
    """First row (offsets in FFT order) of the circulant with this symbol."""
    return np.fft.ifftn(symbol)


@dataclass(frozen=True)
class PropagatorFamily:
    """``Theta_xi = (1 - xi S^(B))^{-1}`` on the block torus."""

    profile: object
    xi: complex

    @property
    def geo(self):
        return self.profile.geo

    @cached_property
    def symbol(self):
        den = 1 - self.xi * self.profile.symbol
        if np.abs(den).min() < 1e-12:
            raise ValueError("propagator is numerically singular")
        return 1 / den

    @cached_property
    def kernel(self):
        """``Theta(0, c)`` indexed by offset ``c`` in FFT order, shape ``(L,)*d``."""
        k = kernel_from_symbol(self.symbol)
        return k.real if np.isrealobj(self.xi) or complex(self.xi).imag == 0 else k

    @cached_property
    def kernel_ring(self):
        """Zero-mode-removed kernel: subtract the mean of all entries."""
        return self.kernel - self.kernel.sum() / self.geo.n_blocks

    def dense(self):
        return circulant_dense(self.kernel, self.geo)

    def dense_ring(self):
        return circulant_dense(self.kernel_ring, self.geo)

    def apply(self, A, axis):
        return apply_symbol(self.symbol, A, axis, self.geo)

    def offsets_l1(self):
        """Periodic L1 length of every offset, aligned with ``kernel``."""
        L, d = self.geo.L, self.geo.d
        g = np.indices((L,) * d)
        rep = np.where(g > L // 2, g - L, g)
        return np.abs(rep).sum(0)


def theta(profile, xi):
    """Propagator family for the complex parameter ``xi``, ``|xi| < 1``."""
    if abs(xi) >= 1:
        raise ValueError("propagator requires |xi| < 1")
    fam = PropagatorFamily(profile, complex(xi) if np.iscomplexobj(xi) else float(xi))
    fam.symbol
    return fam


# -- control parameters and tails ------------------------------------------

def b_param(t, K, geo):
    """``B_{t,K} = (K+1)^{-(d-2)} + (L^d |1-t|)^{-1}``."""
    return (K + 1.0) ** (-(geo.d - 2)) + 1.0 / (geo.n_blocks * abs(1 - t))


def ell(t, geo):
    L = geo.L if hasattr(geo, "L") else geo
    if t == 1:
        return float(L)
    return min(abs(1 - t) ** -0.5, float(L))


def tail(t, r, geo):
    """Tail function with polynomial core and stretched exponential cut-off."""
    r = np.asarray(r, dtype=float)
    core = 1 / (r ** (geo.d - 2) + 1) + 1 / (geo.n_blocks * abs(1 - t))
    return core * np.exp(-np.sqrt(r / ell(t, geo)))


def tail_trunc(t, r, ell_cut, geo, D=12):
    """``max(T_t(min(r, ell)), W^{-D})``."""
    r = np.minimum(np.asarray(r, dtype=float), ell_cut)
    return np.maximum(tail(t, r, geo), float(geo.W) ** (-D))


def tail_composition_constant(geo, pairs):
    """Measured constant in ``sum_c T_u(|a-c|) T_t(|c-b|) <= C/(1-u) T_t(|a-b|)``.

    ``pairs`` is an iterable of ``(u, t)``; returns the largest ratio found
    over all ``a, b`` for each pair.
    """
    D = geo.block_dist_matrix
    out = []
    for u, t in pairs:
        Tu, Tt = tail(u, D, geo), tail(t, D, geo)
        lhs = Tu @ Tt
        out.append(float(np.max(lhs * (1 - u) / Tt)))
    return out


# -- measured decay constants ----------------------------------------------

def _shell_max(values, radius):
    rmax = int(radius.max())
    out = np.zeros(rmax + 1)
    np.maximum.at(out, radius.ravel(), np.abs(values).ravel())
    return out


def decay_profile(family, t):
    """Tabulate the decay of ``|Theta(0, a)|`` and fit ``C B_{t,|a|} exp(-c|a|/ell_t)``.

    Returns a dict with the shell table and the fitted ``(c, C)``.  The rate
    is a least-squares slope of ``log(max_shell / B)`` against ``r/ell_t``;
    ``C`` is the smallest prefactor that makes the bound hold on every shell.
    """
    geo = family.geo
    r = family.offsets_l1()
    shells = _shell_max(family.kernel, r)
    radii = np.arange(len(shells))
    B = b_param(t, radii, geo)
    lt = ell(t, geo)
    y = np.log(shells / B)
    mask = radii >= 1
    slope = np.polyfit(radii[mask] / lt, y[mask], 1)[0] if mask.sum() >= 2 else 0.0
    c = float(-slope)
    C = float(np.max(shells / (B * np.exp(-c * radii / lt))))
    ok = bool(np.isfinite(c) and np.isfinite(C) and c > 0)
    return {"t": t, "xi": family.xi, "radius": radii, "max_abs": shells,
            "bound": C * B * np.exp(-c * radii / lt), "c": c, "C": C, "ok": ok}


def short_decay_profile(family, r_min=1):
    """Fit ``|Theta_xi(0,a)| <= C exp(-c|a|)`` for a short propagator."""
    r = family.offsets_l1()
    shells = _shell_max(family.kernel, r)
    radii = np.arange(len(shells))
    mask = (radii >= r_min) & (shells > 1e-300)
    slope = np.polyfit(radii[mask], np.log(shells[mask]), 1)[0]
    c = float(-slope)
    C = float(np.max(shells * np.exp(c * radii)))
    return {"xi": family.xi, "radius": radii, "max_abs": shells, "c": c, "C": C,
            "C_unit": float(np.max(shells[radii >= r_min] * np.exp(radii[radii >= r_min]))),
            "ok": bool(c > 0 and np.isfinite(C))}


def difference_checks(family, rmax=3):
    """Measured constants for the difference and zero-mode bounds.

    For every offset ``r`` with ``1 <= |r| <= rmax`` and every ``a`` with
    ``|r| <= |a|/2`` records

    * ``|Theta(a+r) - Theta(a)| (|a|+1)^{d-1} / |r|``,
    * ``|Theta(a+r) + Theta(a-r) - 2 Theta(a)| (|a|+1)^d / |r|^2``,

    and ``|Theta_ring(a)| (|a|+1)^{d-2}`` over all ``a``.
    """
    geo = family.geo
    d = geo.d
    k = family.kernel
    ra = family.offsets_l1()
    c1 = c2 = 0.0
    for r in itertools.product(range(-rmax, rmax + 1), repeat=d):
        nr = sum(abs(v) for v in r)
        if nr == 0 or nr > rmax:
            continue
        ax = tuple(range(d))
        plus = np.roll(k, tuple(-v for v in r), axis=ax)
        minus = np.roll(k, r, axis=ax)
        sel = ra >= 2 * nr
        if not sel.any():
            continue
        d1 = np.abs(plus - k)[sel] * (ra[sel] + 1.0) ** (d - 1) / nr
        d2 = np.abs(plus + minus - 2 * k)[sel] * (ra[sel] + 1.0) ** d / nr ** 2
        c1, c2 = max(c1, d1.max()), max(c2, d2.max())
    c0 = float(np.max(np.abs(family.kernel_ring) * (ra + 1.0) ** (d - 2)))
    return {"first": float(c1), "second": float(c2), "ring": c0}


def write_decay_csv(path, rows):
    """Rows of ``(t, xi_kind, shell_radius, max_abs, bound_value)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "xi_kind", "shell_radius", "max_abs", "bound_value"])
        for row in rows:
            w.writerow(row)


# -- loop-tensor operators ---------------------------------------------------

def _pairs(sigma, m):
    n = len(sigma)
    ms = [m if s > 0 else np.conj(m) for s in sigma]
    return [ms[i] * ms[(i + 1) % n] for i in range(n)]


def theta_operator(t, sigma, A, profile, m):
    """Linearized hierarchy operator on an ``n``-tensor.

    Sums over axes ``i`` the action of ``m_i m_{i+1} S^(B) Theta_{t m_i m_{i+1}}``
    along axis ``i`` (cyclic, ``sigma_{n+1} = sigma_1``).
    """
    sigma = _as_sigma(sigma)
    A = np.asarray(A)
    if A.ndim != len(sigma):
        raise ValueError("tensor rank does not match the charge string")
    s = profile.symbol
    out = np.zeros(A.shape, dtype=complex)
    for i, xi in enumerate(_pairs(sigma, m)):
        out += apply_symbol(xi * s / (1 - t * xi * s), A, i, profile.geo)
    return out


def leg_symbol(s, t, xi, profile):
    sym = profile.symbol
    return (1 - s * xi * sym) / (1 - t * xi * sym)


def leg(s, t, sigma_i, sigma_j, profile, m):
    """Dense single-axis evolution kernel ``(1 - s xi S)(1 - t xi S)^{-1}``."""
    xi = _pairs((sigma_i, sigma_j), m)[0]
    k = kernel_from_symbol(leg_symbol(s, t, xi, profile))
    return circulant_dense(k, profile.geo)


def evolution_kernel_apply(s, t, sigma, A, profile, m):
    """Apply ``U_{s,t,sigma}``: the product of per-axis legs."""
    if not 0 <= s <= t < 1:
        raise ValueError("need 0 <= s <= t < 1")
    sigma = _as_sigma(sigma)
    out = np.asarray(A, dtype=complex)
    for i, xi in enumerate(_pairs(sigma, m)):
        out = apply_symbol(leg_symbol(s, t, xi, profile), out, i, profile.geo)
    return out


def kernel_norm_ratio(s, t, sigma, profile, m):
    """``||U_{s,t} A||_inf / ||A||_inf`` for the diagonal indicator ``A``.

    The diagonal tensor ``1(a_1 = ... = a_n)`` is the sharpest locally
    supported input.
    """
    n = len(_as_sigma(sigma))
    nb = profile.geo.n_blocks
    A = np.zeros((nb,) * n)
    idx = np.arange(nb)
    A[(idx,) * n] = 1.0
    U = evolution_kernel_apply(s, t, sigma, A, profile, m)
    return float(np.abs(U).max() / np.abs(A).max())


def kernel_inf_norm(s, t, sigma, profile, m):
    """``||U_{s,t,sigma}||_{inf -> inf}``.

    ``U`` is a tensor product of circulant legs, so its norm is the product
    of the per-axis maximal absolute row sums.
    """
    sigma = _as_sigma(sigma)
    out = 1.0
    for xi in _pairs(sigma, m):
        out *= float(np.abs(kernel_from_symbol(leg_symbol(s, t, xi, profile))).sum())
    return out
