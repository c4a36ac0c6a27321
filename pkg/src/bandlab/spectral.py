"""Semicircle law, the characteristic flow, resolvents and eigenvectors."""
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla


def _quadratic_root(b, c):
    """Root of ``m^2 + b m + c = 0`` with positive imaginary part.

    The larger root is taken from the cancellation-free formula and the
    other one from Vieta, so both are accurate for large ``|b|``.
    """
    b = np.asarray(b, dtype=complex)
    s = np.sqrt(b * b - 4 * c)
    s = np.where((np.conj(b) * s).real >= 0, s, -s)
    big = (-b - s) / 2
    small = np.where(big != 0, c / np.where(big != 0, big, 1), 0)
    return np.where(big.imag > small.imag, big, small)


def m_sc(z):
    """Stieltjes transform of the semicircle law, ``Im m > 0``.

    Real ``z`` is read as the boundary value ``E + i0+`` and must lie in
    the open bulk ``|E| < 2``.
    """
    z = np.asarray(z)
    if not np.iscomplexobj(z) or np.any(z.imag == 0):
        E = np.real(z)
        real = np.imag(z) == 0 if np.iscomplexobj(z) else np.ones(np.shape(z), bool)
        if np.any(np.abs(E[real]) >= 2):
            raise ValueError("boundary value m(E + i0) requires |E| < 2")
        bnd = (-E + 1j * np.sqrt(np.clip(4 - E * E, 0, None))) / 2
        if not np.iscomplexobj(z):
            return bnd[()] if bnd.ndim == 0 else bnd
        out = np.where(real, bnd, _quadratic_root(np.where(real, 1j, z), 1.0))
        return out[()] if out.ndim == 0 else out
    out = _quadratic_root(z, 1.0)
    return out[()] if out.ndim == 0 else out


def m_t(z, t):
    """Solution of ``m = -1/(z + t m)`` in the upper half plane."""
    z = np.asarray(z, dtype=complex)
    if t < 0 or t > 1:
        raise ValueError("t must lie in [0, 1]")
    if np.any(z.imag <= 0):
        raise ValueError("m_t requires Im z > 0")
    if t == 0:
        out = -1 / z
    else:
        out = _quadratic_root(z / t, 1 / t)
    if np.any(~np.isfinite(out)) or np.any(out.imag <= 0):
        raise ArithmeticError("branch selection failed")
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class SpectralFlowState:
    """Point ``(E, t)`` on the characteristic flow.

    ``z_t = E + (1 - t) m(E)`` keeps ``m_t(z_t) = m(E)`` constant in ``t``.
    """

    E: float
    t: float

    @property
    def m(self):
        return complex(m_sc(float(self.E)))

    @property
    def z(self):
        return self.E + (1 - self.t) * self.m

    @property
    def eta(self):
        return (1 - self.t) * self.m.imag

    def ell(self, L):
        return ell(self.t, L)

    def m_of(self, sigma):
        return self.m if sigma > 0 else self.m.conjugate()


def ell(t, L):
    """Diffusive length ``min(|1 - t|^{-1/2}, L)``."""
    if t == 1:
        return float(L)
    return min(abs(1 - t) ** -0.5, float(L))


def target_to_flow(z, kappa=0.0):
    """Flow coordinates ``(t0, E)`` reaching the spectral parameter ``z``.

    With ``t0 = |m(z)|^2`` and ``E = -2 Re m(z) / |m(z)|`` one has
    ``sqrt(t0) m(E) = m(z)`` and ``z_{t0}(E) = sqrt(t0) z``.
    """
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("target requires Im z > 0")
    if abs(z.real) > 2 - kappa:
        raise ValueError("target outside the bulk window |Re z| <= 2 - kappa")
    m = complex(m_sc(z))
    t0 = abs(m) ** 2
    E = -2 * m.real / abs(m)
    st = SpectralFlowState(E, t0)
    res = max(abs(np.sqrt(t0) * st.m - m), abs(st.z - np.sqrt(t0) * z))
    if res > 1e-10:
        raise ArithmeticError(f"flow target identity residual {res:.3e}")
    return t0, E


@dataclass(frozen=True)
class ResolventBundle:
    """Resolvent ``G = (H - z)^{-1}`` of a dense Hermitian matrix."""

    H: np.ndarray
    z: complex
    G: np.ndarray

    @property
    def eta(self):
        return self.z.imag

    def of(self, sigma):
        """``G(+) = G`` and ``G(-) = G^*``."""
        return self.G if sigma > 0 else self.G.conj().T

    def residual(self):
        N = self.H.shape[0]
        return np.abs((self.H - self.z * np.eye(N)) @ self.G - np.eye(N)).max()


def resolve(H, z):
    """Dense LU solve of ``(H - z) G = I``."""
    H = np.asarray(H)
    z = complex(z)
    if abs(z.imag) <= 1e-12:
        ev = np.linalg.eigvalsh(H)
        if np.min(np.abs(ev - z.real)) <= 1e-12:
            raise np.linalg.LinAlgError("spectral parameter on the spectrum")
    N = H.shape[0]
    A = H - z * np.eye(N)
    G = sla.solve(A, np.eye(N, dtype=complex), overwrite_a=True, check_finite=False)
    return ResolventBundle(H, z, G)


def ward_residual(bundle):
    """Maximal relative residual of the Ward identities.

    Checks ``sum_x |G_xy|^2 = Im G_yy / eta`` per column and the off-diagonal
    form ``G^* G = (G - G^*) / (2 i eta)``.
    """
    G, eta = bundle.G, bundle.eta
    lhs = np.einsum("xy,xy->y", G.conj(), G).real
    rhs = G.diagonal().imag / eta
    diag = np.abs(lhs - rhs).max() / np.abs(rhs).max()
    full_l = G.conj().T @ G
    full_r = (G - G.conj().T) / (2j * eta)
    off = np.abs(full_l - full_r).max() / np.abs(full_r).max()
    return float(max(diag, off))


def eigensystem(H):
    """Eigenvalues (ascending) and orthonormal eigenvectors of ``H``."""
    return sla.eigh(H, driver="evr", check_finite=False)


def bulk_sup_norms(evals, evecs, kappa):
    """``N * max_x |psi_k(x)|^2`` for every eigenvector with ``|lambda_k| <= 2 - kappa``."""
    N = evecs.shape[0]
    sel = np.abs(evals) <= 2 - kappa
    return N * (np.abs(evecs[:, sel]) ** 2).max(axis=0)
