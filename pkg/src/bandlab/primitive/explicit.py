"""Closed forms of the primitive loops of length one, two and three."""
import numpy as np

from ..propagator import theta


def as_sigma(sigma):
    """Normalize a charge string (``"+-"`` or a sequence of +-1) to a tuple of ints."""
    if isinstance(sigma, str):
        if set(sigma) - {"+", "-"}:
            raise ValueError(f"bad charge string {sigma!r}")
        return tuple(1 if c == "+" else -1 for c in sigma)
    out = tuple(int(s) for s in sigma)
    if any(s not in (1, -1) for s in out):
        raise ValueError(f"bad charge string {sigma!r}")
    return out


def sigma_str(sigma):
    return "".join("+" if s > 0 else "-" for s in sigma)


def charges(sigma, m):
    """``m(sigma_i)``: ``m`` for ``+`` and its conjugate for ``-``."""
    return [m if s > 0 else np.conj(m) for s in as_sigma(sigma)]


def _check_t(t):
    if not 0 <= t < 1:
        raise ValueError("t must lie in [0, 1)")


def k1(sigma, m):
    (s,) = as_sigma(sigma)
    return m if s > 0 else np.conj(m)


def k2_tensor(t, sigma, profile, m):
    """``W^{-d} m_1 m_2 Theta_{t m_1 m_2}`` as an ``L^d x L^d`` array."""
    _check_t(t)
    m1, m2 = charges(sigma, m)
    return profile.sW * m1 * m2 * theta(profile, t * m1 * m2).dense()


def k2(t, sigma, a1, a2, profile, m):
    return complex(k2_tensor(t, sigma, profile, m)[a1, a2])


def _theta_rows(t, sigma, profile, m):
    ms = charges(sigma, m)
    n = len(ms)
    return ms, [theta(profile, t * ms[i] * ms[(i + 1) % n]).dense() for i in range(n)]


def k3(t, sigma, blocks, profile, m):
    """``W^{-2d} m_1 m_2 m_3 sum_b Theta_12(a_1,b) Theta_23(a_2,b) Theta_31(a_3,b)``."""
    _check_t(t)
    ms, T = _theta_rows(t, sigma, profile, m)
    a1, a2, a3 = blocks
    s = np.sum(T[0][a1] * T[1][a2] * T[2][a3])
    return complex(profile.sW ** 2 * np.prod(ms) * s)


def k3_tensor(t, sigma, profile, m):
    _check_t(t)
    ms, T = _theta_rows(t, sigma, profile, m)
    return profile.sW ** 2 * np.prod(ms) * np.einsum("ib,jb,kb->ijk", T[0], T[1], T[2])
