"""Zero-mode and sum-zero operators on block tensors."""
import numpy as np

from ..lattice import periodic_rep
from ..propagator import ell


def _check_axis(A, i):
    if not 0 <= i < np.ndim(A):
        raise ValueError(f"axis {i} out of range for rank {np.ndim(A)}")


def partial_avg(A, i):
    """``P^(i)``: average over axis ``i``, constant along that axis."""
    _check_axis(A, i)
    return np.broadcast_to(np.mean(A, axis=i, keepdims=True), np.shape(A)).copy()


def zero_mode(A, i):
    """``Q^(i) = 1 - P^(i)``."""
    return np.asarray(A) - partial_avg(A, i)


def partial_sum(A):
    """``(P A)_{a_1} = sum_{a_2..a_n} A``."""
    A = np.asarray(A)
    return A.reshape(A.shape[0], -1).sum(axis=1)


def bump(x):
    """Smooth bump ``exp(-1/(1-|x|^2))`` supported in the unit ball."""
    r2 = np.sum(np.asarray(x, float) ** 2, axis=-1)
    out = np.zeros_like(r2)
    inside = r2 < 1
    out[inside] = np.exp(-1 / (1 - r2[inside]))
    return out


def mollifier(n, t, geo, support=2.0):
    """Product mollifier ``prod_{i>=2} f_t(a_i - a_1) / sum_a f_t(a)``.

    ``f_t(a) = f(a / (support * ell_t))`` with the unit bump ``f``; the
    ``ell_t^{-d}`` prefactor cancels in the normalization.
    """
    if n < 2:
        raise ValueError("mollifier needs n >= 2")
    B = geo.block_table
    diff = periodic_rep(B[None, :, :] - B[:, None, :], geo.L)
    f = bump(diff / (support * ell(t, geo)))
    row = f / f.sum(axis=1, keepdims=True)
    nb = geo.n_blocks
    chi = np.ones((nb,) + (1,) * (n - 1))
    for i in range(1, n):
        shape = [nb] + [1] * (n - 1)
        shape[i] = nb
        chi = chi * row.reshape(shape)
    return chi


def sum_zero(A, t, geo, chi=None):
    """``Q_t A = A - (P A)_{a_1} chi``; satisfies ``P Q_t A = 0``."""
    A = np.asarray(A)
    if chi is None:
        chi = mollifier(A.ndim, t, geo)
    pa = partial_sum(A).reshape((-1,) + (1,) * (A.ndim - 1))
    return A - pa * chi
