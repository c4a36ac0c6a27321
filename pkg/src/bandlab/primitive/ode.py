"""Primitive loops as the solution of the closed quadratic hierarchy.

The system is integrated jointly for every charge string of length
``2..n_max`` with classical RK4.  It is independent of the propagator and
tree formulas and serves as their oracle.
"""
import itertools
import warnings

import numpy as np

from .explicit import charges


def all_sigmas(n):
    return list(itertools.product((1, -1), repeat=n))


def initial_condition(n, sigma, profile, m):
    nb = profile.geo.n_blocks
    if n == 1:
        return np.full(nb, charges(sigma, m)[0], dtype=complex)
    K = np.zeros((nb,) * n, dtype=complex)
    idx = np.arange(nb)
    K[(idx,) * n] = profile.sW ** (n - 1) * np.prod(charges(sigma, m))
    return K


def glue_left(sigma, k, l):
    """Charge string of ``(G_L)_{k,l}``: ``(s_1..s_k, s_l..s_n)``, 1-based."""
    return tuple(sigma[:k]) + tuple(sigma[l - 1:])


def glue_right(sigma, k, l):
    """Charge string of ``(G_R)_{k,l}``: ``(s_k..s_l)``, 1-based."""
    return tuple(sigma[k - 1:l])


def hierarchy_rhs(K, sigma, profile):
    """``W^d sum_{k<l} sum_{a,b} (G_L K)(..a..) S_ab (G_R K)(..b)``.

    ``K`` maps charge tuples to tensors; all needed shorter tensors must be
    present.
    """
    n = len(sigma)
    sB = profile.sB
    out = np.zeros((profile.geo.n_blocks,) * n, dtype=complex)
    for k in range(1, n):
        for l in range(k + 1, n + 1):
            X = K[glue_left(sigma, k, l)]
            Y = K[glue_right(sigma, k, l)] @ sB
            # X axes: a_1..a_{k-1}, a, a_l..a_n ; Y axes: a_k..a_{l-1}, a
            xi = list(range(0, k - 1)) + [n] + list(range(l - 1, n))
            yi = list(range(k - 1, l - 1)) + [n]
            out += np.einsum(X, xi, Y, yi, list(range(n)))
    return out / profile.sW


def _rk4(K0, sigmas, profile, t0, t1, steps):
    h = (t1 - t0) / steps
    K = dict(K0)

    def rhs(state):
        return {s: hierarchy_rhs(state, s, profile) for s in sigmas}

    for _ in range(steps):
        k1 = rhs(K)
        s2 = {**K, **{s: K[s] + 0.5 * h * k1[s] for s in sigmas}}
        k2 = rhs(s2)
        s3 = {**K, **{s: K[s] + 0.5 * h * k2[s] for s in sigmas}}
        k3 = rhs(s3)
        s4 = {**K, **{s: K[s] + h * k3[s] for s in sigmas}}
        k4 = rhs(s4)
        K.update({s: K[s] + h / 6 * (k1[s] + 2 * k2[s] + 2 * k3[s] + k4[s]) for s in sigmas})
    return K


def k_loop_ode(n_max, t_end, profile, m, steps=None, tol=1e-7, flag_tol=1e-4):
    """Integrate the hierarchy from ``t = 0`` to ``t_end``.

    Returns ``(K, info)`` where ``K[sigma]`` is the tensor for every charge
    tuple of length ``1..n_max`` and ``info`` holds the step-halving error.
    Steps are doubled until the relative step-halving difference is below
    ``tol`` or the budget runs out; the run is flagged unstable when the
    final difference exceeds ``flag_tol``.
    """
    if not 2 <= n_max <= 5:
        raise ValueError("n_max must lie in 2..5")
    if not 0 <= t_end < 1:
        raise ValueError("t_end must lie in [0, 1)")
    sigmas = [s for n in range(2, n_max + 1) for s in all_sigmas(n)]
    K0 = {s: initial_condition(len(s), s, profile, m) for n in range(1, n_max + 1) for s in all_sigmas(n)}
    if t_end == 0:
        return K0, {"steps": 0, "err": 0.0, "stable": True}
    if steps is None:
        steps = max(8, int(np.ceil(40 * t_end / (1 - t_end) ** 0.5)))
    coarse = _rk4(K0, sigmas, profile, 0.0, t_end, steps)
    err = np.inf
    for _ in range(8):
        fine = _rk4(K0, sigmas, profile, 0.0, t_end, 2 * steps)
        scale = max(np.abs(fine[s]).max() for s in sigmas)
        err = max(np.abs(fine[s] - coarse[s]).max() for s in sigmas) / scale
        steps *= 2
        coarse = fine
        if err <= tol:
            break
    stable = bool(err <= flag_tol)
    if not stable:
        warnings.warn(f"K-loop ODE step-halving disagreement {err:.2e}", RuntimeWarning)
    return coarse, {"steps": steps, "err": float(err), "stable": stable}
