"""Ward identity and size bounds for primitive loops."""
import numpy as np

from ..propagator import b_param
from .explicit import as_sigma


def k_ward_residual(K, t, m, profile, n=None):
    """Largest relative residual of the vertex Ward identity.

    For every stored ``sigma`` with ``sigma_1 = -sigma_n`` checks
    ``sum_{a_n} K^(n) = (K^(n-1)_{(+, s_2..s_{n-1})} - K^(n-1)_{(-, ...)}) / (2 i W^d eta_t)``
    with ``eta_t = (1 - t) Im m``.
    """
    eta = (1 - t) * np.imag(m)
    worst = 0.0
    for sig, T in K.items():
        if len(sig) < 2 or (n is not None and len(sig) != n) or sig[0] != -sig[-1]:
            continue
        lhs = T.sum(axis=-1)
        mid = tuple(sig[1:-1])
        rhs = (K[(1,) + mid] - K[(-1,) + mid]) * profile.sW / (2j * eta)
        scale = max(np.abs(lhs).max(), np.abs(rhs).max())
        worst = max(worst, float(np.abs(lhs - rhs).max() / scale))
    return worst


def k_bound_ratio(K, n, t, profile):
    """``max_{sigma,a} |K^(n)| / (W^{-d} B_{t,0})^{n-1}``."""
    top = max(np.abs(T).max() for s, T in K.items() if len(s) == n)
    return float(top / (profile.sW * b_param(t, 0, profile.geo)) ** (n - 1))


def pure_loop_decay(values_by_distance):
    """Fitted exponential rate of ``|K|`` against the maximal pairwise distance."""
    r = np.array(sorted(values_by_distance))
    v = np.array([values_by_distance[x] for x in r])
    mask = v > 0
    slope = np.polyfit(r[mask], np.log(v[mask]), 1)[0]
    return float(-slope)
