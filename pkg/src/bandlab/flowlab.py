"""Matrix Brownian motion along the characteristic flow.

``H_t`` evolves by Euler-Maruyama increments ``sqrt(S) dB`` from ``H_0 = 0``
and the resolvent is recomputed at ``z_t = E + (1 - t) m(E)`` on each grid
point.  Since the increments are Gaussian, ``H_t`` has exactly the law of
``sqrt(t) H``; the hierarchy check uses this to start directly at ``t``.
"""
import csv
from dataclasses import dataclass, field

import numpy as np

from .loops import LoopEvaluator, lightweight_term, qvar_site, quadratic_term
from .model import brownian_increment, increment_stream, sample_h
from .spectral import SpectralFlowState, resolve


@dataclass
class FlowTrajectory:
    """Recorded observables of one trajectory."""

    E: float
    t_grid: np.ndarray
    seed: int
    values: dict = field(default_factory=dict)
    snapshots: dict = field(default_factory=dict)

    def rows(self):
        for name, vals in self.values.items():
            for t, v in zip(self.t_grid, vals):
                yield self.seed, float(t), name, float(np.real(v)), float(np.imag(v))


def simulate_flow(profile, E, t_grid, seed, observables, keep=()):
    """Run one trajectory.

    Parameters
    ----------
    profile : VarianceProfile
    E : float
        Flow parameter in the bulk.
    t_grid : array_like
        Strictly increasing times in ``[0, 0.95]``.
    seed : int
    observables : dict
        Name to callable ``f(evaluator, state) -> complex``.
    keep : iterable of int
        Grid indices whose ``H_t`` is stored in ``snapshots``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0) or t_grid[0] < 0 or t_grid[-1] > 0.95:
        raise ValueError("t_grid must be strictly increasing within [0, 0.95]")
    rng = increment_stream(seed, 0)
    H = np.zeros((profile.geo.N,) * 2, dtype=complex)
    traj = FlowTrajectory(E, t_grid, seed, {k: [] for k in observables})
    keep = set(keep)
    t_prev = 0.0
    for i, t in enumerate(t_grid):
        if t > t_prev:
            H = H + brownian_increment(profile, t - t_prev, rng)
        t_prev = t
        st = SpectralFlowState(E, t)
        ev = LoopEvaluator(resolve(H, st.z), profile.geo)
        for name, f in observables.items():
            traj.values[name].append(f(ev, st))
        if i in keep:
            traj.snapshots[i] = H.copy()
    return traj


def write_trajectories_csv(path, trajectories):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "t", "observable_id", "re", "im"])
        for tr in trajectories:
            for row in tr.rows():
                w.writerow(row)


def hierarchy_sample(profile, E, t, dt, sigma, blocks, seed, with_qvar=False):
    """One-seed residual ``(L_{t+dt} - L_t)/dt - quadratic - light-weight``.

    ``H_t`` is drawn as ``sqrt(t) H`` and advanced by one increment.
    """
    st0, st1 = SpectralFlowState(E, t), SpectralFlowState(E, t + dt)
    H = np.sqrt(t) * sample_h(profile, seed).H
    ev0 = LoopEvaluator(resolve(H, st0.z), profile.geo)
    H1 = H + brownian_increment(profile, dt, increment_stream(seed, 0))
    ev1 = LoopEvaluator(resolve(H1, st1.z), profile.geo)
    l0, l1 = ev0.loop(sigma, blocks), ev1.loop(sigma, blocks)
    quad = quadratic_term(ev0.loop, sigma, blocks, profile)
    light = lightweight_term(ev0, sigma, blocks, profile, st0.m)
    out = {"increment": (l1 - l0) / dt, "quadratic": quad, "lightweight": light,
           "residual": (l1 - l0) / dt - quad - light}
    if with_qvar:
        out["qvar_full"] = qvar_site(ev0, sigma, blocks, profile)
        out["qvar_diag"] = sum(qvar_site(ev0, sigma, blocks, profile, k)
                               for k in range(1, len(sigma) + 1))
    return out


def hierarchy_residual(profile, E, t, dt, sigma, blocks, n_samples, seed0=0, with_qvar=False,
                       map_fn=map):
    """Mean and standard error of the hierarchy residual over seeds.

    Returns a dict of per-field ``(mean, stderr)`` for complex fields (real
    and imaginary parts separately) and the raw samples.
    """
    if len(sigma) not in (2, 3):
        raise ValueError("hierarchy residual is implemented for n in {2, 3}")
    if dt > 1e-3:
        raise ValueError("dt must be at most 1e-3")
    samples = list(map_fn(lambda s: hierarchy_sample(profile, E, t, dt, sigma, blocks, seed0 + s,
                                                     with_qvar), range(n_samples)))
    out = {"samples": samples}
    for key in samples[0]:
        v = np.array([s[key] for s in samples])
        out[key] = (v.mean(), v.real.std(ddof=1) / np.sqrt(len(v)) + 1j * v.imag.std(ddof=1) / np.sqrt(len(v)))
    inc = np.array([s["increment"] for s in samples])
    out["empirical_qvar"] = float(np.var(inc, ddof=1) * dt) if len(inc) > 1 else 0.0
    return out


def direct_vs_flow(profile, z, n_samples, steps=20, seed0=0, map_fn=map):
    """Samples of ``Im <G>`` from direct ``G(z)`` and from ``sqrt(t0) G_{t0}(z_{t0})``.

    The flow path reaches ``t0`` through ``steps`` Euler increments.
    """
    from .spectral import target_to_flow
    t0, E = target_to_flow(z)
    N = profile.geo.N

    def direct(s):
        G = resolve(sample_h(profile, seed0 + s).H, z).G
        return np.trace(G).imag / N

    def flow(s):
        grid = np.linspace(t0 / steps, t0, steps)
        grid[-1] = t0
        rng = increment_stream(seed0 + 10 ** 6 + s, 0)
        H = np.zeros((N, N), dtype=complex)
        prev = 0.0
        for t in grid:
            H = H + brownian_increment(profile, t - prev, rng)
            prev = t
        G = resolve(H, SpectralFlowState(E, t0).z).G
        return np.sqrt(t0) * np.trace(G).imag / N

    return np.array(list(map_fn(direct, range(n_samples)))), np.array(list(map_fn(flow, range(n_samples))))
