"""Acceptance criteria, one recorded verdict per criterion.

Each test prints a ``PASS``/``FAIL`` line through the ``record`` fixture;
the lines are collected in the terminal summary.  Tolerances are pinned and
never relaxed: a criterion that cannot be met fails here.
"""
import time

import numpy as np
import pytest

from bandlab import TorusGeometry, build_variance, resolve, sample_h
from bandlab import primitive as prim
from bandlab.flowlab import direct_vs_flow, hierarchy_residual
from bandlab.harness.config import from_dict
from bandlab.harness.estimators import mean_stderr
from bandlab.harness.experiments import (k_tensors_explicit, propagator_algebra, run_deloc,
                                         run_diffusion)
from bandlab.loops import LoopEvaluator, loop_ward_residual, ward_inequality_check
from bandlab.propagator import (decay_profile, difference_checks, evolution_kernel_apply,
                                kernel_inf_norm, leg, theta)
from bandlab.spectral import SpectralFlowState, m_sc, target_to_flow, ward_residual

E0, T0 = 0.3, 0.5
G729 = TorusGeometry(3, 3, 3)
G1728 = TorusGeometry(3, 3, 4)


def within3(a, b):
    return 1 / 3 <= a / b <= 3


# -- exact identities -------------------------------------------------------

def test_ward_identity(record):
    worst, t0 = 0.0, time.time()
    for geo in (TorusGeometry(3, 2, 2), G729):
        prof = build_variance(geo, 1.0)
        H = sample_h(prof, 11).H
        for eta in (1e-3, 1e-1):
            worst = max(worst, ward_residual(resolve(H, 0.2 + 1j * eta)))
    wall = time.time() - t0
    ok = worst <= 1e-9 and wall < 5
    record("ward_identity_N64_N729", ok, f"residual {worst:.2e} (<= 1e-9), {wall:.2f}s (< 5s)")
    assert ok


def test_loop_ward_L_and_K(record):
    prof = build_variance(G729, 1.0)
    st = SpectralFlowState(E0, T0)
    ev = LoopEvaluator(resolve(np.sqrt(st.t) * sample_h(prof, 2).H, st.z), G729)
    wL = max(loop_ward_residual(ev, s, st.eta) for n in (2, 3)
             for s in prim.all_sigmas(n) if s[0] == -s[-1])
    K = k_tensors_explicit(st.t, prof, st.m)
    wK = prim.k_ward_residual(K, st.t, st.m, prof)
    ok = wL <= 1e-8 and wK <= 1e-8
    record("loop_ward_L_K_n_le_3", ok, f"L {wL:.2e}, K {wK:.2e} (<= 1e-8)")
    assert ok


def test_propagator_algebra(record):
    worst, walls = 0.0, []
    for L in range(2, 9):
        prof = build_variance(TorusGeometry(3, 1, L), 1.0)
        t0 = time.time()
        worst = max(worst, max(propagator_algebra(prof).values()))
        walls.append(time.time() - t0)
    ok = worst <= 1e-10 and max(walls) < 1
    record("propagator_algebra_L_le_8", ok, f"residual {worst:.2e} (<= 1e-10), max {max(walls):.2f}s (< 1s)")
    assert ok


def _leg_setup():
    prof = build_variance(TorusGeometry(3, 1, 6), 1.0)
    m = complex(m_sc(E0))
    return prof, m


def test_kernel_decomposition_literal(record):
    # the form as stated, without the variance factor in front of Theta
    prof, m = _leg_setup()
    s, t = 0.5, 0.9
    worst = 0.0
    for si, sj in ((1, -1), (1, 1), (-1, -1)):
        xi = (m if si > 0 else np.conj(m)) * (m if sj > 0 else np.conj(m))
        lhs = leg(s, t, si, sj, prof, m)
        rhs = np.eye(prof.geo.n_blocks) + (t - s) * xi * theta(prof, t * xi).dense()
        worst = max(worst, np.abs(lhs - rhs).max())
    ok = worst <= 1e-12
    record("kernel_decomposition_literal", ok, f"max deviation {worst:.2e} (<= 1e-12)")
    assert ok


def test_kernel_decomposition_with_variance(record):
    prof, m = _leg_setup()
    s, t = 0.5, 0.9
    worst = 0.0
    for si, sj in ((1, -1), (1, 1), (-1, -1)):
        xi = (m if si > 0 else np.conj(m)) * (m if sj > 0 else np.conj(m))
        lhs = leg(s, t, si, sj, prof, m)
        rhs = np.eye(prof.geo.n_blocks) + (t - s) * xi * prof.sB @ theta(prof, t * xi).dense()
        worst = max(worst, np.abs(lhs - rhs).max())
    ok = worst <= 1e-12
    record("kernel_decomposition_with_S", ok, f"max deviation {worst:.2e} (<= 1e-12)")
    assert ok


def test_kernel_identity_and_semigroup(record):
    prof, m = _leg_setup()
    rng = np.random.default_rng(3)
    nb = prof.geo.n_blocks
    A = rng.standard_normal((nb,) * 3) + 1j * rng.standard_normal((nb,) * 3)
    sig = (1, -1, 1)
    e_id = np.abs(evolution_kernel_apply(0.7, 0.7, sig, A, prof, m) - A).max()
    U = evolution_kernel_apply(0.2, 0.9, sig, A, prof, m)
    V = evolution_kernel_apply(0.6, 0.9, sig, evolution_kernel_apply(0.2, 0.6, sig, A, prof, m), prof, m)
    e_sg = np.abs(U - V).max() / np.abs(U).max()
    ok = e_id <= 1e-12 and e_sg <= 1e-12
    record("kernel_identity_semigroup", ok, f"U_tt {e_id:.2e}, composition {e_sg:.2e} (<= 1e-12)")
    assert ok


def test_mollifier_and_sum_zero(record):
    geo = TorusGeometry(3, 1, 6)
    rng = np.random.default_rng(4)
    A = rng.standard_normal((geo.n_blocks,) * 3)
    e_norm = e_pq = 0.0
    for t in (0.0, 0.5, 0.9, 0.99):
        chi = prim.mollifier(3, t, geo)
        e_norm = max(e_norm, np.abs(prim.partial_sum(chi) - 1).max())
        e_pq = max(e_pq, np.abs(prim.partial_sum(prim.sum_zero(A, t, geo, chi))).max())
    ok = e_norm <= 1e-12 and e_pq <= 1e-12
    record("mollifier_sum_zero", ok, f"normalization {e_norm:.2e}, P Q_t {e_pq:.2e} (<= 1e-12)")
    assert ok


def test_cauchy_schwarz_chain(record):
    prof = build_variance(G729, 1.0)
    st = SpectralFlowState(E0, T0)
    ev = LoopEvaluator(resolve(np.sqrt(st.t) * sample_h(prof, 5).H, st.z), G729)
    rng = np.random.default_rng(8)
    excess = -np.inf
    for _ in range(100):
        n = int(rng.integers(2, 6))
        s = tuple(int(x) for x in rng.choice([1, -1], n))
        a = tuple(int(x) for x in rng.integers(0, G729.n_blocks, n))
        lhs, rhs, _ = ward_inequality_check(ev, s, a, int(rng.integers(1, n)))
        excess = max(excess, lhs - rhs)
    ok = excess <= 1e-12
    record("ward_inequality_cs_chain_100", ok, f"max(lhs - rhs) {excess:.2e} (<= 1e-12)")
    assert ok


# -- oracle equivalence ----------------------------------------------------------

def test_k2_k3_explicit_vs_ode(record):
    prof = build_variance(TorusGeometry(3, 3, 2), 1.0)
    m = complex(m_sc(E0))
    t0, worst = time.time(), 0.0
    rel = lambda A, B: np.abs(A - B).max() / np.abs(B).max()
    for t in (0.5, 0.9):
        K, _ = prim.k_loop_ode(3, t, prof, m)
        for s in prim.all_sigmas(2):
            worst = max(worst, rel(prim.k2_tensor(t, s, prof, m), K[s]))
        for s in prim.all_sigmas(3):
            worst = max(worst, rel(prim.k3_tensor(t, s, prof, m), K[s]))
    wall = time.time() - t0
    ok = worst <= 1e-6 and wall < 30
    record("k2_k3_explicit_vs_ode", ok, f"rel err {worst:.2e} (<= 1e-6), {wall:.1f}s (< 30s)")
    assert ok


def test_k4_tree_vs_ode(record):
    prof = build_variance(TorusGeometry(3, 3, 2), 1.0)
    m = complex(m_sc(E0))
    t0 = time.time()
    K, _ = prim.k_loop_ode(4, 0.5, prof, m)
    worst = 0.0
    for s in prim.all_sigmas(4):
        T = prim.k_loop_tree_tensor(4, 0.5, s, prof, m)
        worst = max(worst, np.abs(T - K[s]).max() / np.abs(K[s]).max())
    wall = time.time() - t0
    ok = worst <= 1e-5 and wall < 120
    record("k4_tree_vs_ode", ok, f"rel err {worst:.2e} (<= 1e-5), {wall:.1f}s (< 120s)")
    assert ok


def test_tsp_counts(record):
    t0 = time.time()
    got = {n: (len(prim.enumerate_tsp(n)), prim.brute_force_tsp_count(n)) for n in (3, 4, 5)}
    wall = time.time() - t0
    ok = all(a == b for a, b in got.values()) and wall < 60
    record("tsp_counts_vs_bruteforce", ok, f"{got}, {wall:.1f}s (< 60s)")
    assert ok


# -- statistical ---------------------------------------------------------------

def test_quantum_diffusion(record):
    cfg = from_dict({"geometry": {"d": 3, "W": 3, "L": 3}, "z": {"re": 0.2, "im": 0.05},
                     "samples": 200, "seed": 0})
    t0 = time.time()
    res = run_diffusion(cfg)
    wall = time.time() - t0
    parts = [f"r{i}: {c.estimate:.4g}+-{c.stderr:.2g} vs {c.target:.4g}" for i, c in enumerate(res["checks"])]
    ok = all(c.passed for c in res["checks"]) and wall < 600
    record("quantum_diffusion_3sigma", ok, "; ".join(parts) + f"; {wall:.0f}s (< 600s)")
    assert ok


def test_hierarchy_residual(record):
    prof = build_variance(G729, 1.0)
    t0 = time.time()
    hr = hierarchy_residual(prof, E0, T0, 5e-4, (-1, 1), (0, 1), 500, with_qvar=True)
    wall = time.time() - t0
    mean, err = hr["residual"]
    ok = abs(mean.real) <= 3 * err.real and abs(mean.imag) <= 3 * err.imag and wall < 1800
    record("hierarchy_residual_3sigma", ok,
           f"re {mean.real:.3g}+-{err.real:.2g}, im {mean.imag:.3g}+-{err.imag:.2g}; "
           f"qvar empirical {hr['empirical_qvar']:.3g}, full {hr['qvar_full'][0]:.3g}, "
           f"diagonal-only {hr['qvar_diag'][0]:.3g}; {wall:.0f}s (< 1800s)")
    assert ok


def test_flow_direct_equality(record):
    prof = build_variance(G729, 1.0)
    d, f = direct_vs_flow(prof, 0.2 + 0.05j, 200)
    (md, ed), (mf, ef) = mean_stderr(d), mean_stderr(f)
    se = float(np.hypot(ed, ef))
    ok = abs(md - mf) <= 3 * se
    t0, E = target_to_flow(0.2 + 0.05j)
    record("flow_vs_direct_im_G", ok, f"direct {md:.5f}, flow {mf:.5f}, diff {md - mf:.2e} "
           f"(<= 3 x {se:.2e}); t0 {t0:.4f}, E {E:.4f}")
    assert ok


def test_delocalization(record):
    out, ok = [], True
    for geo in (G729, G1728):
        cfg = from_dict({"geometry": {"d": 3, "W": geo.W, "L": geo.L}, "samples": 50, "kappa": 0.5})
        res = run_deloc(cfg)
        c, info = res["checks"][0], res["info"]
        ok = ok and c.passed
        out.append(f"N={geo.N}: median {c.value:.1f} (<= {c.bound:.1f}), GUE ratio {info['ratio_to_gue']:.3f}")
    record("delocalization_median", ok, "; ".join(out))
    assert ok


# -- measured constants -----------------------------------------------------------

def test_decay_constants_stable(record):
    vals = {}
    for L in (16, 24):
        prof = build_variance(TorusGeometry(3, 1, L), 1.0)
        dp = decay_profile(theta(prof, 0.9), 0.9)
        vals[L] = (dp["c"], dp["C"])
    ok = all(np.isfinite(v) and v > 0 for pair in vals.values() for v in pair) and \
        within3(vals[16][0], vals[24][0]) and within3(vals[16][1], vals[24][1])
    record("decay_constants_L16_L24", ok, f"(c, C) {vals}")
    assert ok


def test_difference_constants_stable(record):
    a = difference_checks(theta(build_variance(TorusGeometry(3, 1, 16), 1.0), 0.9))
    b = difference_checks(theta(build_variance(TorusGeometry(3, 1, 24), 1.0), 0.9))
    ok = all(np.isfinite(a[k]) and np.isfinite(b[k]) and within3(a[k], b[k]) for k in a)
    record("difference_constants_L16_L24", ok, f"{a} vs {b}")
    assert ok


def test_k_bound_ratio_stable(record):
    m = complex(m_sc(E0))
    vals = {}
    for L in (2, 3):
        prof = build_variance(TorusGeometry(3, 1, L), 1.0)
        K = k_tensors_explicit(0.9, prof, m)
        vals[L] = [prim.k_bound_ratio(K, n, 0.9, prof) for n in (2, 3)]
    ok = all(np.isfinite(v) for v in vals[2] + vals[3]) and \
        all(within3(x, y) for x, y in zip(vals[2], vals[3]))
    record("k_bound_ratio_L2_L3", ok, f"n=2,3 ratios {vals}")
    assert ok


def test_kernel_norms_stable(record):
    m = complex(m_sc(E0))
    vals = {}
    for L in (2, 3):
        prof = build_variance(TorusGeometry(3, 1, L), 1.0)
        vals[L] = [kernel_inf_norm(0.5, 0.9, s, prof, m) for s in ((1, -1), (1, 1))]
    ok = all(np.isfinite(v) for v in vals[2] + vals[3]) and \
        all(within3(x, y) for x, y in zip(vals[2], vals[3]))
    record("kernel_inf_norms_L2_L3", ok, f"(alternating, non-alternating) {vals}")
    assert ok
