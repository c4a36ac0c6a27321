import itertools

import numpy as np
import pytest

from bandlab import TorusGeometry, build_variance
from bandlab import primitive as prim
from bandlab.primitive.trees import _edge_matrices
from bandlab.propagator import b_param
from bandlab.spectral import m_sc

M = complex(m_sc(0.3))


def test_as_sigma():
    assert prim.as_sigma("+-") == (1, -1)
    with pytest.raises(ValueError):
        prim.as_sigma("+x")


def test_k1_and_k2_initial(l2_profile):
    assert prim.k1("+", M) == M and prim.k1("-", M) == np.conj(M)
    K = prim.k2_tensor(0.0, "+-", l2_profile, M)
    assert np.allclose(K, l2_profile.sW * np.eye(8) * abs(M) ** 2)
    with pytest.raises(ValueError):
        prim.k2_tensor(1.0, "+-", l2_profile, M)


def test_k2_row_sum(small_profile):
    t = 0.7
    K = prim.k2_tensor(t, "+-", small_profile, M)
    assert np.allclose(K.sum(1), small_profile.sW / (1 - t))


def test_k3_cyclic(small_profile):
    s, a = (1, 1, -1), (3, 10, 40)
    v = prim.k3(0.6, s, a, small_profile, M)
    assert abs(v - prim.k3(0.6, s[1:] + s[:1], a[1:] + a[:1], small_profile, M)) < 1e-15


def test_tsp_counts():
    assert [len(prim.enumerate_tsp(n)) for n in (3, 4, 5, 6)] == [1, 3, 11, 45]
    for n in (3, 4, 5):
        assert len(prim.enumerate_tsp(n)) == prim.brute_force_tsp_count(n)
    assert all(tr.n_internal <= 3 for tr in prim.enumerate_tsp(5))
    with pytest.raises(ValueError):
        prim.enumerate_tsp(7)


def test_tree_invariants():
    for n in (3, 4, 5, 6):
        for tr in prim.enumerate_tsp(n):
            V = n + tr.n_internal
            assert len(tr.edges) == V - 1
            deg = np.zeros(V, int)
            for u, v in tr.edges:
                deg[u] += 1
                deg[v] += 1
            assert np.all(deg[:n] == 1) and np.all(deg[n:] >= 3)
            for (p, q), (e1, e2) in zip(tr.intervals, tr.regions):
                if p == q:
                    assert e2 == p % n + 1


def test_tree_n3_is_k3(small_profile):
    (tr,) = prim.enumerate_tsp(3)
    for s in prim.all_sigmas(3):
        a = (1, 7, 30)
        v = small_profile.sW ** 2 * prim.tree_value(tr, 0.6, s, a, small_profile, M)
        assert abs(v - prim.k3(0.6, s, a, small_profile, M)) < 1e-12 * abs(v)


def test_tree_value_vs_naive():
    prof = build_variance(TorusGeometry(3, 1, 4), 1.0)
    tr = [t for t in prim.enumerate_tsp(4) if t.n_internal == 2][0]
    a = (0, 5, 21, 42)
    v = prim.tree_value(tr, 0.5, (1, -1, 1, -1), a, prof, M)
    w = prim.tree_value_naive(tr, 0.5, (1, -1, 1, -1), a, prof, M)
    assert abs(v - w) <= 1e-12 * abs(w)


def test_tree_at_t0(l2_profile):
    for tr in prim.enumerate_tsp(4):
        _, mats = _edge_matrices(tr, 0.0, (1, 1, -1, -1), l2_profile, M)
        internal = [mats[e] for e in range(len(mats)) if tr.is_internal_edge(e)]
        assert all(np.all(x == 0) for x in internal)
    v = prim.k_loop_tree(4, 0.0, (1, 1, -1, -1), (2, 2, 2, 2), l2_profile, M)
    assert abs(v - l2_profile.sW ** 3) < 1e-15


def test_tree_cyclic_rotation():
    prof = build_variance(TorusGeometry(3, 1, 3), 1.0)
    s, a = (1, 1, -1, 1), (0, 4, 13, 20)
    v = prim.k_loop_tree(4, 0.5, s, a, prof, M)
    w = prim.k_loop_tree(4, 0.5, s[1:] + s[:1], a[1:] + a[:1], prof, M)
    assert abs(v - w) <= 1e-12 * abs(v)


def test_ode_initial_and_explicit(l2_profile):
    K, info = prim.k_loop_ode(3, 0.0, l2_profile, M)
    assert np.all(K[(1, -1)] == prim.initial_condition(2, (1, -1), l2_profile, M))
    K, info = prim.k_loop_ode(3, 0.75, l2_profile, M)
    assert info["stable"] and info["err"] <= 1e-7
    for s in prim.all_sigmas(3):
        ref = prim.k3_tensor(0.75, s, l2_profile, M)
        assert np.abs(K[s] - ref).max() <= 1e-6 * np.abs(ref).max()


def test_ode_instability_flag(l2_profile):
    with pytest.warns(RuntimeWarning):
        _, info = prim.k_loop_ode(2, 0.9, l2_profile, M, steps=1, tol=0.0, flag_tol=0.0)
    assert not info["stable"]


def test_k_ward_closed_forms(small_profile):
    m0 = complex(m_sc(0.0))
    for m in (M, m0):
        for t in (0.3, 0.8):
            K = {(1,): np.full(64, m), (-1,): np.full(64, np.conj(m))}
            for s in prim.all_sigmas(2):
                K[s] = prim.k2_tensor(t, s, small_profile, m)
            for s in prim.all_sigmas(3):
                K[s] = prim.k3_tensor(t, s, small_profile, m)
            assert prim.k_ward_residual(K, t, m, small_profile) <= 1e-10


def test_k_bound_ratio_t0(l2_profile):
    K, _ = prim.k_loop_ode(3, 0.0, l2_profile, M)
    for n in (2, 3):
        r = prim.k_bound_ratio(K, n, 0.0, l2_profile)
        assert abs(r - 1 / (1 + 1 / 8) ** (n - 1)) < 1e-12


def test_pure_loop_decay():
    prof = build_variance(TorusGeometry(3, 1, 8), 1.0)
    vals = {}
    for r in range(0, 5):
        o = prof.geo.block_linear((0, 0, 0))
        a = (o, o, prof.geo.block_linear((r, 0, 0)), o)
        vals[r] = abs(prim.k_loop_tree(4, 0.9, (1, 1, 1, 1), a, prof, M))
    assert prim.pure_loop_decay(vals) > 0


def test_tensor_ops(small_profile, rng):
    geo = small_profile.geo
    A = rng.standard_normal((64, 64, 64))
    Q = prim.zero_mode(A, 1)
    assert np.allclose(prim.zero_mode(Q, 1), Q)
    P0P2 = prim.partial_avg(prim.partial_avg(A, 0), 2)
    assert np.allclose(P0P2, prim.partial_avg(prim.partial_avg(A, 2), 0))
    assert np.allclose(prim.zero_mode(prim.partial_avg(A, 2), 0), prim.partial_avg(prim.zero_mode(A, 0), 2))
    for t in (0.0, 0.9, 0.99):
        chi = prim.mollifier(3, t, geo)
        assert np.abs(prim.partial_sum(np.broadcast_to(chi, A.shape)) - 1).max() <= 1e-12
        assert np.abs(prim.partial_sum(prim.sum_zero(A, t, geo))).max() <= 1e-12 * np.abs(A).sum() / 64
    with pytest.raises(ValueError):
        prim.partial_avg(A, 3)


def test_mollifier_support():
    geo = TorusGeometry(3, 1, 16)
    t = 0.9
    chi = prim.mollifier(2, t, geo)
    from bandlab.propagator import ell
    lt = ell(t, geo)
    D = geo.block_dist_matrix
    assert np.all(chi[D > 2 * lt * np.sqrt(3)] == 0)
    assert chi.max() <= 10 * lt ** -3
