"""Experiment suite: statistical checks of the main predictions and identity checks.

Every ``run_*`` function takes a resolved :class:`ExperimentConfig` and a
``map_fn`` used for sample-level parallelism, and returns a dict with

* ``checks``: list of :class:`Check` / :class:`EstimatorResult`,
* ``tables``: name to ``(header, rows)`` for CSV output,
* ``info``: free-form measured quantities.
"""
import itertools
import time

import numpy as np

from .. import primitive as prim
from ..flowlab import direct_vs_flow, hierarchy_residual
from ..lattice import periodic_rep
from ..loops import (LoopEvaluator, loop_ward_residual, ward_inequality_check)
from ..model import build_variance, sample_h
from ..propagator import (b_param, decay_profile, difference_checks, kernel_norm_ratio,
                          short_decay_profile, tail_composition_constant, theta)
from ..spectral import (SpectralFlowState, bulk_sup_norms, eigensystem, m_sc, resolve,
                        ward_residual)
from .estimators import Check, EstimatorResult, mean_stderr


def _shell_average(T, geo, rmax=None):
    D = geo.block_dist_matrix
    rmax = int(D.max()) if rmax is None else rmax
    return np.array([T[D == r].mean() for r in range(rmax + 1)])


def site_distance(geo):
    """Periodic L1 distance between all pairs of sites."""
    X = geo.site_table
    out = np.zeros((geo.N, geo.N), dtype=np.int64)
    for i in range(geo.d):
        out += np.abs(periodic_rep(X[:, None, i] - X[None, :, i], geo.side))
    return out


def calB(eta, K, geo):
    """``1 / (W^2 (K + W)^{d-2}) + 1 / (N eta)``."""
    return 1.0 / (geo.W ** 2 * (K + geo.W) ** (geo.d - 2)) + 1.0 / (geo.N * eta)


# -- statistical experiments -----------------------------------------------------

def run_local_law(cfg, map_fn=map):
    geo, z = cfg.geo, cfg.zc
    prof = build_variance(geo, cfg.lam)
    if abs(z.real) > 2 - cfg.kappa or z.imag < 10 / geo.N:
        raise ValueError("local law needs |Re z| <= 2 - kappa and Im z >= 10/N")
    Kd = site_distance(geo)
    slack = cfg.tolerances["slack"]
    out = {}
    for tag, zz in (("eta", z), ("2eta", complex(z.real, 2 * z.imag))):
        m = complex(m_sc(zz))
        Bm = calB(zz.imag, Kd, geo)
        B0 = calB(zz.imag, 0, geo)

        def one(s, zz=zz, m=m, Bm=Bm, B0=B0):
            ev = LoopEvaluator(resolve(sample_h(prof, cfg.seed, s).H, zz), geo)
            G = ev.G(1)
            dev = np.abs(G - m * np.eye(geo.N)) ** 2 / Bm
            avg = np.abs(ev.loop1(1) - m).max() / B0
            return dev.max(), avg

        out[tag] = np.array(list(map_fn(one, range(cfg.samples))))
    r = out["eta"]
    p99 = np.percentile(r, 99, axis=0)
    checks = [Check("local_law_entrywise_p99", float(p99[0]), slack),
              Check("local_law_averaged_p99", float(p99[1]), slack)]
    info = {"entrywise_median": float(np.median(r[:, 0])), "averaged_median": float(np.median(r[:, 1])),
            "entrywise_median_2eta": float(np.median(out["2eta"][:, 0])),
            "averaged_median_2eta": float(np.median(out["2eta"][:, 1]))}
    rows = [(tag, s, float(v[0]), float(v[1])) for tag in out for s, v in enumerate(out[tag])]
    return {"checks": checks, "info": info,
            "tables": {"local_law": (["eta_tag", "sample", "entrywise_ratio", "averaged_ratio"], rows)}}


def diffusion_targets(prof, z):
    m = complex(m_sc(z))
    sW = prof.sW
    t_mp = sW * abs(m) ** 2 * theta(prof, abs(m) ** 2).dense()
    t_pp = sW * m ** 2 * theta(prof, m ** 2).dense()
    return m, t_mp, t_pp


def run_diffusion(cfg, map_fn=map, rmax=3):
    geo, z = cfg.geo, cfg.zc
    prof = build_variance(geo, cfg.lam)
    m, t_mp, t_pp = diffusion_targets(prof, z)
    rmax = min(rmax, int(geo.block_dist_matrix.max()))
    k = cfg.tolerances["k_sigma"]

    def one(s):
        ev = LoopEvaluator(resolve(sample_h(prof, cfg.seed, s).H, z), geo)
        a = _shell_average(ev.full2((-1, 1)).real, geo, rmax)
        b = _shell_average(ev.full2((1, 1)), geo, rmax)
        rows = ev.full2((-1, 1)).real.sum(axis=1).mean()
        return np.concatenate([a, b.real, b.imag, [rows]])

    t0 = time.time()
    data = np.array(list(map_fn(one, range(cfg.samples))))
    wall = time.time() - t0
    mean, err = mean_stderr(data)
    R = rmax + 1
    tg_mp = _shell_average(t_mp.real, geo, rmax)
    tg_pp = _shell_average(t_pp, geo, rmax)
    checks, rows = [], []
    for r in range(R):
        checks.append(EstimatorResult(f"diffusion_mp_shell{r}", mean[r], err[r], cfg.samples,
                                      tg_mp[r], k=k, wall_time=wall))
        rows.append(("-+", r, "re", mean[r], err[r], tg_mp[r]))
    info = {"m": m, "rowsum_mean": mean[-1], "rowsum_target": prof.sW * abs(m) ** 2 / (1 - abs(m) ** 2)}
    pp = []
    for r in range(R):
        for part, off, tg in (("re", R, tg_pp[r].real), ("im", 2 * R, tg_pp[r].imag)):
            e = EstimatorResult(f"diffusion_pp_shell{r}_{part}", mean[off + r], err[off + r],
                                cfg.samples, tg, k=k, wall_time=wall)
            pp.append(e.to_dict())
            rows.append(("++", r, part, mean[off + r], err[off + r], tg))
    info["plus_plus"] = pp
    return {"checks": checks, "info": info,
            "tables": {"diffusion": (["sigma", "shell", "part", "mean", "stderr", "target"], rows)}}


def gue(N, rng):
    X = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(2 * N)
    return (X + X.conj().T) / np.sqrt(2)


def run_deloc(cfg, map_fn=map, n_gue=None):
    geo = cfg.geo
    prof = build_variance(geo, cfg.lam)
    N = geo.N

    def one(s):
        ev, U = eigensystem(sample_h(prof, cfg.seed, s).H)
        v = bulk_sup_norms(ev, U, cfg.kappa)
        return v.max(), np.median(v)

    def one_gue(s):
        ev, U = eigensystem(gue(N, np.random.default_rng([cfg.seed, 7, s])))
        v = bulk_sup_norms(ev, U, cfg.kappa)
        return v.max(), np.median(v)

    band = np.array(list(map_fn(one, range(cfg.samples))))
    n_gue = min(cfg.samples, 10) if n_gue is None else n_gue
    base = np.array(list(map_fn(one_gue, range(n_gue)))) if n_gue else np.full((1, 2), np.nan)
    med = float(np.median(band[:, 0]))
    bound = cfg.tolerances["deloc_c"] * np.log(N) ** 2
    info = {"N": N, "median_max": med, "max_max": float(band[:, 0].max()),
            "median_typical": float(np.median(band[:, 1])),
            "gue_median_max": float(np.median(base[:, 0])),
            "ratio_to_gue": med / float(np.median(base[:, 0]))}
    rows = [("band", s, float(a), float(b)) for s, (a, b) in enumerate(band)]
    rows += [("gue", s, float(a), float(b)) for s, (a, b) in enumerate(base)]
    return {"checks": [Check("deloc_median", med, bound)], "info": info,
            "tables": {"deloc": (["ensemble", "sample", "max_sup_norm", "median_sup_norm"], rows)}}


def run_lk(cfg, map_fn=map, n_tuples=20):
    geo = cfg.geo
    prof = build_variance(geo, cfg.lam)
    st = SpectralFlowState(cfg.flow["E"], cfg.flow["t"])
    t, m = st.t, st.m
    scale = prof.sW * b_param(t, 0, geo)
    K2 = prim.k2_tensor(t, (-1, 1), prof, m)
    rng = np.random.default_rng(cfg.seed)
    tuples = [tuple(rng.integers(0, geo.n_blocks, 3)) for _ in range(n_tuples)]
    K3 = [prim.k3(t, (-1, 1, -1), a, prof, m) for a in tuples]
    far = int(geo.block_dist_matrix.max())

    def one(s):
        H = np.sqrt(t) * sample_h(prof, cfg.seed, s).H
        ev = LoopEvaluator(resolve(H, st.z), geo)
        r1 = np.abs(ev.loop1(1) - m).max() / scale
        D2 = ev.full2((-1, 1)) - K2
        r2 = np.abs(D2).max() / scale ** 2
        shell = _shell_average(D2.real, geo)
        r3 = 0.0
        if cfg.n >= 3:
            r3 = max(abs(ev.loop((-1, 1, -1), a) - k) for a, k in zip(tuples, K3)) / scale ** 3
        return np.concatenate([[r1, r2, r3], shell])

    data = np.array(list(map_fn(one, range(cfg.samples))))
    slack, k = cfg.tolerances["slack"], cfg.tolerances["k_sigma"]
    mean, err = mean_stderr(data)
    checks = [Check("lk_n1_p99", float(np.percentile(data[:, 0], 99)), slack),
              EstimatorResult(f"lk_n2_mean_shell{far}", mean[3 + far], err[3 + far], cfg.samples, 0.0, k=k)]
    info = {"n1_ratio_mean": mean[0], "n1_ratio_max": float(data[:, 0].max()),
            "n2_ratio_mean": mean[1], "n2_ratio_max": float(data[:, 1].max())}
    if cfg.n >= 3:
        info.update({"n3_ratio_mean": mean[2], "n3_ratio_max": float(data[:, 2].max())})
    rows = [(r, mean[3 + r], err[3 + r]) for r in range(far + 1)]
    return {"checks": checks, "info": info,
            "tables": {"lk_shells": (["shell", "mean_L_minus_K", "stderr"], rows)}}


# -- identity checks -----------------------------------------------------------

def propagator_algebra(prof, xis=(0.5, 0.9)):
    """Max residuals of the dense propagator identities."""
    geo = prof.geo
    sB = prof.sB
    I = np.eye(geo.n_blocks)
    m = complex(m_sc(0.3))
    res = {"inverse": 0.0, "commute": 0.0, "rowsum": 0.0, "zero_mode": 0.0}
    fams = [theta(prof, x) for x in xis] + [theta(prof, 0.9 * m * m)]
    for f in fams:
        T = f.dense()
        res["inverse"] = max(res["inverse"], np.abs((I - f.xi * sB) @ T - I).max())
        res["commute"] = max(res["commute"], np.abs(sB @ T - T @ sB).max())
        Tr = f.dense_ring()
        res["zero_mode"] = max(res["zero_mode"], abs(Tr.sum()) / (geo.n_blocks ** 2 * np.abs(T).max()))
    for x in xis:
        res["rowsum"] = max(res["rowsum"], np.abs(theta(prof, x).dense().sum(1) - 1 / (1 - x)).max())
    A, B = fams[0].dense(), fams[-1].dense()
    res["commute"] = max(res["commute"], np.abs(A @ B - B @ A).max())
    return res


def k_tensors_explicit(t, prof, m, n_max=3):
    nb = prof.geo.n_blocks
    K = {(1,): np.full(nb, m), (-1,): np.full(nb, np.conj(m))}
    for s in prim.all_sigmas(2):
        K[s] = prim.k2_tensor(t, s, prof, m)
    if n_max >= 3:
        for s in prim.all_sigmas(3):
            K[s] = prim.k3_tensor(t, s, prof, m)
    return K


def run_ward_check(cfg, map_fn=map, n_ineq=100):
    geo = cfg.geo
    prof = build_variance(geo, cfg.lam)
    st = SpectralFlowState(cfg.flow["E"], cfg.flow["t"])
    checks = []
    b = resolve(sample_h(prof, cfg.seed).H, cfg.zc)
    checks.append(Check("ward_identity", ward_residual(b), 1e-9))
    bt = resolve(np.sqrt(st.t) * sample_h(prof, cfg.seed, 1).H, st.z)
    ev = LoopEvaluator(bt, geo)
    worst = 0.0
    for n in (2, 3):
        for s in prim.all_sigmas(n):
            if s[0] == -s[-1]:
                worst = max(worst, loop_ward_residual(ev, s, st.eta))
    checks.append(Check("loop_ward_L", worst, 1e-8))
    if geo.n_blocks <= 64:
        K = k_tensors_explicit(st.t, prof, st.m)
        checks.append(Check("loop_ward_K", prim.k_ward_residual(K, st.t, st.m, prof), 1e-8))
    rng = np.random.default_rng(cfg.seed)
    excess = -np.inf
    for _ in range(n_ineq):
        n = int(rng.integers(2, 6))
        s = tuple(int(x) for x in rng.choice([1, -1], n))
        a = tuple(int(x) for x in rng.integers(0, geo.n_blocks, n))
        k = int(rng.integers(1, n))
        lhs, rhs, _ = ward_inequality_check(ev, s, a, k)
        excess = max(excess, lhs - rhs)
    checks.append(Check("ward_inequality_excess", excess, 1e-12))
    if geo.L <= 8:
        for name, v in propagator_algebra(prof).items():
            checks.append(Check(f"propagator_{name}", v, 1e-10))
    return {"checks": checks, "info": {}, "tables": {}}


def run_kloop(cfg, map_fn=map):
    geo = cfg.geo
    prof = build_variance(geo, cfg.lam)
    st = SpectralFlowState(cfg.flow["E"], cfg.flow["t"])
    t, m, n = st.t, st.m, max(cfg.n, 2)
    t0 = time.time()
    K, info = prim.k_loop_ode(n, t, prof, m)
    checks = [Check("ode_step_halving", info["err"], 1e-7)]
    rel = lambda A, B: float(np.abs(A - B).max() / np.abs(B).max())
    e2 = max(rel(prim.k2_tensor(t, s, prof, m), K[s]) for s in prim.all_sigmas(2))
    checks.append(Check("k2_explicit_vs_ode", e2, 1e-6))
    if n >= 3:
        e3 = max(rel(prim.k3_tensor(t, s, prof, m), K[s]) for s in prim.all_sigmas(3))
        checks.append(Check("k3_explicit_vs_ode", e3, 1e-6))
    rows = []
    for nn in range(4, n + 1):
        e = 0.0
        for s in prim.all_sigmas(nn):
            T = prim.k_loop_tree_tensor(nn, t, s, prof, m)
            e = max(e, rel(T, K[s]))
        checks.append(Check(f"k{nn}_tree_vs_ode", e, 1e-5))
    for nn in range(3, min(n, 5) + 1):
        a, b = len(prim.enumerate_tsp(nn)), prim.brute_force_tsp_count(nn)
        checks.append(Check(f"tsp_count_{nn}", abs(a - b), 0, {"dp": a, "oracle": b}))
        rows.append((nn, a, b))
    checks.append(Check("k_ward", prim.k_ward_residual(K, t, m, prof), 1e-8))
    return {"checks": checks, "info": {"ode": info}, "timings": {"kloop": time.time() - t0},
            "tables": {"tsp_counts": (["n", "dp_count", "oracle_count"], rows)}}


def run_flow_check(cfg, map_fn=map):
    geo = cfg.geo
    prof = build_variance(geo, cfg.lam)
    k = cfg.tolerances["k_sigma"]
    a, b = direct_vs_flow(prof, cfg.zc, cfg.samples, seed0=cfg.seed, map_fn=map_fn)
    ma, ea = mean_stderr(a)
    mb, eb = mean_stderr(b)
    checks = [EstimatorResult("flow_vs_direct_im_G", ma - mb, float(np.hypot(ea, eb)), cfg.samples, 0.0, k=k,
                              extra={"direct": ma, "flow": mb})]
    st = SpectralFlowState(cfg.flow["E"], cfg.flow["t"])
    hr = hierarchy_residual(prof, st.E, st.t, cfg.dt, (-1, 1), (0, 1), cfg.samples,
                            seed0=cfg.seed, with_qvar=True, map_fn=map_fn)
    mean, err = hr["residual"]
    checks.append(EstimatorResult("hierarchy_residual_re", mean.real, err.real, cfg.samples, 0.0, k=k))
    checks.append(EstimatorResult("hierarchy_residual_im", mean.imag, err.imag, cfg.samples, 0.0, k=k))
    info = {"drift": hr["quadratic"][0] + hr["lightweight"][0],
            "empirical_qvar": hr["empirical_qvar"], "qvar_full": hr["qvar_full"][0],
            "qvar_diag": hr["qvar_diag"][0]}
    rows = [(s, float(x), float(y)) for s, (x, y) in enumerate(zip(a, b))]
    return {"checks": checks, "info": info,
            "tables": {"flow_vs_direct": (["sample", "direct_im_G", "flow_im_G"], rows)}}


def run_decay(cfg, map_fn=map, ts=(0.5, 0.9, 0.96)):
    geo = cfg.geo
    prof = build_variance(geo, cfg.lam)
    m = complex(m_sc(0.0))
    checks, rows, info = [], [], {}
    for t in ts:
        dp = decay_profile(theta(prof, t), t)
        checks.append(Check(f"decay_rate_positive_t{t}", -dp["c"], 0.0, {"c": dp["c"], "C": dp["C"]}))
        rows += [(t, "t", int(r), float(a), float(b)) for r, a, b in zip(dp["radius"], dp["max_abs"], dp["bound"])]
        sd = short_decay_profile(theta(prof, t * m * m))
        info[f"short_t{t}"] = {"c": sd["c"], "C": sd["C"], "C_unit": sd["C_unit"]}
        rows += [(t, "tm2", int(r), float(a), float(sd["C"] * np.exp(-sd["c"] * r)))
                 for r, a in zip(sd["radius"], sd["max_abs"])]
        info[f"long_t{t}"] = {"c": dp["c"], "C": dp["C"]}
        info[f"differences_t{t}"] = difference_checks(theta(prof, t))
    info["kernel_alternating"] = kernel_norm_ratio(0.5, 0.9, (1, -1), prof, m)
    info["kernel_non_alternating"] = kernel_norm_ratio(0.5, 0.9, (1, 1), prof, m)
    pairs = [(u, t) for u, t in itertools.product((0.0, 0.5, 0.9), repeat=2)
             if u <= t and 1 - t >= geo.L ** -2]
    info["tail_composition_C"] = max(tail_composition_constant(geo, pairs))
    for key in ("kernel_alternating", "kernel_non_alternating", "tail_composition_C"):
        checks.append(Check(f"{key}_finite", 0.0 if np.isfinite(info[key]) else np.inf, 0.0))
    return {"checks": checks, "info": info,
            "tables": {"decay": (["t", "xi_kind", "shell_radius", "max_abs", "bound_value"], rows)}}
