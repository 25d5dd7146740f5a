"""Acceptance gate: one test and one printed PASS/FAIL line per criterion."""
import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from nlbc_iga import functionals as fn
from nlbc_iga.assembly import IMPOSITIONS, Discretization, MethodConfig, build_system
from nlbc_iga.geometry import BoundarySpec
from nlbc_iga.quadrature import integrate_domain
from nlbc_iga.splines import eval_nurbs_2d
from nlbc_iga.study import (CASES, CaseId, default_gamma_grid, manufactured_problem, reference_geometry,
                            patch_test, polar_integral_oracle, run_beta_sweep, run_convergence,
                            run_gamma_sweep, run_sparsity_census, solve_case)

# nnz percentages of the reference table (rows: cases, columns: methods in IMPOSITIONS order)
TABLE_NNZ = {
    "classical": (12.81, 13.02, 14.06, 14.06),
    "case1": (14.08, 14.29, 15.34, 15.91),
    "case2": (41.67, 41.67, 41.67, 53.70),
}


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def _rel_asym(K):
    return float(np.linalg.norm(K - K.T) / np.linalg.norm(K))


def test_criterion_1_system_size(report):
    geo = reference_geometry(2, 10)
    sizes, times = [], []
    for kind in CASES:
        for m in IMPOSITIONS:
            spec = manufactured_problem(CaseId(kind, 1.0), geo)
            t0 = time.perf_counter()
            # fresh discretisation so no cached block is reused
            sys_ = build_system(spec, MethodConfig(m), Discretization(geo, BoundarySpec()))
            times.append(time.perf_counter() - t0)
            sizes.append(sys_.matrix.shape)
    ok = all(s == (144, 144) for s in sizes) and max(times) < 1.0
    report(1, ok, f"{len(sizes)} systems, sizes {sorted(set(sizes))}, max assembly {max(times):.3f} s")


def test_criterion_2_sparsity(report):
    res = run_sparsity_census()
    problems = []
    lines = []
    for kind in CASES:
        nnz = [res.where(case=kind, method=m).rows[0].nnz_percent for m in IMPOSITIONS]
        lines.append(f"{kind}=" + "/".join(f"{v:.2f}" for v in nnz))
        if kind in ("classical", "case1"):
            for m, v, ref in zip(IMPOSITIONS, nnz, TABLE_NNZ[kind]):
                if abs(v - ref) > 1.5:
                    problems.append(f"{kind}/{m} nnz {v:.2f} vs {ref}")
        else:
            problems += [f"case2/{m} nnz {v:.2f} < 40" for m, v in zip(IMPOSITIONS, nnz) if v < 40.0]
        if not all(a <= b for a, b in zip(nnz, nnz[1:])):
            problems.append(f"{kind} ordering {nnz}")
    bw = [r.bandwidth_rcm for r in res.where(case="case2").rows]
    problems += [f"case2 RCM bandwidth {b} < 0.9*(n-1)" for b in bw if b < 0.9 * 143]
    report(2, not problems, "; ".join(lines) + f"; case2 RCM bw {bw}" + (" | " + "; ".join(problems) if problems else ""))


def test_criterion_3_patch(report):
    disc = Discretization(reference_geometry(), BoundarySpec())
    devs = {(k, m): patch_test(CaseId(k, 1.0), m, disc=disc) for k in CASES for m in IMPOSITIONS}
    worst = max(devs, key=devs.get)
    report(3, max(devs.values()) <= 1e-9, f"max |u_A - 1| = {devs[worst]:.2e} ({worst[0]}/{worst[1]}) over 12 configurations")


def test_criterion_4_symmetry(report):
    disc = Discretization(reference_geometry(), BoundarySpec())

    def K(kind, m):
        return build_system(manufactured_problem(CaseId(kind, 1.0), disc.geo), MethodConfig(m), disc).matrix

    nit = _rel_asym(K("classical", "nitsche"))
    pen = _rel_asym(K("classical", "penalty"))
    nonlocal_ = {(k, m): _rel_asym(K(k, m)) for k in ("case1", "case2") for m in IMPOSITIONS}
    ok = nit <= 1e-12 and pen > 1e-6 and min(nonlocal_.values()) > 1e-6
    report(4, ok, f"classical nitsche asym {nit:.1e}, penalty {pen:.2e}, nonlocal min {min(nonlocal_.values()):.2e}")


def test_criterion_5_convergence(report):
    t0 = time.perf_counter()
    meshes = (4, 8, 16, 32)
    strong = run_convergence(CaseId("classical"), ("greville", "l2"), degrees=(2, 3), meshes=meshes, with_cond=False)
    fixed = run_convergence(CaseId("classical"), ("penalty", "nitsche"), degrees=(2,), meshes=meshes,
                            beta_policy="fixed", beta=1e2, with_cond=False)
    adaptive = run_convergence(CaseId("classical"), ("penalty", "nitsche"), degrees=(2,), meshes=meshes,
                               beta_policy="adaptive", with_cond=False)
    elapsed = time.perf_counter() - t0

    def final_orders(res):
        # observed order on the finest pair of meshes
        return {(r.method, r.degree): r.observed_order for r in res.rows if r.spans == meshes[-1]}

    s, f, a = final_orders(strong), final_orders(fixed), final_orders(adaptive)
    checks = {
        "strong p+1": all(abs(v - (p + 1)) <= 0.3 for (m, p), v in s.items()),
        "fixed-beta < 2.5": all(v < 2.5 for v in f.values()),
        "adaptive 3.0": all(abs(v - 3.0) <= 0.3 for v in a.values()),
        "runtime": elapsed < 120.0,
    }
    fmt = lambda d: ", ".join(f"{m}/p{p}={v:.2f}" for (m, p), v in sorted(d.items()))
    failed = [k for k, ok in checks.items() if not ok]
    report(5, not failed, f"strong [{fmt(s)}]; fixed beta [{fmt(f)}]; adaptive [{fmt(a)}]; {elapsed:.1f} s"
           + (f" | failed: {', '.join(failed)}" if failed else ""))


def test_criterion_6_beta_sweep(report):
    problems, lines = [], []
    for kind in CASES:
        res = run_beta_sweep(CaseId(kind, 1.0), betas=[1e2, 1e6])
        for m in ("penalty", "nitsche"):
            c = {r.beta: r.cond2 for r in res.where(method=m).rows}
            if c[1e6] / c[1e2] < 1e3:
                problems.append(f"{kind}/{m} cond ratio {c[1e6] / c[1e2]:.1e}")
        e_nit = res.where(method="nitsche", beta=1e2).rows[0].l2_error
        e_pen = res.where(method="penalty", beta=1e2).rows[0].l2_error
        if not e_nit <= e_pen:
            problems.append(f"{kind} nitsche error {e_nit:.6e} > penalty {e_pen:.6e}")
        conds = {m: solve_case(CaseId(kind, 1.0), m, with_rcm=False).cond2 for m in IMPOSITIONS}
        if min(conds, key=conds.get) != "greville":
            problems.append(f"{kind} min cond2 is {min(conds, key=conds.get)}")
        lines.append(f"{kind}: err nit/pen {e_nit:.5e}/{e_pen:.5e}, greville cond {conds['greville']:.1f}")
    report(6, not problems, "; ".join(lines) + (" | " + "; ".join(problems) if problems else ""))


def test_criterion_7_gamma_sweep(report):
    grid = default_gamma_grid(200, -5.0, 5.0)
    problems, lines = [], []
    for kind in ("case1", "case2"):
        res = run_gamma_sweep(kind, IMPOSITIONS, grid)
        for m in IMPOSITIONS:
            c = res.where(method=m).column("cond2")
            assert c.size == 200
            ratio = np.max(c) / np.median(c)
            lines.append(f"{kind}/{m} spike {ratio:.1e}")
            if not ratio >= 1e3:
                problems.append(f"{kind}/{m} spike ratio {ratio:.1e}")
            zero = run_gamma_sweep(kind, (m,), [0.0], include_critical=False, self_check=False).rows[0].cond2
            classical = solve_case(CaseId("classical"), m, with_rcm=False).cond2
            if zero != classical:
                problems.append(f"{kind}/{m} cond at gamma=0 {zero!r} != classical {classical!r}")
    report(7, not problems, "; ".join(lines) + (" | " + "; ".join(problems) if problems else ""))


def test_criterion_8_oracles(report):
    geo = reference_geometry()
    area = integrate_domain(geo, None, None, lambda x, y: np.ones_like(x))
    exp_q = integrate_domain(geo, None, None, lambda x, y: np.exp(x) * y)
    exp_o = polar_integral_oracle(lambda x, y: np.exp(x) * y)
    rng = np.random.default_rng(7)
    worst = 0.0
    h = 1e-6
    for xi, eta in rng.uniform(0.05, 0.95, (25, 2)):
        idx, R, dR = eval_nurbs_2d(geo.basis, xi, eta, 1)
        for d in range(2):
            e = np.eye(2)[d] * h
            ip, Rp = eval_nurbs_2d(geo.basis, xi + e[0], eta + e[1])
            im, Rm = eval_nurbs_2d(geo.basis, xi - e[0], eta - e[1])
            full = np.zeros(geo.basis.size)
            full[ip] += Rp
            full[im] -= Rm
            fd = full[idx] / (2 * h)
            big = np.abs(fd) > 1e-3 * np.abs(fd).max()
            worst = max(worst, float(np.max(np.abs(dR[big, d] - fd[big]) / np.abs(fd[big]))))
    moll = fn.mollified_convergence_probe([[1.0, 1.0]], [1.0], lambda x, y: np.exp(x) * y,
                                          [0.2, 0.1, 0.05, 0.025])
    checks = [abs(area - 3 * np.pi / 4) <= 1e-10, abs(exp_q - exp_o) <= 1e-8, worst <= 1e-6,
              bool(np.all(np.diff(moll) < 0))]
    report(8, all(checks), f"area err {abs(area - 3 * np.pi / 4):.1e}, exp err {abs(exp_q - exp_o):.1e}, "
           f"grad FD rel {worst:.1e}, mollified errors {', '.join(f'{v:.2e}' for v in moll)}")


def test_criterion_9_determinism(report, tmp_path):
    configs = {
        "solve": {"case": "case1", "method": "nitsche", "beta": 100},
        "sweep-beta": {"case": "case2", "betas": [1, 100, 1e4]},
        "sweep-gamma": {"case": "case1", "methods": ["greville", "penalty"], "gammas": {"lo": -5, "hi": 5, "n": 11}},
        "converge": {"case": "classical", "methods": ["l2", "nitsche"], "degrees": [2], "meshes": [4, 8]},
        "sparsity": {"methods": ["greville", "nitsche"]},
    }
    mismatched = []
    for cmd, cfg in configs.items():
        path = tmp_path / f"{cmd}.json"
        path.write_text(json.dumps(cfg))
        blobs = []
        for i, threads in enumerate(("1", "1", "2", "8")):
            out = tmp_path / f"{cmd}{i}.csv"
            dump = tmp_path / f"{cmd}{i}.txt"
            args = [sys.executable, "-m", "nlbc_iga", cmd, "--config", str(path), "--out", str(out)]
            if cmd == "solve":
                args += ["--dump-matrix", str(dump)]
            env = dict(os.environ, OMP_NUM_THREADS=threads, OPENBLAS_NUM_THREADS=threads, MKL_NUM_THREADS=threads)
            r = subprocess.run(args, env=env, capture_output=True)
            assert r.returncode == 0, r.stderr.decode()
            blob = out.read_bytes() + (dump.read_bytes() if cmd == "solve" else b"") + r.stdout
            blobs.append(blob)
        if any(b != blobs[0] for b in blobs):
            mismatched.append(cmd)
    report(9, not mismatched, f"{len(configs)} commands x 4 runs (threads 1,1,2,8): "
           + ("all byte-identical" if not mismatched else f"differences in {mismatched}"))
