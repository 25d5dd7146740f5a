import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlbc_iga import _kernels_py, kernels
from nlbc_iga.splines import open_uniform

ck = pytest.importorskip("nlbc_iga._ckernels")


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 9), st.integers(0, 10 ** 6))
def test_basis_kernels_agree(p, spans, seed):
    r = np.random.default_rng(seed)
    U = open_uniform(p, spans).values
    x = np.concatenate([r.uniform(0, 1, 25), [0.0, 1.0], U[p:-p]])
    s_py = _kernels_py.find_spans(U, p, x)
    s_c = ck.find_spans(U, p, x)
    np.testing.assert_array_equal(s_py, s_c)
    np.testing.assert_allclose(ck.basis_funs_ders(U, p, s_c, x), _kernels_py.basis_funs_ders(U, p, s_py, x),
                               rtol=1e-13, atol=1e-13)


def test_accumulate_agrees(rng):
    E, Q, nl, nr, C, n = 12, 9, 4, 5, 2, 30
    rows = rng.integers(0, n, (E, nl)).astype(np.intp)
    cols = rng.integers(0, n, (E, nr)).astype(np.intp)
    left = rng.normal(size=(E, Q, nl, C))
    right = rng.normal(size=(E, Q, nr, C))
    w = rng.uniform(size=(E, Q))
    K_py = _kernels_py.accumulate_bilinear(np.zeros((n, n)), rows, cols, left, right, w)
    K_c = ck.accumulate_bilinear(np.zeros((n, n)), rows, cols, left, right, w)
    np.testing.assert_allclose(K_c, K_py, rtol=1e-13, atol=1e-13)
    # brute force
    K = np.zeros((n, n))
    for e in range(E):
        for a in range(nl):
            for b in range(nr):
                K[rows[e, a], cols[e, b]] += np.sum(w[e] * np.sum(left[e, :, a] * right[e, :, b], axis=1))
    np.testing.assert_allclose(K_py, K, rtol=1e-12, atol=1e-13)


def test_default_backend_is_compiled():
    assert kernels.BACKEND == "cython"


def test_env_forces_fallback():
    env = dict(os.environ, NLBC_IGA_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from nlbc_iga import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_fallback_builds_same_system():
    code = ("import numpy as np; from nlbc_iga.study import *; "
            "r = solve_case(CaseId('case1', 1.0), 'nitsche'); print(repr(r.l2_error))")
    vals = []
    for flag in ("0", "1"):
        env = dict(os.environ, NLBC_IGA_PURE_PYTHON=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        vals.append(float(out.stdout))
    assert abs(vals[0] - vals[1]) < 1e-12 * vals[0]
