import csv
import io

import numpy as np
import pytest

from nlbc_iga.errors import ConfigurationError
from nlbc_iga.study import (CaseId, StudyResult, StudyRow, critical_gammas, default_gamma_grid,
                            exact_gradient, exact_solution, manufactured_problem, polar_integral_oracle,
                            run_beta_sweep, run_convergence, run_gamma_sweep, run_sparsity_census,
                            solve_case)


def test_manufactured_solution_satisfies_poisson(rng):
    # -lap u = f with f = -exp(x) y
    x, y = rng.uniform(0.5, 1.5, (2, 10))
    h = 1e-4
    lap = (exact_solution(x + h, y) + exact_solution(x - h, y) + exact_solution(x, y + h)
           + exact_solution(x, y - h) - 4 * exact_solution(x, y)) / h ** 2
    spec = manufactured_problem(CaseId("classical"))
    np.testing.assert_allclose(-lap, spec.f(x, y), rtol=1e-6)
    fd = (exact_solution(x + h, y) - exact_solution(x - h, y)) / (2 * h)
    np.testing.assert_allclose(exact_gradient(x, y)[:, 0], fd, rtol=1e-7)


def test_nonlocal_data_consistency():
    # g = u + L[u] on the arcs, L[u] = gamma * e for the point coupling
    spec = manufactured_problem(CaseId("case1", 2.0))
    x = np.array([2.0]); y = np.array([0.0])
    assert abs(spec.g(x, y)[0] - (0.0 + 2.0 * np.e)) < 1e-14
    spec2 = manufactured_problem(CaseId("case2", 1.0))
    assert abs(spec2.g(x, y)[0] - (np.e ** 2 - 1.5)) < 1e-12


def test_polar_oracle_on_polynomial():
    # int r^2 over the quarter annulus = (pi/2) * (2^4 - 1) / 4
    val = polar_integral_oracle(lambda x, y: x * x + y * y)
    assert abs(val - np.pi / 2 * 15 / 4) < 1e-12


def test_case_validation():
    assert CaseId("classical", 3.0).gamma == 0.0
    with pytest.raises(ConfigurationError):
        CaseId("case3")


def test_errors_are_small_and_finite():
    for kind in ("classical", "case1", "case2"):
        for m in ("greville", "l2", "penalty", "nitsche"):
            row = solve_case(CaseId(kind, 1.0), m)
            assert 1e-4 < row.l2_error < 2e-3
            assert row.residual_norm < 1e-10
            assert row.n_dof == 144


def test_csv_schema():
    row = StudyRow("solve", "case1", 1.0, "l2", float("nan"), 2, 10, 144, l2_error=1 / 3)
    text = StudyResult([row]).to_csv()
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == list(StudyResult.FIELDS)
    assert rows[1][8] == "0.33333333333333331"
    assert rows[1][4] == "nan" and rows[1][16] == "0"


def test_beta_sweep_structure():
    res = run_beta_sweep(CaseId("classical"), betas=[1.0, 1e4])
    assert [r.method for r in res.rows] == ["greville", "l2", "penalty", "penalty", "nitsche", "nitsche"]
    with pytest.raises(ConfigurationError):
        run_beta_sweep(CaseId("classical"), methods=("greville",))
    with pytest.raises(ConfigurationError):
        run_beta_sweep(CaseId("classical"), betas=[-1.0])


def test_gamma_grid():
    g = default_gamma_grid()
    assert g.size == 200 and g[0] == -5 + 1e-6 and g[-1] == 5 - 1e-6


# -1 / L[psi] with psi harmonic, psi = 1 on the arcs and d(psi)/dn = 1 on the straight
# edges; psi computed on a 40 x 40 mesh, independent of the eigenvalue formulation
CRITICAL = {"case1": -0.97763401, "case2": -0.39596351}


@pytest.mark.parametrize("kind", ["case1", "case2"])
def test_critical_gamma_location(kind):
    vals = [critical_gammas(kind, m) for m in ("greville", "nitsche")]
    for v in vals:
        assert v.size == 1
        assert abs(v[0] - CRITICAL[kind]) < 1e-3


def test_gamma_sweep_zero_matches_classical():
    res = run_gamma_sweep("case2", ("l2",), gammas=[-1.0, 0.0, 1.0], include_critical=False)
    zero = res.where(gamma=0.0).rows[0]
    classical = solve_case(CaseId("classical"), "l2", with_rcm=False)
    assert zero.cond2 == classical.cond2 and zero.l2_error == classical.l2_error


def test_gamma_sweep_needs_nonlocal_case():
    with pytest.raises(ConfigurationError):
        run_gamma_sweep("classical")


def test_convergence_orders():
    res = run_convergence(CaseId("classical"), ("greville",), degrees=(2,), meshes=(4, 8, 16), with_cond=False)
    orders = res.column("observed_order")
    assert np.isnan(orders[0])
    assert np.all(orders[1:] > 3.0)  # approached from above
    assert abs(orders[-1] - 3.0) < 0.3
    with pytest.raises(ConfigurationError):
        run_convergence(CaseId("classical"), beta_policy="growing")


def test_adaptive_beta_equals_dofs():
    res = run_convergence(CaseId("classical"), ("penalty",), degrees=(2,), meshes=(4,), beta_policy="adaptive")
    assert res.rows[0].beta == res.rows[0].n_dof == 36


def test_sparsity_census_rows():
    res = run_sparsity_census(methods=("greville",), cases=("classical", "case2"))
    assert [r.case for r in res.rows] == ["classical", "case2"]


@pytest.mark.parametrize("kind", ["case1", "case2"])
def test_greville_better_conditioned_than_weak(kind):
    grid = np.linspace(-5, 5, 41)
    res = run_gamma_sweep(kind, ("greville", "penalty", "nitsche"), grid, include_critical=False)
    g = res.where(method="greville").column("cond2")
    weak = np.minimum(res.where(method="penalty").column("cond2"), res.where(method="nitsche").column("cond2"))
    assert np.mean(g <= weak) >= 0.8
