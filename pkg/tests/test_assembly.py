import numpy as np
import pytest

from nlbc_iga import functionals as fn
from nlbc_iga.assembly import (IMPOSITIONS, Discretization, MethodConfig, ProblemSpec, build_system,
                               classify_dofs, dump_system, load_dump)
from nlbc_iga.errors import ConfigurationError
from nlbc_iga.geometry import BoundarySpec
from nlbc_iga.study import CASES, CaseId, manufactured_problem, patch_test


def test_dof_classification(ring_geo):
    all_dofs, dir_dofs = classify_dofs(ring_geo.basis, BoundarySpec())
    assert all_dofs.size == 144
    np.testing.assert_array_equal(dir_dofs, np.r_[0:12, 132:144])
    _, only_outer = classify_dofs(ring_geo.basis, BoundarySpec(("eta1",)))
    np.testing.assert_array_equal(only_outer, np.arange(132, 144))


def test_stiffness_energy_oracle(ring_disc, ring_geo):
    # x and y are reproduced exactly by their control-point coefficients
    K = ring_disc.stiffness()
    cx = ring_geo.flat_points[:, 0]
    cy = ring_geo.flat_points[:, 1]
    area = 3 * np.pi / 4
    assert abs(cx @ K @ cx - area) < 1e-10
    assert abs(cy @ K @ cy - area) < 1e-10
    assert abs(cx @ K @ cy) < 1e-10
    np.testing.assert_allclose(K @ np.ones(144), 0.0, atol=1e-12)
    np.testing.assert_allclose(K, K.T, atol=1e-14)


def test_boundary_mass_total(ring_disc):
    M = ring_disc.dirichlet("mass")
    # rational arcs are not integrated exactly by the default rule
    assert abs(M.sum() - 1.5 * np.pi) < 1e-9
    assert abs(ring_disc.neumann("m").sum() - 2.0) < 1e-12


def test_flux_blocks_are_transposes(ring_disc):
    np.testing.assert_allclose(ring_disc.dirichlet("vflux"), ring_disc.dirichlet("fluxv").T, atol=1e-15)


def test_flux_of_linear_field(ring_disc, ring_geo):
    # K3 c_x = int_{Gamma_D} N_A n_x
    cx = ring_geo.flat_points[:, 0]
    from nlbc_iga.quadrature import integrate_boundary
    lhs = np.ones(144) @ ring_disc.dirichlet("vflux") @ cx
    rhs = sum(integrate_boundary(ring_geo, e, None, lambda x, y, n: n[:, 0]) for e in ("eta0", "eta1"))
    assert abs(lhs - rhs) < 1e-10


@pytest.mark.parametrize("kind", CASES)
@pytest.mark.parametrize("imposition", IMPOSITIONS)
def test_size_and_patch(ring_disc, kind, imposition):
    spec = manufactured_problem(CaseId(kind, 1.0), ring_disc.geo)
    sys_ = build_system(spec, MethodConfig(imposition), ring_disc)
    assert sys_.matrix.shape == (144, 144) and sys_.rhs.shape == (144,)
    assert patch_test(CaseId(kind, 1.0), imposition, disc=ring_disc) < 1e-9


def test_strong_rows_in_natural_positions(ring_disc):
    spec = manufactured_problem(CaseId("classical"), ring_disc.geo)
    K = build_system(spec, MethodConfig("greville"), ring_disc).matrix
    # interpolation row at the corner Greville point is a unit row
    np.testing.assert_allclose(K[0], np.eye(144)[0], atol=1e-15)
    np.testing.assert_allclose(K[20], ring_disc.stiffness()[20])


def test_weak_matrix_composition(ring_disc):
    spec = manufactured_problem(CaseId("classical"), ring_disc.geo)
    pen = build_system(spec, MethodConfig("penalty", 10.0), ring_disc).matrix
    nit = build_system(spec, MethodConfig("nitsche", 10.0), ring_disc).matrix
    np.testing.assert_allclose(pen - nit, ring_disc.dirichlet("fluxv"), atol=1e-13)


def test_nonlocal_rank_one_update(ring_disc):
    c0 = manufactured_problem(CaseId("classical"), ring_disc.geo)
    c1 = manufactured_problem(CaseId("case1", 1.0), ring_disc.geo)
    K0 = build_system(c0, MethodConfig("l2"), ring_disc).matrix
    K1 = build_system(c1, MethodConfig("l2"), ring_disc).matrix
    # both couplings evaluate u at the same point, so the two outer products share a factor
    assert np.linalg.matrix_rank(K1 - K0, tol=1e-12) == 1


def test_mixed_functional_spec(ring_disc):
    spec = ProblemSpec(ring_disc.geo, L1=fn.Integral(0.3), L2=fn.Discrete([[1.2, 0.7]], [2.0]))
    sys_ = build_system(spec, MethodConfig("nitsche"), ring_disc)
    assert np.all(np.isfinite(sys_.matrix))


def test_validation(ring_geo, ring_disc):
    with pytest.raises(ConfigurationError):
        ProblemSpec(ring_geo, kappa=lambda x, y: -np.ones_like(x))
    with pytest.raises(ConfigurationError):
        MethodConfig("collocation")
    with pytest.raises(ConfigurationError):
        MethodConfig("penalty", -1.0)
    other = Discretization(ring_geo, BoundarySpec(("eta1",)))
    with pytest.raises(ConfigurationError):
        build_system(ProblemSpec(ring_geo, BoundarySpec()), MethodConfig(), other)


def test_dump_round_trip(ring_disc, tmp_path):
    spec = manufactured_problem(CaseId("case2", 1.0), ring_disc.geo)
    sys_ = build_system(spec, MethodConfig("penalty", 1e3), ring_disc)
    path = tmp_path / "m.txt"
    dump_system(sys_, path, {"case": "case2"})
    head, K = load_dump(path)
    assert head["size"] == 144 and head["case"] == "case2" and head["beta"] == 1e3
    K_ref = np.where(np.abs(sys_.matrix) > 1e-14, sys_.matrix, 0.0)
    np.testing.assert_array_equal(K, K_ref)
    np.testing.assert_array_equal(head["rhs"], sys_.rhs)


def test_load_dump_rejects_headerless(tmp_path):
    p = tmp_path / "x.txt"
    p.write_text("0 0 1\n")
    with pytest.raises(ConfigurationError):
        load_dump(p)
