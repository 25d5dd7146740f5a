"""Manufactured-solution studies on the quarter ring.

The exact solution is ``u = exp(x) * y`` with ``kappa = 1``; the Neumann-type
condition lives on the two straight edges and the Dirichlet-type condition on
the two arcs. Three couplings are studied: classical (no coupling), discrete
(``gamma * u(1, 1)``) and integral (``gamma * int u``).
"""
from __future__ import annotations

import csv
import functools
import io
import math
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import scipy.linalg

from . import functionals as fn
from .assembly import IMPOSITIONS, Discretization, MethodConfig, ProblemSpec, build_system
from .errors import ConfigurationError
from .geometry import BoundarySpec, GeometryMap, build_quarter_ring, k_refine
from .linsolve import solve_and_report
from .quadrature import domain_points

__all__ = [
    "CASES",
    "CaseId",
    "StudyRow",
    "StudyResult",
    "exact_solution",
    "polar_integral_oracle",
    "reference_geometry",
    "manufactured_problem",
    "constant_problem",
    "l2_error",
    "solve_case",
    "patch_test",
    "run_beta_sweep",
    "critical_gammas",
    "run_gamma_sweep",
    "run_convergence",
    "run_sparsity_census",
    "default_gamma_grid",
]

CASES = ("classical", "case1", "case2")
COUPLING_POINT = (1.0, 1.0)


@dataclass(frozen=True)
class CaseId:
    kind: str = "classical"
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in CASES:
            raise ConfigurationError(f"unknown case {self.kind!r}; choose from {CASES}")
        if self.kind == "classical":
            object.__setattr__(self, "gamma", 0.0)

    def functional(self) -> fn.NonlocalFunctional:
        if self.kind == "case1":
            return fn.Discrete([COUPLING_POINT], [self.gamma])
        if self.kind == "case2":
            return fn.Integral(self.gamma)
        return fn.Zero()


def exact_solution(x, y):
    return np.exp(x) * y


def exact_gradient(x, y):
    e = np.exp(x)
    return np.stack([e * y, e], axis=-1)


def polar_integral_oracle(fun, r_in: float = 1.0, r_out: float = 2.0, n: int = 200) -> float:
    """``int fun dOmega`` over the quarter annulus in polar coordinates (n x n Gauss)."""
    x, w = np.polynomial.legendre.leggauss(n)
    r = r_in + 0.5 * (r_out - r_in) * (x + 1.0)
    wr = 0.5 * (r_out - r_in) * w
    t = 0.25 * np.pi * (x + 1.0)
    wt = 0.25 * np.pi * w
    R, T = np.meshgrid(r, t, indexing="ij")
    vals = fun(R * np.cos(T), R * np.sin(T)) * R
    return float(wr @ vals @ wt)


@functools.lru_cache(maxsize=None)
def _exact_domain_integral() -> float:
    return polar_integral_oracle(exact_solution)


def reference_geometry(degree: int = 2, spans: int = 10) -> GeometryMap:
    """Quarter ring with radii 1 and 2, k-refined to ``degree`` and ``spans`` x ``spans``."""
    return k_refine(build_quarter_ring(1.0, 2.0), degree, spans)


def _nonlocal_value(case: CaseId) -> float:
    """``L[u_exact]`` for the given coupling, computed without the mesh."""
    if case.kind == "case1":
        return case.gamma * float(exact_solution(*COUPLING_POINT))
    if case.kind == "case2":
        return case.gamma * _exact_domain_integral()
    return 0.0


def manufactured_problem(case: CaseId, geo: GeometryMap | None = None,
                         boundary: BoundarySpec | None = None) -> ProblemSpec:
    geo = reference_geometry() if geo is None else geo
    boundary = BoundarySpec() if boundary is None else boundary
    c = _nonlocal_value(case)
    L = case.functional()

    def f(x, y):
        return -np.exp(x) * y

    def g(x, y):
        return exact_solution(x, y) + c

    def h(x, y, n):
        return np.einsum("pc,pc->p", exact_gradient(x, y), n) + c

    return ProblemSpec(geo, boundary, f=f, g=g, h=h, L1=L, L2=L)


def constant_problem(case: CaseId, geo: GeometryMap | None = None,
                     boundary: BoundarySpec | None = None) -> ProblemSpec:
    """Data for which ``u = 1`` solves every formulation exactly."""
    geo = reference_geometry() if geo is None else geo
    boundary = BoundarySpec() if boundary is None else boundary
    L = case.functional()
    c = fn.apply_to_function(L, geo, None, lambda x, y: np.ones_like(x))

    def g(x, y):
        return np.full_like(x, 1.0 + c)

    def h(x, y, n):
        return np.full_like(x, c)

    return ProblemSpec(geo, boundary, g=g, h=h, L1=L, L2=L)


def l2_error(geo: GeometryMap, mesh, field: fn.DiscreteField, u_exact, rule=None) -> float:
    """``||u_h - u||_{L2}`` with ``p + 2`` Gauss points per direction by default."""
    if rule is None:
        p, q = geo.basis.degrees
        rule = (p + 2, q + 2)
    pd, wq, E, Q = domain_points(geo, mesh, rule)
    uh = np.einsum("pa,pa->p", pd.R, field.coefficients[pd.idx])
    diff = (uh - u_exact(pd.x[:, 0], pd.x[:, 1])).reshape(E, Q)
    return float(math.sqrt(np.sum(np.einsum("eq,eq->e", diff * diff, wq))))


def _method(imposition: str, beta, n_dof: int) -> MethodConfig:
    if beta == "adaptive":
        beta = float(n_dof)
    return MethodConfig(imposition, float(beta))


@dataclass
class StudyRow:
    study: str
    case: str
    gamma: float
    method: str
    beta: float
    degree: int
    spans: int
    n_dof: int
    l2_error: float = float("nan")
    cond2: float = float("nan")
    sigma_min: float = float("nan")
    nnz_percent: float = float("nan")
    bandwidth_natural: int = -1
    bandwidth_rcm: int = -1
    residual_norm: float = float("nan")
    observed_order: float = float("nan")
    singular: bool = False
    wall_time: float = float("nan")


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


@dataclass
class StudyResult:
    rows: list = field(default_factory=list)

    FIELDS = tuple(f.name for f in fields(StudyRow))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.FIELDS)
        for row in self.rows:
            d = asdict(row)
            w.writerow([_fmt(d[k]) for k in self.FIELDS])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])

    def where(self, **kw):
        return StudyResult([r for r in self.rows if all(getattr(r, k) == v for k, v in kw.items())])

    @property
    def all_singular(self) -> bool:
        return bool(self.rows) and all(r.singular for r in self.rows)


def solve_case(case: CaseId, imposition: str, beta=1e2, degree: int = 2, spans: int = 10, *,
               geo: GeometryMap | None = None, disc: Discretization | None = None,
               study: str = "solve", with_cond: bool = True, with_rcm: bool = True,
               timing: bool = False, return_system: bool = False):
    """Assemble and solve one configuration; returns a :class:`StudyRow`."""
    geo = (reference_geometry(degree, spans) if geo is None else geo) if disc is None else disc.geo
    spec = manufactured_problem(case, geo, None if disc is None else disc.boundary)
    if disc is None:
        disc = Discretization.for_spec(spec)
    else:
        spec = ProblemSpec(disc.geo, disc.boundary, kappa=disc.kappa, f=spec.f, g=spec.g, h=spec.h,
                           L1=spec.L1, L2=spec.L2)
    method = _method(imposition, beta, disc.n)
    t0 = time.perf_counter()
    system = build_system(spec, method, disc)
    rep = solve_and_report(system.matrix, system.rhs, with_cond=with_cond, with_rcm=with_rcm)
    wall = time.perf_counter() - t0
    err = float("nan")
    if rep.solution is not None:
        err = l2_error(disc.geo, disc.mesh, fn.DiscreteField(disc.basis, rep.solution), exact_solution)
    row = StudyRow(study, case.kind, float(case.gamma), imposition,
                   float(method.beta) if method.is_weak else float("nan"),
                   int(disc.basis.degrees[0]), int(len(disc.mesh.breaks_u) - 1), int(disc.n),
                   err, rep.cond2, rep.sigma_min, rep.nnz_percent, rep.bandwidth_natural,
                   rep.bandwidth_rcm, rep.residual_norm, singular=rep.singular,
                   wall_time=wall if timing else float("nan"))
    if return_system:
        return row, system, rep
    return row


def patch_test(case: CaseId, imposition: str, beta=1e2, geo: GeometryMap | None = None,
               disc: Discretization | None = None) -> float:
    """Max deviation of the coefficients from 1 for constant data."""
    geo = reference_geometry() if geo is None and disc is None else (geo if disc is None else disc.geo)
    spec = constant_problem(case, geo)
    disc = Discretization.for_spec(spec) if disc is None else disc
    spec = ProblemSpec(disc.geo, disc.boundary, kappa=disc.kappa, g=spec.g, h=spec.h, L1=spec.L1, L2=spec.L2)
    system = build_system(spec, _method(imposition, beta, disc.n), disc)
    rep = solve_and_report(system.matrix, system.rhs, with_cond=False, with_rcm=False)
    if rep.solution is None:
        return float("inf")
    return float(np.max(np.abs(rep.solution - 1.0)))


def _self_check(disc, tol=1e-9):
    for kind in CASES:
        for imp in IMPOSITIONS:
            dev = patch_test(CaseId(kind, 1.0), imp, disc=disc)
            if not dev <= tol:
                raise ConfigurationError(f"constant patch test failed for {kind}/{imp}: {dev:.3e}")


def run_beta_sweep(case: CaseId, methods=("penalty", "nitsche"), betas=None, degree: int = 2,
                   spans: int = 10, *, timing: bool = False, self_check: bool = True) -> StudyResult:
    """Error and conditioning against the penalty parameter, plus strong references."""
    betas = np.logspace(-2, 8, 21) if betas is None else np.asarray(betas, dtype=float)
    if np.any(betas <= 0.0):
        raise ConfigurationError("beta grid must be positive")
    if isinstance(methods, str):
        methods = (methods,)
    for m in methods:
        if m not in ("penalty", "nitsche"):
            raise ConfigurationError("beta sweep applies to penalty/nitsche only")
    disc = Discretization(reference_geometry(degree, spans), BoundarySpec())
    if self_check:
        _self_check(disc)
    res = StudyResult()
    for ref in ("greville", "l2"):
        res.rows.append(solve_case(case, ref, disc=disc, study="beta_sweep", timing=timing))
    for m in methods:
        for b in betas:
            res.rows.append(solve_case(case, m, beta=float(b), disc=disc, study="beta_sweep", timing=timing))
    return res


def default_gamma_grid(n: int = 200, lo: float = -5.0, hi: float = 5.0) -> np.ndarray:
    """Uniform grid with both endpoints pulled inwards by 1e-6."""
    return np.linspace(lo + 1e-6, hi - 1e-6, n)


def critical_gammas(kind: str, imposition: str, lo: float = -5.0, hi: float = 5.0, beta=1e2,
                    disc: Discretization | None = None) -> np.ndarray:
    """Coupling weights in ``[lo, hi]`` for which the global matrix is singular.

    The matrix is affine in ``gamma``, ``K(gamma) = K0 + gamma * K'``, so the
    critical weights are ``-1 / lambda`` for the finite real eigenvalues of
    the pencil ``K' v = lambda K0 v``.
    """
    disc = Discretization(reference_geometry(), BoundarySpec()) if disc is None else disc
    method = _method(imposition, beta, disc.n)

    def matrix(gamma):
        spec = manufactured_problem(CaseId(kind, gamma), disc.geo, disc.boundary)
        return build_system(spec, method, disc).matrix

    K0 = matrix(0.0)
    dK = matrix(1.0) - K0
    lam = scipy.linalg.eigvals(dK, K0)
    lam = lam[np.isfinite(lam)]
    scale = np.max(np.abs(lam)) if lam.size else 0.0
    real = lam[(np.abs(lam.imag) <= 1e-8 * np.abs(lam)) & (np.abs(lam) > 1e-10 * max(scale, 1e-300))].real
    out = -1.0 / real
    return np.sort(out[(out >= lo) & (out <= hi)])


def run_gamma_sweep(kind: str, methods=IMPOSITIONS, gammas=None, beta=1e2, degree: int = 2,
                    spans: int = 10, *, include_critical: bool = True, timing: bool = False,
                    self_check: bool = True) -> StudyResult:
    """Conditioning of the global matrix against the coupling weight.

    With ``include_critical`` the grid point nearest to each singular weight
    of the method (see :func:`critical_gammas`) is moved onto it, so spikes
    are resolved instead of aliased away; the grid size is unchanged.
    """
    if kind not in ("case1", "case2"):
        raise ConfigurationError("gamma sweep needs a nonlocal case")
    base = default_gamma_grid() if gammas is None else np.asarray(gammas, dtype=float)
    if isinstance(methods, str):
        methods = (methods,)
    disc = Discretization(reference_geometry(degree, spans), BoundarySpec())
    if self_check:
        _self_check(disc)
    res = StudyResult()
    for m in methods:
        grid = base.copy()
        if include_critical and grid.size > 1:
            for gc in critical_gammas(kind, m, grid.min(), grid.max(), beta, disc):
                grid[np.argmin(np.abs(grid - gc))] = gc
        for gam in grid:
            res.rows.append(solve_case(CaseId(kind, float(gam)), m, beta=beta, disc=disc,
                                       study="gamma_sweep", with_rcm=False, timing=timing))
    return res


def run_convergence(case: CaseId, methods=IMPOSITIONS, degrees=(2, 3, 4), meshes=(4, 8, 16, 32),
                    beta_policy: str = "fixed", beta: float = 1e2, *, with_cond: bool = True,
                    timing: bool = False, self_check: bool = True) -> StudyResult:
    """h-refinement study; ``observed_order`` is ``log2`` of successive error ratios."""
    if beta_policy not in ("fixed", "adaptive"):
        raise ConfigurationError("beta policy must be 'fixed' or 'adaptive'")
    if isinstance(methods, str):
        methods = (methods,)
    res = StudyResult()
    for p in degrees:
        for m in methods:
            prev = None
            for i, N in enumerate(meshes):
                disc = Discretization(reference_geometry(p, N), BoundarySpec())
                if self_check and i == 0:
                    _self_check(disc)
                b = "adaptive" if beta_policy == "adaptive" else beta
                row = solve_case(case, m, beta=b, disc=disc, study="convergence",
                                 with_cond=with_cond, with_rcm=False, timing=timing)
                if prev is not None and row.l2_error > 0 and prev[1] > 0:
                    row.observed_order = math.log(prev[1] / row.l2_error) / math.log(N / prev[0])
                prev = (N, row.l2_error)
                res.rows.append(row)
    return res


def run_sparsity_census(methods=IMPOSITIONS, cases=CASES, gamma: float = 1.0, degree: int = 2,
                        spans: int = 10, beta=1e2, *, timing: bool = False,
                        self_check: bool = True) -> StudyResult:
    """nnz percentage and bandwidths for every method/case pair."""
    disc = Discretization(reference_geometry(degree, spans), BoundarySpec())
    if self_check:
        _self_check(disc)
    res = StudyResult()
    for kind in cases:
        for m in methods:
            res.rows.append(solve_case(CaseId(kind, gamma), m, beta=beta, disc=disc,
                                       study="sparsity", timing=timing))
    return res
