"""Galerkin assembly of the strongly and weakly constrained systems.

Strong imposition solves one square system whose rows are the Galerkin
equations for functions vanishing on the Dirichlet part and, for the
remaining functions, the constraint rows (Greville interpolation or
boundary L2 projection). Weak imposition adds boundary terms to the full
Galerkin matrix::

    K_w = K1 - K3 - alpha * K4 + beta * K5
    b_w = f - alpha * g1 + beta * g2

with ``alpha = 0`` (penalty) or ``alpha = 1`` (Nitsche).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import functionals as fn
from . import kernels
from .errors import ConfigurationError, NumericError
from .geometry import EDGES, BoundarySpec, GeometryMap
from .quadrature import ElementMesh, boundary_points, domain_points, element_mesh
from .splines import greville

__all__ = [
    "IMPOSITIONS",
    "ProblemSpec",
    "MethodConfig",
    "AssembledSystem",
    "Discretization",
    "classify_dofs",
    "assemble_core",
    "assemble_strong_greville",
    "assemble_strong_l2",
    "assemble_weak_terms",
    "build_system",
    "dump_system",
    "load_dump",
]

IMPOSITIONS = ("greville", "l2", "penalty", "nitsche")
STRONG = ("greville", "l2")

PointFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _one(x, y):
    return np.ones_like(x)


def _zero(x, y, *args):
    return np.zeros_like(x)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Data of the model problem.

    ``kappa``, ``f`` and ``g`` are called as ``fun(x, y)``; ``h`` as
    ``h(x, y, n)`` with ``n`` the outward unit normals.
    """

    geo: GeometryMap
    boundary: BoundarySpec = field(default_factory=BoundarySpec)
    kappa: PointFunction = _one
    f: PointFunction = _zero
    g: PointFunction = _zero
    h: Callable = _zero
    L1: fn.NonlocalFunctional = field(default_factory=fn.Zero)
    L2: fn.NonlocalFunctional = field(default_factory=fn.Zero)

    def __post_init__(self):
        xs = np.linspace(0.0, 1.0, 7)
        XI, ETA = np.meshgrid(xs, xs)
        pd = self.geo.evaluate(XI.ravel(), ETA.ravel())
        k = np.asarray(self.kappa(pd.x[:, 0], pd.x[:, 1]), dtype=float)
        if np.any(k <= 0.0):
            raise ConfigurationError("diffusivity must be positive")


@dataclass(frozen=True)
class MethodConfig:
    """Imposition method for the Dirichlet-type condition."""

    imposition: str = "greville"
    beta: float = 1e2

    def __post_init__(self):
        if self.imposition not in IMPOSITIONS:
            raise ConfigurationError(f"unknown imposition {self.imposition!r}; choose from {IMPOSITIONS}")
        if self.is_weak and not (np.isfinite(self.beta) and self.beta > 0.0):
            raise ConfigurationError("weak imposition needs a positive penalty parameter beta")

    @property
    def is_weak(self) -> bool:
        return self.imposition not in STRONG

    @property
    def alpha(self) -> int:
        return 1 if self.imposition == "nitsche" else 0


@dataclass(eq=False)
class AssembledSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    dof_all: np.ndarray
    dof_dirichlet: np.ndarray
    kind: str  # "strong" | "weak"
    method: MethodConfig
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def classify_dofs(basis, boundary: BoundarySpec):
    """All indices and the indices of functions with non-zero trace on the Dirichlet edges."""
    if not boundary.dirichlet:
        raise ConfigurationError("the Dirichlet part of the boundary must be non-empty")
    n, m = basis.shape
    I, J = np.meshgrid(np.arange(n), np.arange(m), indexing="ij")
    mask = np.zeros((n, m), dtype=bool)
    for edge in boundary.dirichlet:
        d, val = EDGES[edge]
        if d == 0:
            mask |= I == (0 if val == 0.0 else n - 1)
        else:
            mask |= J == (0 if val == 0.0 else m - 1)
    all_dofs = np.arange(basis.size)
    dirichlet = np.sort(basis.index(I[mask], J[mask]))
    return all_dofs, dirichlet


class Discretization:
    """Geometry-dependent blocks shared by every problem on the same mesh.

    Everything here is independent of the nonlocal functionals and of the
    data ``f``, ``g``, ``h``; blocks are computed lazily and cached.
    """

    def __init__(self, geo: GeometryMap, boundary: BoundarySpec, kappa: PointFunction = _one,
                 mesh: ElementMesh | None = None, rule=None):
        self.geo = geo
        self.basis = geo.basis
        self.boundary = boundary
        self.kappa = kappa
        self.mesh = element_mesh(geo) if mesh is None else mesh
        self.rule = rule
        self.n = geo.basis.size
        self._cache = {}

    @classmethod
    def for_spec(cls, spec: ProblemSpec, mesh=None, rule=None):
        return cls(spec.geo, spec.boundary, spec.kappa, mesh, rule)

    def compatible(self, spec: ProblemSpec) -> bool:
        return (spec.geo is self.geo and spec.boundary == self.boundary
                and spec.kappa is self.kappa)

    def _cached(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    def domain(self):
        return self._cached("domain", lambda: domain_points(self.geo, self.mesh, self.rule))

    def edge(self, edge):
        return self._cached(("edge", edge), lambda: boundary_points(self.geo, edge, self.mesh, self.rule))

    def stiffness(self) -> np.ndarray:
        def build():
            pd, wq, E, Q = self.domain()
            nloc = pd.idx.shape[1]
            kap = np.asarray(self.kappa(pd.x[:, 0], pd.x[:, 1]), dtype=float)
            w = wq * np.broadcast_to(kap, (E * Q,)).reshape(E, Q)
            rows = np.ascontiguousarray(pd.idx.reshape(E, Q, nloc)[:, 0, :])
            grad = pd.grad.reshape(E, Q, nloc, 2)
            K = np.zeros((self.n, self.n))
            kernels.accumulate_bilinear(K, rows, rows, grad, grad, w)
            return K
        return self._cached("stiffness", build)

    def _edge_blocks(self, edge):
        """Per-edge boundary mass, flux matrix and their row sums."""
        def build():
            pd, normals, wq, E, Q = self.edge(edge)
            nloc = pd.idx.shape[1]
            rows = np.ascontiguousarray(pd.idx.reshape(E, Q, nloc)[:, 0, :])
            R = pd.R.reshape(E, Q, nloc, 1)
            kap = np.asarray(self.kappa(pd.x[:, 0], pd.x[:, 1]), dtype=float)
            kap = np.broadcast_to(kap, (E * Q,))
            dn = (kap[:, None] * np.einsum("pac,pc->pa", pd.grad, normals)).reshape(E, Q, nloc, 1)
            mass = np.zeros((self.n, self.n))
            kernels.accumulate_bilinear(mass, rows, rows, R, R, wq)
            # value-flux: entry (A, B) = int N_A (kappa grad N_B . n)
            vflux = np.zeros((self.n, self.n))
            kernels.accumulate_bilinear(vflux, rows, rows, R, dn, wq)
            # flux-value: entry (A, B) = int (kappa grad N_A . n) N_B
            fluxv = np.zeros((self.n, self.n))
            kernels.accumulate_bilinear(fluxv, rows, rows, dn, R, wq)
            m = np.zeros(self.n)
            np.add.at(m, rows, np.einsum("eq,eqa->ea", wq, R[..., 0]))
            fl = np.zeros(self.n)
            np.add.at(fl, rows, np.einsum("eq,eqa->ea", wq, dn[..., 0]))
            return {"mass": mass, "vflux": vflux, "fluxv": fluxv, "m": m, "flux": fl}
        return self._cached(("edge_blocks", edge), build)

    def _sum_edges(self, edges, name):
        key = ("sum", tuple(sorted(edges)), name)
        def build():
            total = None
            for e in sorted(edges):
                blk = self._edge_blocks(e)[name]
                total = blk.copy() if total is None else total + blk
            if total is None:
                shape = (self.n,) if name in ("m", "flux") else (self.n, self.n)
                total = np.zeros(shape)
            return total
        return self._cached(key, build)

    def dirichlet(self, name):
        return self._sum_edges(self.boundary.dirichlet, name)

    def neumann(self, name):
        return self._sum_edges(self.boundary.neumann, name)

    def dofs(self):
        return self._cached("dofs", lambda: classify_dofs(self.basis, self.boundary))

    # -- data dependent pieces -------------------------------------------
    def functional_vector(self, L: fn.NonlocalFunctional) -> np.ndarray:
        return fn.apply_to_basis(L, self.geo, self.mesh, self.basis, self.rule)

    def load_vector(self, f, h) -> np.ndarray:
        pd, wq, E, Q = self.domain()
        nloc = pd.idx.shape[1]
        vals = np.broadcast_to(np.asarray(f(pd.x[:, 0], pd.x[:, 1]), dtype=float), (E * Q,))
        out = np.zeros(self.n)
        np.add.at(out, pd.idx.reshape(E, Q, nloc)[:, 0, :],
                  np.einsum("eq,eqa->ea", wq * vals.reshape(E, Q), pd.R.reshape(E, Q, nloc)))
        for edge in sorted(self.boundary.neumann):
            out += self._boundary_load(edge, lambda x, y, n: h(x, y, n))
        return out

    def _boundary_load(self, edge, fun, flux=False):
        pd, normals, wq, E, Q = self.edge(edge)
        nloc = pd.idx.shape[1]
        vals = np.broadcast_to(np.asarray(fun(pd.x[:, 0], pd.x[:, 1], normals), dtype=float), (E * Q,))
        if flux:
            kap = np.broadcast_to(np.asarray(self.kappa(pd.x[:, 0], pd.x[:, 1]), dtype=float), (E * Q,))
            test = kap[:, None] * np.einsum("pac,pc->pa", pd.grad, normals)
        else:
            test = pd.R
        out = np.zeros(self.n)
        np.add.at(out, pd.idx.reshape(E, Q, nloc)[:, 0, :],
                  np.einsum("eq,eqa->ea", wq * vals.reshape(E, Q), test.reshape(E, Q, nloc)))
        return out

    def dirichlet_load(self, g, flux=False) -> np.ndarray:
        out = np.zeros(self.n)
        for edge in sorted(self.boundary.dirichlet):
            out += self._boundary_load(edge, lambda x, y, n: g(x, y), flux=flux)
        return out


def _disc(spec, disc, mesh=None, rule=None):
    if disc is None:
        return Discretization.for_spec(spec, mesh, rule)
    if not disc.compatible(spec):
        raise ConfigurationError("discretisation was built for a different geometry/boundary/kappa")
    return disc


def _check_jacobian(disc):
    pd, *_ = disc.domain()
    if np.any(pd.detJ == 0.0):
        raise NumericError("singular Jacobian at a quadrature point")


def assemble_core(spec: ProblemSpec, disc: Discretization | None = None, rows=None, cols=None,
                  *, l2_vector=None):
    """Galerkin matrix ``K1`` and load vector ``f`` restricted to ``rows`` x ``cols``.

    ``K1[A, B] = int kappa grad N_A . grad N_B + int_{Gamma_N} N_A L2[N_B]``
    """
    disc = _disc(spec, disc)
    _check_jacobian(disc)
    l2 = disc.functional_vector(spec.L2) if l2_vector is None else l2_vector
    K = disc.stiffness() + np.outer(disc.neumann("m"), l2)
    f = disc.load_vector(spec.f, spec.h)
    rows = np.arange(disc.n) if rows is None else np.asarray(rows)
    cols = np.arange(disc.n) if cols is None else np.asarray(cols)
    return K[np.ix_(rows, cols)], f[rows]


def _greville_params(basis, dofs):
    gu, gv = greville(basis.knots_u), greville(basis.knots_v)
    n = basis.knots_u.n
    return gu[dofs % n], gv[dofs // n]


def assemble_strong_greville(spec: ProblemSpec, disc: Discretization | None = None, *, l1_vector=None):
    """Constraint rows from interpolation at the mapped Greville points.

    ``K2[A, B] = N_B(x(greville_A)) + L1[N_B]``, ``g_A = g(x(greville_A))``
    for ``A`` in the Dirichlet set (sorted), ``B`` over all functions.
    """
    disc = _disc(spec, disc)
    _, dir_dofs = disc.dofs()
    l1 = disc.functional_vector(spec.L1) if l1_vector is None else l1_vector
    xi, eta = _greville_params(disc.basis, dir_dofs)
    pd = disc.geo.evaluate(xi, eta)
    K2 = np.zeros((dir_dofs.size, disc.n))
    np.put_along_axis(K2, pd.idx, pd.R, axis=1)
    K2 += l1[None, :]
    g = np.asarray(spec.g(pd.x[:, 0], pd.x[:, 1]), dtype=float)
    return K2, np.broadcast_to(g, (dir_dofs.size,)).copy()


def assemble_strong_l2(spec: ProblemSpec, disc: Discretization | None = None, *, l1_vector=None):
    """Constraint rows from the L2 projection onto the Dirichlet trace space.

    ``K2[A, B] = int_{Gamma_D} N_A (N_B + L1[N_B])``, ``g_A = int_{Gamma_D} N_A g``.
    """
    disc = _disc(spec, disc)
    _, dir_dofs = disc.dofs()
    l1 = disc.functional_vector(spec.L1) if l1_vector is None else l1_vector
    K2 = disc.dirichlet("mass")[dir_dofs] + np.outer(disc.dirichlet("m")[dir_dofs], l1)
    g = disc.dirichlet_load(spec.g)[dir_dofs]
    return K2, g


def assemble_weak_terms(spec: ProblemSpec, disc: Discretization | None = None, *, l1_vector=None):
    """Boundary blocks of the weak formulations: K3, K4, K5, g1, g2."""
    disc = _disc(spec, disc)
    l1 = disc.functional_vector(spec.L1) if l1_vector is None else l1_vector
    K3 = disc.dirichlet("vflux").copy()
    K4 = disc.dirichlet("fluxv") + np.outer(disc.dirichlet("flux"), l1)
    K5 = disc.dirichlet("mass") + np.outer(disc.dirichlet("m"), l1)
    g1 = disc.dirichlet_load(spec.g, flux=True)
    g2 = disc.dirichlet_load(spec.g)
    return {"K3": K3, "K4": K4, "K5": K5, "g1": g1, "g2": g2}


def build_system(spec: ProblemSpec, method: MethodConfig, disc: Discretization | None = None) -> AssembledSystem:
    """Global matrix and right-hand side for one imposition method.

    Dirichlet constraint rows keep their natural (lexicographic) positions.
    """
    disc = _disc(spec, disc)
    all_dofs, dir_dofs = disc.dofs()
    l1 = disc.functional_vector(spec.L1)
    l2 = disc.functional_vector(spec.L2)
    K1, f = assemble_core(spec, disc, l2_vector=l2)
    meta = {"imposition": method.imposition, "n_dof": disc.n}
    if method.is_weak:
        blk = assemble_weak_terms(spec, disc, l1_vector=l1)
        a, b = method.alpha, float(method.beta)
        K = K1 - blk["K3"] - a * blk["K4"] + b * blk["K5"]
        rhs = f - a * blk["g1"] + b * blk["g2"]
        meta.update(alpha=a, beta=b)
        return AssembledSystem(K, rhs, all_dofs, dir_dofs, "weak", method, meta)
    if method.imposition == "greville":
        K2, g = assemble_strong_greville(spec, disc, l1_vector=l1)
    else:
        K2, g = assemble_strong_l2(spec, disc, l1_vector=l1)
    K = K1.copy()
    rhs = f.copy()
    K[dir_dofs] = K2
    rhs[dir_dofs] = g
    return AssembledSystem(K, rhs, all_dofs, dir_dofs, "strong", method, meta)


def dump_system(system: AssembledSystem, path, header: dict | None = None, zero_tol: float = 1e-14):
    """Write ``row col value`` triplets preceded by a one-line JSON header."""
    K = system.matrix
    head = {"size": int(K.shape[0]), "kind": system.kind, "method": system.method.imposition,
            "beta": float(system.method.beta) if system.method.is_weak else None}
    head.update(header or {})
    head["rhs"] = [float(v) for v in system.rhs]
    rows, cols = np.nonzero(np.abs(K) > zero_tol)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(head, sort_keys=True) + "\n")
        for r, c in zip(rows, cols):
            fh.write(f"{r} {c} {K[r, c]:.17g}\n")


def load_dump(path):
    """Read a dump written by :func:`dump_system`; returns ``(header, dense matrix)``."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ConfigurationError("missing JSON header line")
        head = json.loads(first[2:])
        data = np.loadtxt(fh, ndmin=2)
    K = np.zeros((head["size"], head["size"]))
    if data.size:
        K[data[:, 0].astype(int), data[:, 1].astype(int)] = data[:, 2]
    return head, K
