"""NURBS geometry maps, boundary traces and point inversion."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import splines
from .errors import ConfigurationError, ConvergenceError, DomainError, NumericError, OutOfDomainError
from .splines import KnotVector, NurbsBasis2D

__all__ = [
    "EDGES",
    "GeometryMap",
    "BoundarySpec",
    "PointData",
    "build_quarter_ring",
    "k_refine",
    "map_point",
    "jacobian",
    "boundary_trace",
    "pull_back",
]

#: Parametric edges: name -> (fixed direction, fixed value).
EDGES = {
    "xi0": (0, 0.0),
    "xi1": (0, 1.0),
    "eta0": (1, 0.0),
    "eta1": (1, 1.0),
}


@dataclass
class PointData:
    """Basis and geometry quantities at a batch of parametric points."""

    idx: np.ndarray  # (P, nloc) global function indices
    R: np.ndarray  # (P, nloc) rational basis values
    grad: np.ndarray  # (P, nloc, 2) physical gradients
    x: np.ndarray  # (P, 2) physical points
    J: np.ndarray  # (P, 2, 2) dx/dxi
    detJ: np.ndarray  # (P,) signed

    @property
    def measure(self) -> np.ndarray:
        """Area element ``|det J|``."""
        return np.abs(self.detJ)


@dataclass(frozen=True, eq=False)
class GeometryMap:
    """Single-patch NURBS map from [0, 1]^2 onto the physical domain.

    The Jacobian determinant must not vanish; its sign (orientation) is free.
    """

    basis: NurbsBasis2D
    control_points: np.ndarray  # (n, m, 2)

    def __post_init__(self):
        cp = np.asarray(self.control_points, dtype=float).copy()
        if cp.shape != self.basis.shape + (2,):
            raise DomainError(f"control points must have shape {self.basis.shape + (2,)}")
        if not np.all(np.isfinite(cp)):
            raise DomainError("control net must be finite")
        cp.setflags(write=False)
        object.__setattr__(self, "control_points", cp)

    @property
    def flat_points(self) -> np.ndarray:
        return self.control_points.transpose(1, 0, 2).reshape(-1, 2)

    def evaluate(self, xi, eta, spans_u=None, spans_v=None, *, check=True) -> PointData:
        idx, R, dR = self.basis.evaluate(xi, eta, spans_u, spans_v)
        pts = self.flat_points[idx]  # (P, nloc, 2)
        x = np.einsum("pa,pac->pc", R, pts)
        J = np.einsum("pad,pac->pcd", dR, pts)
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        if check and (np.any(det == 0.0) or (np.any(det > 0.0) and np.any(det < 0.0))):
            raise NumericError("singular or orientation-reversing Jacobian")
        inv_t = np.empty_like(J)
        inv_t[:, 0, 0] = J[:, 1, 1] / det
        inv_t[:, 0, 1] = -J[:, 1, 0] / det
        inv_t[:, 1, 0] = -J[:, 0, 1] / det
        inv_t[:, 1, 1] = J[:, 0, 0] / det
        grad = np.einsum("pcd,pad->pac", inv_t, dR)
        return PointData(idx, R, grad, x, J, det)

    def dump(self) -> str:
        """Plain-text export: knots, then one ``i j x y w`` line per control point."""
        lines = []
        for name, kv in (("u", self.basis.knots_u), ("v", self.basis.knots_v)):
            vals = " ".join(repr(float(v)) for v in kv.values)
            lines.append(f"# knots_{name} degree={kv.degree} {vals}")
        n, m = self.basis.shape
        for j in range(m):
            for i in range(n):
                x, y = (float(v) for v in self.control_points[i, j])
                w = float(self.basis.weights[i, j])
                lines.append(f"{i} {j} {x!r} {y!r} {w!r}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class BoundarySpec:
    """Dirichlet/Neumann tag per parametric edge."""

    dirichlet: frozenset

    def __init__(self, dirichlet=("eta0", "eta1")):
        d = frozenset(dirichlet)
        unknown = d - set(EDGES)
        if unknown:
            raise ConfigurationError(f"unknown edges {sorted(unknown)}")
        if not d:
            raise ConfigurationError("the Dirichlet part of the boundary must be non-empty")
        object.__setattr__(self, "dirichlet", d)

    @property
    def neumann(self) -> frozenset:
        return frozenset(EDGES) - self.dirichlet

    def tag(self, edge: str) -> str:
        if edge not in EDGES:
            raise ConfigurationError(f"unknown edge {edge!r}")
        return "D" if edge in self.dirichlet else "N"


def build_quarter_ring(inner_radius: float = 1.0, outer_radius: float = 2.0) -> GeometryMap:
    """Exact quarter annulus in the first quadrant.

    ``xi`` runs along the arcs from angle 0 to pi/2, ``eta`` from the inner
    to the outer radius. Coarsest form: quadratic arcs, linear radial.
    This parametrisation is clockwise, so ``det J < 0`` throughout.
    """
    if not (0.0 < inner_radius < outer_radius):
        raise DomainError("need 0 < inner_radius < outer_radius")
    ku = KnotVector([0, 0, 0, 1, 1, 1], 2)
    kv = KnotVector([0, 0, 1, 1], 1)
    s = np.sqrt(2.0) / 2.0
    weights = np.array([[1.0, 1.0], [s, s], [1.0, 1.0]])
    unit = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    cp = np.stack([unit * inner_radius, unit * outer_radius], axis=1)
    return GeometryMap(NurbsBasis2D(ku, kv, weights), cp)


def _refine_geometry(geo: GeometryMap, new_basis, T) -> GeometryMap:
    flat = geo.flat_points
    new_flat = splines.transfer_coefficients(geo.basis, new_basis, T, flat)
    n, m = new_basis.shape
    return GeometryMap(new_basis, new_flat.reshape(m, n, 2).transpose(1, 0, 2))


def elevate_geometry(geo: GeometryMap, direction, times: int = 1) -> GeometryMap:
    new_basis, T = splines.elevate_degree(geo.basis, direction, times)
    return _refine_geometry(geo, new_basis, T)


def insert_geometry(geo: GeometryMap, direction, new_knots) -> GeometryMap:
    new_basis, T = splines.insert_knots(geo.basis, direction, new_knots)
    return _refine_geometry(geo, new_basis, T)


def k_refine(geo: GeometryMap, degree: int | tuple[int, int], spans: int | tuple[int, int]) -> GeometryMap:
    """Elevate to ``degree`` then insert uniform knots to get ``spans`` spans."""
    degrees = (degree, degree) if np.isscalar(degree) else tuple(degree)
    nspans = (spans, spans) if np.isscalar(spans) else tuple(spans)
    out = geo
    for d, kv in enumerate((geo.basis.knots_u, geo.basis.knots_v)):
        if degrees[d] < kv.degree:
            raise DomainError("cannot lower the degree")
        if degrees[d] > kv.degree:
            out = elevate_geometry(out, d, degrees[d] - kv.degree)
    for d in range(2):
        kv = out.basis.knots_u if d == 0 else out.basis.knots_v
        if kv.breakpoints.size != 2:
            raise DomainError("k_refine expects a single-span geometry")
        new = np.arange(1, nspans[d]) / nspans[d]
        out = insert_geometry(out, d, new)
    return out


def map_point(geo: GeometryMap, xi: float, eta: float) -> np.ndarray:
    """Physical image of a parameter pair."""
    splines._check_param([xi, eta])
    return geo.evaluate([xi], [eta], check=False).x[0]


def jacobian(geo: GeometryMap, xi: float, eta: float) -> np.ndarray:
    """2x2 matrix ``d(x, y) / d(xi, eta)``."""
    splines._check_param([xi, eta])
    return geo.evaluate([xi], [eta], check=False).J[0]


def edge_points(edge: str, t):
    """Parameter pairs along ``edge`` for running parameter values ``t``."""
    fixed_dir, fixed_val = EDGES[edge]
    t = np.atleast_1d(np.asarray(t, dtype=float))
    c = np.full_like(t, fixed_val)
    return (c, t) if fixed_dir == 0 else (t, c)


def edge_normals(edge: str, J: np.ndarray):
    """Outward unit normals and arc-length factors from Jacobians on ``edge``."""
    fixed_dir, fixed_val = EDGES[edge]
    run_dir = 1 - fixed_dir
    tangent = J[:, :, run_dir]
    across = J[:, :, fixed_dir]
    measure = np.hypot(tangent[:, 0], tangent[:, 1])
    if np.any(measure == 0.0):
        raise NumericError(f"degenerate edge {edge!r}: zero tangent")
    n = np.stack([tangent[:, 1], -tangent[:, 0]], axis=1) / measure[:, None]
    # outward means against increasing fixed parameter at 0, along it at 1
    outward = -1.0 if fixed_val == 0.0 else 1.0
    sign = np.sign(np.einsum("pc,pc->p", n, across)) * outward
    if np.any(sign == 0.0):
        raise NumericError(f"cannot orient the normal on edge {edge!r}")
    return n * sign[:, None], measure


@dataclass(frozen=True)
class EdgeTrace:
    """Evaluator of a boundary edge as a parametrised curve."""

    geo: GeometryMap
    edge: str

    def __call__(self, t):
        """Return ``(points, measure, normals)`` at running parameters ``t``."""
        xi, eta = edge_points(self.edge, t)
        pd = self.geo.evaluate(xi, eta)
        n, meas = edge_normals(self.edge, pd.J)
        return pd.x, meas, n


def boundary_trace(geo: GeometryMap, edge: str) -> EdgeTrace:
    if edge not in EDGES:
        raise ConfigurationError(f"unknown edge {edge!r}")
    return EdgeTrace(geo, edge)


def pull_back(geo: GeometryMap, point, *, start=(0.5, 0.5), tol: float = 1e-13,
              max_iter: int = 50, clamp_tol: float = 1e-9) -> np.ndarray:
    """Parameter pair mapped onto ``point`` (damped Newton, iterates kept in [0, 1]^2).

    Raises
    ------
    OutOfDomainError
        The iteration stalls on the parameter-domain boundary while the full
        Newton step points further outside it.
    ConvergenceError
        No convergence within ``max_iter`` iterations.
    """
    target = np.asarray(point, dtype=float)
    scale = max(1.0, float(np.max(np.abs(target))))
    xi = np.array(start, dtype=float)

    def residual(z):
        pd = geo.evaluate([z[0]], [z[1]], check=False)
        return target - pd.x[0], pd.J[0]

    r, J = residual(xi)
    rnorm = np.linalg.norm(r)
    outside = 0
    for _ in range(max_iter):
        if rnorm <= tol * scale:
            return xi
        try:
            step = np.linalg.solve(J, r)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError("singular Jacobian during pull-back") from exc
        full = xi + step
        if np.any(full < -clamp_tol) or np.any(full > 1.0 + clamp_tol):
            outside += 1
        else:
            outside = 0
        lam = 1.0
        while True:
            trial = np.clip(xi + lam * step, 0.0, 1.0)
            r_new, J_new = residual(trial)
            if np.linalg.norm(r_new) < rnorm or lam < 1e-6:
                break
            lam *= 0.5
        moved = np.max(np.abs(trial - xi))
        xi, r, J = trial, r_new, J_new
        new_norm = np.linalg.norm(r)
        if outside >= 3 and (moved < 1e-12 or new_norm >= rnorm):
            raise OutOfDomainError(f"point {target.tolist()} lies outside the mapped domain")
        rnorm = new_norm
    if rnorm <= tol * scale:
        return xi
    if outside:
        raise OutOfDomainError(f"point {target.tolist()} lies outside the mapped domain")
    raise ConvergenceError(f"pull-back did not converge in {max_iter} iterations")
