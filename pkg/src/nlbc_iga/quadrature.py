"""Gauss-Legendre rules and element-wise integration over a NURBS patch.

Quadrature points are always generated element by element in lexicographic
order (first direction fastest), so every reduction is performed in a fixed
order and results are reproducible bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .geometry import EDGES, GeometryMap, PointData, edge_normals, edge_points

__all__ = [
    "QuadratureRule",
    "ElementMesh",
    "gauss_rule",
    "element_mesh",
    "domain_points",
    "boundary_points",
    "integrate_domain",
    "integrate_boundary",
]


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and weights on [-1, 1]."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.nodes.size

    def mapped(self, a, b):
        """Nodes and weights on every interval ``[a[k], b[k]]`` (shape ``(K, n)``)."""
        a = np.asarray(a, dtype=float)[:, None]
        b = np.asarray(b, dtype=float)[:, None]
        half = 0.5 * (b - a)
        return a + half * (self.nodes + 1.0), half * self.weights


def gauss_rule(n: int) -> QuadratureRule:
    """``n``-point Gauss-Legendre rule, exact for polynomials of degree ``2n - 1``."""
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= 64:
        raise DomainError("Gauss rule size must be an integer in [1, 64]")
    x, w = np.polynomial.legendre.leggauss(int(n))
    # enforce exact symmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return QuadratureRule(x, w)


@dataclass(frozen=True, eq=False)
class ElementMesh:
    """Non-empty knot spans (Bezier elements) of a tensor-product space."""

    breaks_u: np.ndarray
    breaks_v: np.ndarray
    spans_u: np.ndarray  # span index of every element column
    spans_v: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.breaks_u.size - 1, self.breaks_v.size - 1

    @property
    def n_elements(self) -> int:
        return (self.breaks_u.size - 1) * (self.breaks_v.size - 1)


def _spans_for(knots, breaks):
    return np.searchsorted(knots.values, breaks[:-1], side="right") - 1


def element_mesh(geo_or_basis) -> ElementMesh:
    basis = getattr(geo_or_basis, "basis", geo_or_basis)
    bu = basis.knots_u.breakpoints
    bv = basis.knots_v.breakpoints
    return ElementMesh(bu, bv, _spans_for(basis.knots_u, bu), _spans_for(basis.knots_v, bv))


def _as_rules(rule, geo):
    if rule is None:
        p, q = geo.basis.degrees
        return gauss_rule(p + 1), gauss_rule(q + 1)
    if isinstance(rule, QuadratureRule):
        return rule, rule
    if isinstance(rule, (int, np.integer)):
        return gauss_rule(int(rule)), gauss_rule(int(rule))
    ru, rv = rule
    ru = gauss_rule(ru) if isinstance(ru, (int, np.integer)) else ru
    rv = gauss_rule(rv) if isinstance(rv, (int, np.integer)) else rv
    return ru, rv


def domain_points(geo: GeometryMap, mesh: ElementMesh | None = None, rule=None):
    """Quadrature data grouped by element.

    Returns ``(pd, wq, E, Q)``: point data for ``E * Q`` points ordered
    element-major, and the weights ``wq`` of shape ``(E, Q)`` already
    multiplied by ``|det J|``.
    """
    mesh = element_mesh(geo) if mesh is None else mesh
    ru, rv = _as_rules(rule, geo)
    xu, wu = ru.mapped(mesh.breaks_u[:-1], mesh.breaks_u[1:])  # (Eu, nu)
    xv, wv = rv.mapped(mesh.breaks_v[:-1], mesh.breaks_v[1:])
    Eu, nu = xu.shape
    Ev, nv = xv.shape
    # element (eu, ev) index = eu + Eu * ev ; point (qu, qv) index = qu + nu * qv
    shape = (Ev, Eu, nv, nu)
    XI = np.broadcast_to(xu[None, :, None, :], shape).reshape(-1)
    ETA = np.broadcast_to(xv[:, None, :, None], shape).reshape(-1)
    SU = np.broadcast_to(mesh.spans_u[None, :, None, None], shape).reshape(-1)
    SV = np.broadcast_to(mesh.spans_v[:, None, None, None], shape).reshape(-1)
    W = (wv[:, None, :, None] * wu[None, :, None, :]).reshape(Eu * Ev, nu * nv)
    pd = geo.evaluate(XI, ETA, SU.astype(np.intp), SV.astype(np.intp))
    E, Q = Eu * Ev, nu * nv
    return pd, W * pd.measure.reshape(E, Q), E, Q


def boundary_points(geo: GeometryMap, edge: str, mesh: ElementMesh | None = None, rule=None):
    """Quadrature data on one edge, grouped by boundary element.

    Returns ``(pd, normals, wq, E, Q)`` with ``wq`` including the arc-length
    factor.
    """
    if edge not in EDGES:
        raise ConfigurationError(f"unknown edge {edge!r}")
    mesh = element_mesh(geo) if mesh is None else mesh
    fixed_dir, fixed_val = EDGES[edge]
    ru, rv = _as_rules(rule, geo)
    if fixed_dir == 0:
        r, breaks, spans = rv, mesh.breaks_v, mesh.spans_v
        fixed_span = (mesh.spans_u[0] if fixed_val == 0.0 else mesh.spans_u[-1])
    else:
        r, breaks, spans = ru, mesh.breaks_u, mesh.spans_u
        fixed_span = (mesh.spans_v[0] if fixed_val == 0.0 else mesh.spans_v[-1])
    t, wt = r.mapped(breaks[:-1], breaks[1:])
    E, Q = t.shape
    xi, eta = edge_points(edge, t.reshape(-1))
    run_spans = np.repeat(spans, Q).astype(np.intp)
    fixed_spans = np.full(E * Q, fixed_span, dtype=np.intp)
    if fixed_dir == 0:
        pd = geo.evaluate(xi, eta, fixed_spans, run_spans)
    else:
        pd = geo.evaluate(xi, eta, run_spans, fixed_spans)
    normals, meas = edge_normals(edge, pd.J)
    return pd, normals, wt * meas.reshape(E, Q), E, Q


def integrate_domain(geo: GeometryMap, mesh: ElementMesh | None, rule, f) -> float:
    """``sum_e sum_q f(x_q) |det J_q| w_q`` with ``f(x, y)`` vectorised."""
    pd, wq, E, Q = domain_points(geo, mesh, rule)
    vals = np.asarray(f(pd.x[:, 0], pd.x[:, 1]), dtype=float)
    vals = np.broadcast_to(vals, (E * Q,)).reshape(E, Q)
    per_element = np.einsum("eq,eq->e", vals, wq)
    return float(np.sum(per_element))


def integrate_boundary(geo: GeometryMap, edge: str, rule, f, mesh: ElementMesh | None = None) -> float:
    """Line integral over ``edge`` of ``f(x, y, n)``, ``n`` the outward unit normals."""
    pd, normals, wq, E, Q = boundary_points(geo, edge, mesh, rule)
    vals = np.asarray(f(pd.x[:, 0], pd.x[:, 1], normals), dtype=float)
    vals = np.broadcast_to(vals, (E * Q,)).reshape(E, Q)
    return float(np.sum(np.einsum("eq,eq->e", vals, wq)))
