"""Univariate B-splines and tensor-product NURBS spaces.

Evaluation follows the Cox-de Boor recursion on half-open knot spans, with
the right end of the domain assigned to the last non-empty span. Refinement
returns B-spline transfer matrices ``T`` satisfying
``N_old[i] = sum_k T[k, i] * N_new[k]``; for NURBS they act on homogeneous
(weight-multiplied) coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError

__all__ = [
    "KnotVector",
    "NurbsBasis2D",
    "eval_basis",
    "eval_nurbs_2d",
    "greville",
    "insert_knots",
    "elevate_degree",
    "insert_knots_1d",
    "elevate_degree_1d",
    "open_uniform",
    "collocation_matrix",
]


@dataclass(frozen=True, eq=False)
class KnotVector:
    """Non-decreasing knot sequence on [0, 1] with a polynomial degree."""

    values: np.ndarray
    degree: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        p = int(self.degree)
        object.__setattr__(self, "degree", p)
        if p < 0:
            raise DomainError("degree must be non-negative")
        if vals.ndim != 1 or vals.size < 2 * p + 2:
            raise DomainError(f"need at least {2 * p + 2} knots for degree {p}")
        if np.any(np.diff(vals) < 0):
            raise DomainError("knots must be non-decreasing")
        if vals[0] != 0.0 or vals[-1] != 1.0:
            raise DomainError("knot vector must start at 0 and end at 1")
        uniq, counts = np.unique(vals, return_counts=True)
        if counts[0] > p + 1 or counts[-1] > p + 1:
            raise DomainError("end knots repeated more than p+1 times")
        if np.any(counts[1:-1] > p):
            raise DomainError("interior knot repeated more than p times")

    @property
    def n(self) -> int:
        """Number of basis functions."""
        return self.values.size - self.degree - 1

    @property
    def is_open(self) -> bool:
        p = self.degree
        v = self.values
        return bool(np.all(v[: p + 1] == v[0]) and np.all(v[-p - 1 :] == v[-1])
                    and v[p + 1] != v[0] and v[-p - 2] != v[-1])

    @property
    def breakpoints(self) -> np.ndarray:
        return np.unique(self.values)

    def __repr__(self):
        return f"KnotVector(degree={self.degree}, values={self.values.tolist()})"


def open_uniform(degree: int, spans: int) -> KnotVector:
    """Open knot vector with ``spans`` equal spans and maximal smoothness."""
    interior = np.arange(1, spans) / spans
    vals = np.concatenate([np.zeros(degree + 1), interior, np.ones(degree + 1)])
    return KnotVector(vals, degree)


def _check_param(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0) or np.any(np.isnan(x)):
        raise DomainError(f"parameter outside [0, 1]: {x}")
    return x


def eval_basis(knots: KnotVector, xi: float, deriv_order: int = 0):
    """Evaluate the ``p + 1`` possibly non-zero B-splines at ``xi``.

    Returns
    -------
    first : int
        Index of the first active basis function.
    values : ndarray, shape (deriv_order + 1, p + 1)
        Row 0 holds values, row 1 (if requested) first derivatives.
    """
    if deriv_order not in (0, 1):
        raise DomainError("deriv_order must be 0 or 1")
    xi = float(_check_param(xi))
    p = knots.degree
    span = kernels.find_spans(knots.values, p, np.array([xi]))
    out = kernels.basis_funs_ders(knots.values, p, span, np.array([xi]))[0]
    return int(span[0]) - p, out[: deriv_order + 1].copy()


def collocation_matrix(knots: KnotVector, points) -> np.ndarray:
    """Dense matrix ``B[k, i] = N_i(points[k])``."""
    pts = _check_param(np.atleast_1d(points))
    p = knots.degree
    spans = kernels.find_spans(knots.values, p, pts)
    vals = kernels.basis_funs_ders(knots.values, p, spans, pts)[:, 0, :]
    B = np.zeros((pts.size, knots.n))
    for j in range(p + 1):
        B[np.arange(pts.size), spans - p + j] = vals[:, j]
    return B


def greville(knots: KnotVector) -> np.ndarray:
    """Knot averages ``(xi_{i+1} + ... + xi_{i+p}) / p``, one per basis function."""
    p = knots.degree
    v = knots.values
    if p == 0:
        return 0.5 * (v[:-1] + v[1:])
    csum = np.concatenate([[0.0], np.cumsum(v)])
    g = (csum[p + 1 : p + 1 + knots.n] - csum[1 : 1 + knots.n]) / p
    # averaging identical end knots must give exactly 0 and 1
    return np.clip(g, 0.0, 1.0)


def insert_knots_1d(knots: KnotVector, new_knots) -> tuple[KnotVector, np.ndarray]:
    """Boehm insertion of each knot in turn; returns the new knot vector and ``T``."""
    new_knots = np.sort(np.atleast_1d(np.asarray(new_knots, dtype=float)))
    if np.any(new_knots <= 0.0) or np.any(new_knots >= 1.0):
        raise DomainError("inserted knots must lie in the open interval (0, 1)")
    p = knots.degree
    U = knots.values.copy()
    T = np.eye(knots.n)
    for u in new_knots:
        n = U.size - p - 1
        k = int(np.searchsorted(U, u, side="right")) - 1
        A = np.zeros((n + 1, n))
        for i in range(n + 1):
            if i <= k - p:
                A[i, i] = 1.0
            elif i >= k + 1:
                A[i, i - 1] = 1.0
            else:
                alpha = (u - U[i]) / (U[i + p] - U[i])
                A[i, i] = alpha
                A[i, i - 1] = 1.0 - alpha
        U = np.insert(U, k + 1, u)
        T = A @ T
    return KnotVector(U, p), T


def elevate_degree_1d(knots: KnotVector, times: int = 1) -> tuple[KnotVector, np.ndarray]:
    """Raise the degree by ``times`` keeping the continuity at every breakpoint.

    The transfer matrix is obtained by interpolating the old basis at the
    Greville points of the elevated space, which is exact because the old
    space is a subspace of the new one.
    """
    if times < 1:
        raise DomainError("times must be >= 1")
    uniq, counts = np.unique(knots.values, return_counts=True)
    new_vals = np.repeat(uniq, counts + times)
    new = KnotVector(new_vals, knots.degree + times)
    pts = greville(new)
    A = collocation_matrix(new, pts)
    B = collocation_matrix(knots, pts)
    T = np.linalg.solve(A, B)
    T[np.abs(T) < 1e-15] = 0.0
    return new, T


@dataclass(frozen=True, eq=False)
class NurbsBasis2D:
    """Tensor-product NURBS space; ``weights[i, j]`` pairs with ``N_i M_j``.

    Global index of function ``(i, j)`` is ``i + n * j`` (first direction
    fastest).
    """

    knots_u: KnotVector
    knots_v: KnotVector
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        shape = (self.knots_u.n, self.knots_v.n)
        w = np.ones(shape) if self.weights is None else np.asarray(self.weights, dtype=float).copy()
        if w.shape != shape:
            raise DomainError(f"weights must have shape {shape}, got {w.shape}")
        if np.any(w <= 0.0):
            raise DomainError("NURBS weights must be positive")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def shape(self) -> tuple[int, int]:
        return self.knots_u.n, self.knots_v.n

    @property
    def degrees(self) -> tuple[int, int]:
        return self.knots_u.degree, self.knots_v.degree

    @property
    def size(self) -> int:
        return self.knots_u.n * self.knots_v.n

    def index(self, i, j):
        return np.asarray(i) + self.knots_u.n * np.asarray(j)

    def evaluate(self, xi, eta, spans_u=None, spans_v=None):
        """Vectorised evaluation at parameter pairs.

        Returns ``(idx, R, dR)`` with shapes ``(P, nloc)``, ``(P, nloc)`` and
        ``(P, nloc, 2)``; ``dR`` holds parametric derivatives.
        """
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        p, q = self.degrees
        ku, kv = self.knots_u.values, self.knots_v.values
        if spans_u is None:
            spans_u = kernels.find_spans(ku, p, xi)
        if spans_v is None:
            spans_v = kernels.find_spans(kv, q, eta)
        bu = kernels.basis_funs_ders(ku, p, spans_u, xi)
        bv = kernels.basis_funs_ders(kv, q, spans_v, eta)
        iu = spans_u[:, None] - p + np.arange(p + 1)
        jv = spans_v[:, None] - q + np.arange(q + 1)
        w = self.weights[iu[:, :, None], jv[:, None, :]]
        Nu, dNu = bu[:, 0, :, None], bu[:, 1, :, None]
        Nv, dNv = bv[:, 0, None, :], bv[:, 1, None, :]
        nw = w * Nu * Nv
        nw_u = w * dNu * Nv
        nw_v = w * Nu * dNv
        P = xi.size
        nloc = (p + 1) * (q + 1)
        # local ordering: first direction fastest, matching global ordering
        nw = nw.transpose(0, 2, 1).reshape(P, nloc)
        nw_u = nw_u.transpose(0, 2, 1).reshape(P, nloc)
        nw_v = nw_v.transpose(0, 2, 1).reshape(P, nloc)
        W = nw.sum(axis=1, keepdims=True)
        W_u = nw_u.sum(axis=1, keepdims=True)
        W_v = nw_v.sum(axis=1, keepdims=True)
        R = nw / W
        dR = np.empty((P, nloc, 2))
        dR[:, :, 0] = (nw_u - R * W_u) / W
        dR[:, :, 1] = (nw_v - R * W_v) / W
        idx = (iu[:, None, :] + self.knots_u.n * jv[:, :, None]).reshape(P, nloc)
        return idx, R, dR


def eval_nurbs_2d(basis: NurbsBasis2D, xi: float, eta: float, deriv_order: int = 0):
    """Rational basis values (and parametric gradients) at a single point.

    Returns ``(indices, values)`` or ``(indices, values, gradients)`` when
    ``deriv_order == 1``.
    """
    if deriv_order not in (0, 1):
        raise DomainError("deriv_order must be 0 or 1")
    _check_param([xi, eta])
    idx, R, dR = basis.evaluate([xi], [eta])
    if deriv_order == 0:
        return idx[0], R[0]
    return idx[0], R[0], dR[0]


def _apply_direction(basis, direction, new_kv, T):
    if direction in (0, "u", "xi"):
        T2 = np.kron(np.eye(basis.knots_v.n), T)
        new_u, new_v = new_kv, basis.knots_v
    elif direction in (1, "v", "eta"):
        T2 = np.kron(T, np.eye(basis.knots_u.n))
        new_u, new_v = basis.knots_u, new_kv
    else:
        raise DomainError(f"unknown direction {direction!r}")
    w_old = basis.weights.reshape(-1, order="F")
    w_new = (T2 @ w_old).reshape(new_u.n, new_v.n, order="F")
    return NurbsBasis2D(new_u, new_v, w_new), T2


def _direction_knots(basis, direction):
    if direction in (0, "u", "xi"):
        return basis.knots_u
    if direction in (1, "v", "eta"):
        return basis.knots_v
    raise DomainError(f"unknown direction {direction!r}")


def insert_knots(basis: NurbsBasis2D, direction, new_knots):
    """Knot insertion in one parametric direction.

    Returns the refined basis and the global transfer matrix acting on
    homogeneous coefficients in lexicographic ordering.
    """
    kv = _direction_knots(basis, direction)
    if np.size(new_knots) == 0:
        return basis, np.eye(basis.size)
    new_kv, T = insert_knots_1d(kv, new_knots)
    return _apply_direction(basis, direction, new_kv, T)


def elevate_degree(basis: NurbsBasis2D, direction, times: int = 1):
    """Degree elevation in one parametric direction (see :func:`insert_knots`)."""
    kv = _direction_knots(basis, direction)
    new_kv, T = elevate_degree_1d(kv, times)
    return _apply_direction(basis, direction, new_kv, T)


def transfer_coefficients(old: NurbsBasis2D, new: NurbsBasis2D, T, coeffs):
    """Re-express a field ``sum c_A R_A`` of ``old`` in the refined space ``new``.

    ``coeffs`` may carry trailing dimensions (e.g. control points).
    """
    c = np.asarray(coeffs, dtype=float)
    w_old = old.weights.reshape(-1, order="F")
    w_new = new.weights.reshape(-1, order="F")
    shape = (-1,) + (1,) * (c.ndim - 1)
    return (T @ (w_old.reshape(shape) * c)) / w_new.reshape(shape)
