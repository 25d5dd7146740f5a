"""Linear functionals coupling boundary data to values inside the domain.

Four kinds are supported: a weighted sum of point values (discrete), a
weighted domain integral (integral), smooth bumps approximating point values
(mollified), and the zero functional.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import ConfigurationError, NlbcError
from .quadrature import domain_points, gauss_rule

__all__ = [
    "NonlocalFunctional",
    "DiscreteField",
    "Zero",
    "Discrete",
    "Integral",
    "Mollified",
    "apply_to_function",
    "apply_to_basis",
    "bump_rule",
    "mollified_convergence_probe",
    "from_config",
]

KINDS = ("zero", "discrete", "integral", "mollified")


@dataclass(frozen=True, eq=False)
class NonlocalFunctional:
    """Linear functional ``L[u]``; build instances with the helper constructors."""

    kind: str
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    gamma: object = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown functional kind {self.kind!r}")
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if self.kind in ("discrete", "mollified") and pts.shape[0] != w.size:
            raise ConfigurationError("need one weight per coupling point")
        if self.kind == "mollified" and not self.delta > 0.0:
            raise ConfigurationError("mollifier radius must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def to_config(self) -> dict:
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "integral":
            if callable(self.gamma):
                raise ConfigurationError("function-valued weights cannot be serialised")
            return {"kind": "integral", "gamma": float(self.gamma)}
        out = {"kind": self.kind, "points": self.points.tolist(), "weights": self.weights.tolist()}
        if self.kind == "mollified":
            out["delta"] = float(self.delta)
        return out


def Zero() -> NonlocalFunctional:
    return NonlocalFunctional("zero")


def Discrete(points, weights) -> NonlocalFunctional:
    return NonlocalFunctional("discrete", points=points, weights=weights)


def Integral(gamma=1.0) -> NonlocalFunctional:
    return NonlocalFunctional("integral", gamma=gamma)


def Mollified(points, weights, delta: float) -> NonlocalFunctional:
    return NonlocalFunctional("mollified", points=points, weights=weights, delta=float(delta))


def from_config(cfg: dict | None) -> NonlocalFunctional:
    """Parse ``{"kind": "discrete", "points": [[1, 1]], "weights": [1.0]}`` and friends."""
    if cfg is None:
        return Zero()
    try:
        kind = cfg["kind"]
        if kind == "zero":
            return Zero()
        if kind == "discrete":
            return Discrete(cfg["points"], cfg["weights"])
        if kind == "integral":
            return Integral(float(cfg.get("gamma", 1.0)))
        if kind == "mollified":
            return Mollified(cfg["points"], cfg["weights"], cfg["delta"])
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"malformed functional {cfg!r}: {exc}") from exc
    raise ConfigurationError(f"unknown functional kind {kind!r}")


@dataclass(frozen=True, eq=False)
class DiscreteField:
    """Field ``sum_A u_A R_A`` over a NURBS space."""

    basis: object
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.shape != (self.basis.size,):
            raise ConfigurationError(f"expected {self.basis.size} coefficients, got {c.shape}")
        object.__setattr__(self, "coefficients", c)

    def at_parameters(self, xi, eta):
        idx, R, _ = self.basis.evaluate(xi, eta)
        return np.einsum("pa,pa->p", R, self.coefficients[idx])


def _bump_profile(s):
    out = np.zeros_like(s)
    inside = s < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def bump_rule(center, delta: float, gamma: float, n_radial: int = 48, n_angular: int = 64):
    """Quadrature for ``integral rho(x) u(x) dx`` over the bump's disc.

    Returns physical points ``(P, 2)`` and weights ``(P,)`` that already
    contain the normalised bump, so that ``weights.sum() == gamma`` up to
    round-off. Gauss in the radius, trapezoid (spectral for periodic
    integrands) in the angle.
    """
    r_rule = gauss_rule(n_radial)
    r, wr = r_rule.mapped([0.0], [delta])
    r, wr = r[0], wr[0]
    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    wt = 2.0 * np.pi / n_angular
    rho = _bump_profile(r / delta)
    w = (rho * r * wr)[:, None] * np.full(n_angular, wt)[None, :]
    total = w.sum()
    w = w * (gamma / total)
    c = np.asarray(center, dtype=float)
    pts = np.stack([c[0] + r[:, None] * np.cos(theta)[None, :],
                    c[1] + r[:, None] * np.sin(theta)[None, :]], axis=-1)
    return pts.reshape(-1, 2), w.reshape(-1)


def _check_disc_inside(geo, center, delta, n_check: int = 64):
    theta = 2.0 * np.pi * np.arange(n_check) / n_check
    circle = np.asarray(center)[None, :] + delta * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    for pt in circle:
        try:
            geometry.pull_back(geo, pt)
        except NlbcError as exc:
            raise ConfigurationError(
                f"bump of radius {delta} around {list(center)} leaves the domain") from exc


def _pull_back_all(geo, points):
    try:
        return np.array([geometry.pull_back(geo, pt) for pt in points]).reshape(-1, 2)
    except NlbcError as exc:
        raise ConfigurationError(f"coupling point cannot be pulled back: {exc}") from exc


def _gamma_values(gamma, x, y):
    if callable(gamma):
        return np.asarray(gamma(x, y), dtype=float)
    return float(gamma)


def apply_to_function(L: NonlocalFunctional, geo, mesh, u, rule=None) -> float:
    """Evaluate ``L[u]`` for a vectorised point function ``u(x, y)``."""
    if L.kind == "zero":
        return 0.0
    if L.kind == "discrete":
        _pull_back_all(geo, L.points)
        vals = np.asarray(u(L.points[:, 0], L.points[:, 1]), dtype=float)
        return float(np.dot(L.weights, vals))
    if L.kind == "integral":
        pd, wq, E, Q = domain_points(geo, mesh, rule)
        x, y = pd.x[:, 0], pd.x[:, 1]
        vals = _gamma_values(L.gamma, x, y) * np.asarray(u(x, y), dtype=float)
        vals = np.broadcast_to(vals, (E * Q,)).reshape(E, Q)
        return float(np.sum(np.einsum("eq,eq->e", vals, wq)))
    total = 0.0
    for center, gamma in zip(L.points, L.weights):
        _check_disc_inside(geo, center, L.delta)
        pts, w = bump_rule(center, L.delta, gamma)
        total += float(np.dot(w, np.asarray(u(pts[:, 0], pts[:, 1]), dtype=float)))
    return total


def _scatter_basis(basis, params, weights):
    out = np.zeros(basis.size)
    idx, R, _ = basis.evaluate(params[:, 0], params[:, 1])
    np.add.at(out, idx, weights[:, None] * R)
    return out


def apply_to_basis(L: NonlocalFunctional, geo, mesh=None, basis=None, rule=None) -> np.ndarray:
    """Vector with entries ``L[R_B]`` for every basis function ``B``."""
    basis = geo.basis if basis is None else basis
    if L.kind == "zero":
        return np.zeros(basis.size)
    if L.kind == "discrete":
        params = _pull_back_all(geo, L.points)
        return _scatter_basis(basis, params, L.weights)
    if L.kind == "integral":
        pd, wq, E, Q = domain_points(geo, mesh, rule)
        g = _gamma_values(L.gamma, pd.x[:, 0], pd.x[:, 1])
        vals = np.broadcast_to(g, (E * Q,)).reshape(E, Q) * wq
        out = np.zeros(basis.size)
        # element order is fixed, so the scatter is deterministic
        np.add.at(out, pd.idx, vals.reshape(-1)[:, None] * pd.R)
        return out
    out = np.zeros(basis.size)
    for center, gamma in zip(L.points, L.weights):
        _check_disc_inside(geo, center, L.delta)
        pts, w = bump_rule(center, L.delta, gamma)
        params = _pull_back_all(geo, pts)
        out += _scatter_basis(basis, params, w)
    return out


def mollified_convergence_probe(points, weights, u, deltas):
    """Errors ``|L^delta[u] - sum_l gamma_l u(x_l)|`` for each radius in ``deltas``.

    Integration happens directly on the discs in physical space; the caller
    is responsible for choosing radii whose discs stay inside the domain.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    w = np.asarray(weights, dtype=float).reshape(-1)
    exact = float(np.dot(w, np.asarray(u(pts[:, 0], pts[:, 1]), dtype=float)))
    errors = []
    for delta in deltas:
        if not delta > 0.0:
            raise ConfigurationError("mollifier radius must be positive")
        approx = 0.0
        for center, gamma in zip(pts, w):
            qp, qw = bump_rule(center, delta, gamma)
            approx += float(np.dot(qw, np.asarray(u(qp[:, 0], qp[:, 1]), dtype=float)))
        errors.append(abs(approx - exact))
    return np.array(errors)
