"""Dense direct solves and matrix diagnostics (conditioning, sparsity, RCM)."""
from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularSystemError

__all__ = [
    "SolveReport",
    "lu_solve",
    "cond2",
    "singular_values",
    "sparsity_stats",
    "bandwidth",
    "rcm_ordering",
    "rcm_bandwidth",
    "solve_and_report",
]

ZERO_TOL = 1e-14
_TINY = 1e-300


@dataclass
class SolveReport:
    solution: np.ndarray | None
    cond2: float
    sigma_min: float
    nnz_percent: float
    bandwidth_natural: int
    bandwidth_rcm: int
    residual_norm: float
    singular: bool = False


def lu_solve(K, b):
    """Solve ``K u = b`` by LU with partial pivoting.

    Raises :class:`SingularSystemError` on an exactly zero pivot.
    """
    K = np.array(K, dtype=float)
    b = np.asarray(b, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(K)):
        raise ValueError("matrix has non-finite entries")
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            lu, piv = scipy.linalg.lu_factor(K, overwrite_a=True, check_finite=False)
        except scipy.linalg.LinAlgWarning as exc:
            raise SingularSystemError(str(exc)) from exc
    if np.any(np.diag(lu) == 0.0):
        raise SingularSystemError("exactly singular pivot in LU factorisation")
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def singular_values(K) -> np.ndarray:
    return np.linalg.svd(np.asarray(K, dtype=float), compute_uv=False)


def cond2(K) -> float:
    """``sigma_max / sigma_min``; ``inf`` when ``sigma_min < 1e-300``."""
    s = singular_values(K)
    if s[-1] < _TINY:
        return float("inf")
    return float(s[0] / s[-1])


def _pattern(K, zero_tol):
    return np.abs(np.asarray(K)) > zero_tol


def bandwidth(pattern) -> int:
    rows, cols = np.nonzero(pattern)
    if rows.size == 0:
        return 0
    return int(np.max(np.abs(rows - cols)))


def sparsity_stats(K, zero_tol: float = ZERO_TOL):
    """Percentage of entries with ``|k| > zero_tol`` and the natural bandwidth."""
    P = _pattern(K, zero_tol)
    return 100.0 * np.count_nonzero(P) / P.size, bandwidth(P)


def _adjacency(P):
    S = P | P.T
    np.fill_diagonal(S, False)
    return [np.flatnonzero(row) for row in S]


def _bfs_levels(adj, start, allowed):
    level = {start: 0}
    order = [start]
    q = deque([start])
    while q:
        v = q.popleft()
        for w in adj[v]:
            if w in allowed and w not in level:
                level[w] = level[v] + 1
                order.append(w)
                q.append(w)
    return level, order


def _pseudo_peripheral(adj, degree, component):
    """Two-sweep heuristic: start at the minimum-degree node, jump to the
    farthest (lowest degree, then lowest index) node while eccentricity grows."""
    start = min(component, key=lambda v: (degree[v], v))
    level, _ = _bfs_levels(adj, start, component)
    ecc = max(level.values())
    while True:
        far = [v for v, l in level.items() if l == ecc]
        cand = min(far, key=lambda v: (degree[v], v))
        lv, _ = _bfs_levels(adj, cand, component)
        e2 = max(lv.values())
        if e2 <= ecc:
            return start
        start, level, ecc = cand, lv, e2


def rcm_ordering(K, zero_tol: float = ZERO_TOL) -> np.ndarray:
    """Reverse Cuthill-McKee permutation of the symmetrised pattern of ``K``."""
    P = _pattern(K, zero_tol)
    n = P.shape[0]
    adj = _adjacency(P)
    degree = np.array([a.size for a in adj])
    visited = np.zeros(n, dtype=bool)
    order = []
    for seed in sorted(range(n), key=lambda v: (degree[v], v)):
        if visited[seed]:
            continue
        _, comp_order = _bfs_levels(adj, seed, set(range(n)))
        component = set(comp_order)
        start = _pseudo_peripheral(adj, degree, component)
        visited[start] = True
        q = deque([start])
        while q:
            v = q.popleft()
            order.append(v)
            nbrs = [w for w in adj[v] if not visited[w]]
            nbrs.sort(key=lambda w: (degree[w], w))
            for w in nbrs:
                visited[w] = True
                q.append(w)
    return np.array(order[::-1], dtype=np.intp)


def rcm_bandwidth(K, zero_tol: float = ZERO_TOL):
    """RCM permutation and the bandwidth of the permuted (symmetrised) pattern."""
    perm = rcm_ordering(K, zero_tol)
    P = _pattern(K, zero_tol)
    S = P | P.T
    return perm, bandwidth(S[np.ix_(perm, perm)])


def solve_and_report(K, b, *, zero_tol: float = ZERO_TOL, with_cond: bool = True,
                     with_rcm: bool = True) -> SolveReport:
    """Solve and collect every diagnostic; a singular system yields ``solution=None``."""
    nnz, bw = sparsity_stats(K, zero_tol)
    bw_rcm = rcm_bandwidth(K, zero_tol)[1] if with_rcm else -1
    if with_cond:
        s = singular_values(K)
        smin = float(s[-1])
        c = float("inf") if smin < _TINY else float(s[0] / smin)
    else:
        smin, c = float("nan"), float("nan")
    try:
        u = lu_solve(K, b)
    except SingularSystemError:
        return SolveReport(None, float("inf"), smin, nnz, bw, bw_rcm, float("nan"), singular=True)
    res = float(np.linalg.norm(K @ u - b))
    return SolveReport(u, c, smin, nnz, bw, bw_rcm, res)
