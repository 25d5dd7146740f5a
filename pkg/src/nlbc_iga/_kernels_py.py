"""Pure numpy implementations of the hot kernels.

Same signatures and semantics as the compiled ``_ckernels`` module; used
when the extension is not built or ``NLBC_IGA_PURE_PYTHON=1`` is set.
"""
import numpy as np


def find_spans(knots, degree, x):
    """Span index ``k`` with ``knots[k] <= x < knots[k+1]`` for every ``x``.

    At the right end of the domain the last non-empty span is returned, so
    that the last basis function of an open knot vector equals one there.
    """
    knots = np.asarray(knots, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = knots.size - degree - 1
    spans = np.searchsorted(knots, x, side="right") - 1
    last = n - 1
    while knots[last] == knots[last + 1]:
        last -= 1
    return np.clip(spans, degree, last).astype(np.intp)


def basis_funs_ders(knots, degree, spans, x):
    """Values and first derivatives of the ``degree + 1`` active B-splines.

    Returns an array of shape ``(len(x), 2, degree + 1)``; entry ``[k, 0, j]``
    is ``N_{spans[k] - degree + j}(x[k])`` and ``[k, 1, j]`` its derivative.
    """
    knots = np.asarray(knots, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    spans = np.atleast_1d(np.asarray(spans, dtype=np.intp))
    p = degree
    npts = x.size
    out = np.zeros((npts, 2, p + 1))
    left = np.zeros((npts, p + 1))
    right = np.zeros((npts, p + 1))
    vals = np.ones((npts, 1))
    lower = vals
    for k in range(1, p + 1):
        left[:, k] = x - knots[spans + 1 - k]
        right[:, k] = knots[spans + k] - x
        new = np.zeros((npts, k + 1))
        saved = np.zeros(npts)
        for r in range(k):
            denom = right[:, r + 1] + left[:, k - r]
            safe = np.where(denom == 0.0, 1.0, denom)
            temp = np.where(denom == 0.0, 0.0, vals[:, r] / safe)
            new[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, k - r] * temp
        new[:, k] = saved
        lower = vals
        vals = new
    out[:, 0, :] = vals
    if p > 0:
        for j in range(p + 1):
            i = spans - p + j
            d = np.zeros(npts)
            if j > 0:
                den = knots[i + p] - knots[i]
                d += np.where(den == 0.0, 0.0, lower[:, j - 1] / np.where(den == 0.0, 1.0, den))
            if j < p:
                den = knots[i + p + 1] - knots[i + 1]
                d -= np.where(den == 0.0, 0.0, lower[:, j] / np.where(den == 0.0, 1.0, den))
            out[:, 1, j] = p * d
    return out


def accumulate_bilinear(K, rows, cols, left, right, weights):
    """In place ``K[rows[e,a], cols[e,b]] += sum_q w[e,q] sum_c L[e,q,a,c] R[e,q,b,c]``.

    Elements are added in index order, so the result does not depend on how
    the caller chunked the work.
    """
    local = np.einsum("eq,eqac,eqbc->eab", weights, left, right)
    np.add.at(K, (rows[:, :, None], cols[:, None, :]), local)
    return K
