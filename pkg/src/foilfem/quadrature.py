"""Gauss rules on the reference triangle and on intervals."""
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Collapsed-coordinate Gauss rule on the reference triangle.

    Returns ``(points, weights)`` with points in barycentric form ``(m, 3)``.
    The rule integrates polynomials of total degree ``degree`` exactly and
    its weights sum to 1 (i.e. integrals are returned as area averages).
    """
    n = max(1, (degree + 2) // 2)
    xg, wg = np.polynomial.legendre.leggauss(n)
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    # Duffy map: s in [0,1] with weight (1-s) from Gauss-Jacobi, t in [0,1].
    s = 0.5 * (xj + 1.0)
    t = 0.5 * (xg + 1.0)
    S, T = np.meshgrid(s, t, indexing="ij")
    W = np.outer(wj, wg) * 0.125  # jacobians of both maps
    xi = S.ravel()
    eta = ((1.0 - S) * T).ravel()
    w = W.ravel() * 2.0  # reference triangle area is 1/2
    bary = np.column_stack([1.0 - xi - eta, xi, eta])
    bary.setflags(write=False)
    w.setflags(write=False)
    return bary, w


@lru_cache(maxsize=None)
def interval_rule(npoints):
    """Gauss-Legendre rule on [0, 1]; weights sum to 1."""
    x, w = np.polynomial.legendre.leggauss(npoints)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w
