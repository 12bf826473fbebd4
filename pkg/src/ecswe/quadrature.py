"""Quadrature rules on the reference triangle and the unit edge.

Triangle rules come from the Duffy transform with a Gauss-Jacobi rule in
the collapsed direction, so any requested degree is exact by construction.
The reference triangle is {(x, y): x, y >= 0, x + y <= 1} with measure 1/2;
the reference edge is [0, 1].
"""

import numpy as np
from scipy.special import roots_jacobi

from .errors import QuadratureDegreeError

MAX_DEGREE = 20


class QuadratureRule:
    """Points and weights, exact for polynomials up to ``degree``."""

    def __init__(self, points, weights, degree):
        self.points = np.asarray(points, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.degree = degree

    def __len__(self):
        return len(self.weights)


def _check_degree(degree):
    if degree < 1:
        raise QuadratureDegreeError(f"degree must be >= 1, got {degree}")
    if degree > MAX_DEGREE:
        raise QuadratureDegreeError(
            f"degree {degree} beyond implemented table (max {MAX_DEGREE})")


def edge_quadrature(degree):
    """Gauss-Legendre rule on [0, 1]; weights sum to 1."""
    _check_degree(degree)
    m = (degree + 2) // 2
    t, w = np.polynomial.legendre.leggauss(m)
    return QuadratureRule(0.5 * (t + 1.0), 0.5 * w, 2 * m - 1)


def triangle_quadrature(degree):
    """Duffy-collapsed rule on the reference triangle; weights sum to 1/2."""
    _check_degree(degree)
    m = (degree + 2) // 2
    t, wx = np.polynomial.legendre.leggauss(m)
    xi = 0.5 * (t + 1.0)
    # Gauss-Jacobi with weight (1 - t) absorbs the Duffy area factor.
    tj, wj = roots_jacobi(m, 1.0, 0.0)
    eta = 0.5 * (tj + 1.0)
    pts = np.empty((m * m, 2))
    wts = np.empty(m * m)
    k = 0
    for j in range(m):
        for i in range(m):
            pts[k, 0] = xi[i] * (1.0 - eta[j])
            pts[k, 1] = eta[j]
            wts[k] = 0.125 * wx[i] * wj[j]
            k += 1
    return QuadratureRule(pts, wts, 2 * m - 1)


def triangle_monomial_integral(p, q):
    """Exact value of the monomial x^p y^q over the reference triangle."""
    from math import factorial

    return factorial(p) * factorial(q) / factorial(p + q + 2)
