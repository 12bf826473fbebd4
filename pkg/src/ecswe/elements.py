"""Reference elements for the compatible complex (CG3, BDM2, DG1).

All elements live on the reference triangle with vertices (0,0), (1,0),
(0,1).  Local edge e runs from vertex (e+1)%3 to vertex (e+2)%3, i.e.
opposite vertex e, and carries the outward unit normal listed below.

BDM2 degrees of freedom: three normal-component point evaluations per edge
(at the 3-point Gauss nodes, weighted by the reference edge length so that
Piola-mapped bases from neighbouring cells share physical edge dofs up to
sign), plus three interior moments against the lowest-order Nedelec-style
space span{(1,0), (0,1), (-y,x)}.
"""

import numpy as np

from .errors import UnsupportedElementError
from .quadrature import triangle_quadrature

TRI_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
EDGE_VERTS = [(1, 2), (2, 0), (0, 1)]
REF_EDGE_LEN = np.array([np.sqrt(2.0), 1.0, 1.0])
REF_EDGE_NORMAL = np.array([
    [1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0)],
    [-1.0, 0.0],
    [0.0, -1.0],
])

# 3-point Gauss nodes on [0,1], ascending; reversal is g -> 2 - g.
EDGE_DOF_NODES = np.array([
    0.5 - 0.5 * np.sqrt(0.6), 0.5, 0.5 + 0.5 * np.sqrt(0.6)])


def _monomial_exponents(degree):
    return [(i, j) for d in range(degree + 1) for j in range(d + 1)
            for i in [d - j]]


def _eval_monomials(pts, exps):
    pts = np.atleast_2d(pts)
    out = np.empty((len(pts), len(exps)))
    for m, (p, q) in enumerate(exps):
        out[:, m] = pts[:, 0] ** p * pts[:, 1] ** q
    return out


def _eval_monomial_grads(pts, exps):
    pts = np.atleast_2d(pts)
    out = np.zeros((len(pts), len(exps), 2))
    for m, (p, q) in enumerate(exps):
        if p > 0:
            out[:, m, 0] = p * pts[:, 0] ** (p - 1) * pts[:, 1] ** q
        if q > 0:
            out[:, m, 1] = q * pts[:, 0] ** p * pts[:, 1] ** (q - 1)
    return out


def edge_point(edge, s):
    """Reference coordinates at parameter s along local edge direction."""
    a = TRI_VERTS[EDGE_VERTS[edge][0]]
    b = TRI_VERTS[EDGE_VERTS[edge][1]]
    s = np.asarray(s, dtype=float)
    return a + np.outer(s, b - a)


class ScalarElement:
    """Nodal Lagrange element on the reference triangle."""

    def __init__(self, kind, degree, nodes):
        self.kind = kind
        self.degree = degree
        self.nodes = np.asarray(nodes, dtype=float)
        self.ndof = len(self.nodes)
        self._exps = _monomial_exponents(degree)
        V = _eval_monomials(self.nodes, self._exps)
        self._coefs = np.linalg.inv(V)

    def tabulate(self, pts):
        M = _eval_monomials(pts, self._exps)
        G = _eval_monomial_grads(pts, self._exps)
        return {
            "val": M @ self._coefs,
            "grad": np.einsum("pmd,mi->pid", G, self._coefs),
        }


class BDM2Element:
    """Full vector-quadratic H(div) element (12 dofs)."""

    kind = "BDM2"
    ndof = 12
    degree = 2

    def __init__(self):
        self._exps = _monomial_exponents(2)
        nm = len(self._exps)
        # Vector monomial j = 2*m + c: monomial m in component c.
        A = np.zeros((12, 2 * nm))
        row = 0
        for e in range(3):
            pts = edge_point(e, EDGE_DOF_NODES)
            vals = _eval_monomials(pts, self._exps)
            for g in range(3):
                for m in range(nm):
                    for c in range(2):
                        A[row, 2 * m + c] = (REF_EDGE_LEN[e] * vals[g, m]
                                             * REF_EDGE_NORMAL[e, c])
                row += 1
        rule = triangle_quadrature(6)
        vals = _eval_monomials(rule.points, self._exps)
        w_int = [np.tile([1.0, 0.0], (len(rule), 1)),
                 np.tile([0.0, 1.0], (len(rule), 1)),
                 np.column_stack([-rule.points[:, 1], rule.points[:, 0]])]
        for k in range(3):
            for m in range(nm):
                for c in range(2):
                    A[row, 2 * m + c] = np.sum(
                        rule.weights * vals[:, m] * w_int[k][:, c])
            row += 1
        self._coefs = np.linalg.inv(A)

    def tabulate(self, pts):
        nm = len(self._exps)
        M = _eval_monomials(pts, self._exps)
        G = _eval_monomial_grads(pts, self._exps)
        npts = len(M)
        vm_val = np.zeros((npts, 2 * nm, 2))
        vm_grad = np.zeros((npts, 2 * nm, 2, 2))
        vm_div = np.zeros((npts, 2 * nm))
        for m in range(nm):
            for c in range(2):
                j = 2 * m + c
                vm_val[:, j, c] = M[:, m]
                vm_grad[:, j, c, :] = G[:, m, :]
                vm_div[:, j] = G[:, m, c]
        C = self._coefs
        return {
            "val": np.einsum("pjc,ji->pic", vm_val, C),
            "grad": np.einsum("pjcd,ji->picd", vm_grad, C),
            "div": np.einsum("pj,ji->pi", vm_div, C),
        }


_CG3_NODES = np.array([
    [0.0, 0.0], [1.0, 0.0], [0.0, 1.0],
    [2.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0],   # edge 0, along V1->V2
    [0.0, 2.0 / 3.0], [0.0, 1.0 / 3.0],               # edge 1, along V2->V0
    [1.0 / 3.0, 0.0], [2.0 / 3.0, 0.0],               # edge 2, along V0->V1
    [1.0 / 3.0, 1.0 / 3.0],
])

_ELEMENT_CACHE = {}


def make_element(kind):
    """Reference element for kind in {'CG3', 'BDM2', 'DG1'}."""
    if kind not in _ELEMENT_CACHE:
        if kind == "CG3":
            _ELEMENT_CACHE[kind] = ScalarElement("CG3", 3, _CG3_NODES)
        elif kind == "DG1":
            _ELEMENT_CACHE[kind] = ScalarElement("DG1", 1, TRI_VERTS)
        elif kind == "BDM2":
            _ELEMENT_CACHE[kind] = BDM2Element()
        else:
            raise UnsupportedElementError(f"unknown element kind {kind!r}")
    return _ELEMENT_CACHE[kind]
