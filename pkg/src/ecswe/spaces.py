"""Global function spaces and coefficient fields.

Shared dofs are keyed to mesh facets and vertex classes.  Edge dof slots
are ordered along the facet's global direction (the + side's local edge
direction); a cell whose local direction disagrees maps its edge dofs in
reverse.  BDM2 edge coefficients additionally flip sign on the - side so
that every global basis function has a single-valued normal component.
"""

import numpy as np

from .elements import make_element


class FunctionSpace:
    def __init__(self, mesh, kind):
        self.mesh = mesh
        self.kind = kind
        self.element = make_element(kind)
        build = {"DG1": self._build_dg1, "CG3": self._build_cg3,
                 "BDM2": self._build_bdm2}[kind]
        build()

    def _build_dg1(self):
        nc = self.mesh.ncells
        self.dim = 3 * nc
        self.cell_dofs = np.arange(3 * nc, dtype=np.int64).reshape(nc, 3)
        self.cell_signs = np.ones((nc, 3))

    def _build_cg3(self):
        mesh = self.mesh
        nc, nv, nf = mesh.ncells, mesh.nvertices, mesh.nfacets
        self.dim = nv + 2 * nf + nc
        dofs = np.empty((nc, 10), dtype=np.int64)
        dofs[:, 0:3] = mesh.cells
        for e in range(3):
            fid = mesh.cell_facets[:, e]
            agree = mesh.cell_agree[:, e]
            first = nv + 2 * fid + np.where(agree, 0, 1)
            second = nv + 2 * fid + np.where(agree, 1, 0)
            dofs[:, 3 + 2 * e] = first
            dofs[:, 4 + 2 * e] = second
        dofs[:, 9] = nv + 2 * nf + np.arange(nc)
        self.cell_dofs = dofs
        self.cell_signs = np.ones((nc, 10))

    def _build_bdm2(self):
        mesh = self.mesh
        nc, nf = mesh.ncells, mesh.nfacets
        self.dim = 3 * nf + 3 * nc
        dofs = np.empty((nc, 12), dtype=np.int64)
        signs = np.ones((nc, 12))
        for e in range(3):
            fid = mesh.cell_facets[:, e]
            agree = mesh.cell_agree[:, e]
            plus = mesh.cell_is_plus[:, e]
            for g in range(3):
                slot = np.where(agree, g, 2 - g)
                dofs[:, 3 * e + g] = 3 * fid + slot
                signs[:, 3 * e + g] = np.where(plus, 1.0, -1.0)
        dofs[:, 9:12] = 3 * nf + 3 * np.arange(nc)[:, None] + np.arange(3)
        self.cell_dofs = dofs
        self.cell_signs = signs

    def local_coeffs(self, coeffs):
        """Per-cell coefficient view with orientation signs applied."""
        return coeffs[self.cell_dofs] * self.cell_signs

    def scatter(self, local):
        """Accumulate per-cell values (nc, ndof_local) into a global vector."""
        out = np.zeros(self.dim)
        np.add.at(out, self.cell_dofs, local * self.cell_signs)
        return out

    def zeros(self):
        return np.zeros(self.dim)


class Field:
    """Coefficient vector over a function space."""

    def __init__(self, space, coeffs=None):
        self.space = space
        if coeffs is None:
            coeffs = np.zeros(space.dim)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (space.dim,):
            raise ValueError(
                f"coefficient length {coeffs.shape} != space dim {space.dim}")
        self.coeffs = coeffs

    def copy(self):
        return Field(self.space, self.coeffs.copy())
