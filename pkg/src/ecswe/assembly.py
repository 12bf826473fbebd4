"""Global assembly: tabulations, mass operators, projections, linear solves.

A ``Discretization`` bundles the three spaces (W0, W1, W2) on one mesh with
cached reference tabulations at a shared volume rule and a shared facet
rule.  Using one consistent quadrature everywhere makes the antisymmetric
bracket pairs cancel exactly at the algebraic level, which is what the
conservation properties rest on.

Vector (BDM2) bases map by the contravariant Piola transform
u = J v / detp with the 3x2 cell Jacobian J and area factor
detp = sqrt(det(J^T J)); divergences map as div u = div v / detp.
"""

from contextlib import contextmanager

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .elements import EDGE_DOF_NODES, REF_EDGE_LEN, edge_point, make_element
from .errors import PositivityError, SolverError
from .quadrature import edge_quadrature, triangle_quadrature
from .spaces import FunctionSpace


def sparse_solve(A, b, rtol=1e-12):
    """Direct sparse solve with a residual check."""
    A = sp.csc_matrix(A)
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SolverError(f"factorization failed: {exc}") from exc
    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        raise SolverError("factorization produced non-finite values")
    nb = np.linalg.norm(b)
    res = np.linalg.norm(A @ x - b)
    if res > rtol * max(nb, 1e-300):
        raise SolverError("direct solve missed tolerance", residual=res / max(nb, 1e-300))
    return x


def pcg(matvec, b, precond=None, rtol=1e-13, atol=0.0, maxiter=300, x0=None):
    """Preconditioned conjugate gradients for SPD operators."""
    if precond is None:
        precond = lambda r: r
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - matvec(x) if x0 is not None else b.copy()
    target = max(rtol * np.linalg.norm(b), atol)
    if np.linalg.norm(r) <= target:
        return x
    z = precond(r)
    p = z.copy()
    rz = r @ z
    for _ in range(maxiter):
        Ap = matvec(p)
        pAp = p @ Ap
        if pAp <= 0.0:
            raise SolverError("pcg breakdown: operator is not positive definite")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= target:
            return x
        z = precond(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError("pcg did not converge",
                      residual=np.linalg.norm(r) / max(np.linalg.norm(b), 1e-300))


class Discretization:
    """Spaces, tabulations and cached operators on one mesh."""

    def __init__(self, mesh, quad_degree=8, facet_degree=None):
        self.mesh = mesh
        self.quad_degree = quad_degree
        self.facet_degree = facet_degree if facet_degree is not None else quad_degree
        self.W0 = FunctionSpace(mesh, "CG3")
        self.W1 = FunctionSpace(mesh, "BDM2")
        self.W2 = FunctionSpace(mesh, "DG1")
        self._spaces = {"CG3": self.W0, "BDM2": self.W1, "DG1": self.W2}
        self._lus = {}
        self._memo_store = None
        self._setup_volume()
        self._setup_facets()
        self._setup_mass()

    def space(self, kind):
        return self._spaces[kind]

    @contextmanager
    def memo(self):
        """Scope inside which field evaluations are cached by array identity.

        Callers must not mutate coefficient arrays while the scope is open.
        """
        outer = self._memo_store
        self._memo_store = {}
        try:
            yield
        finally:
            self._memo_store = outer

    def _memoized(self, key, coeffs, compute):
        store = self._memo_store
        if store is None:
            return compute()
        hit = store.get(key)
        if hit is not None and hit[0] is coeffs:
            return hit[1]
        val = compute()
        store[key] = (coeffs, val)
        return val

    # -- tabulation ---------------------------------------------------------

    def _setup_volume(self):
        mesh = self.mesh
        rule = triangle_quadrature(self.quad_degree)
        self.vrule = rule
        self.nq = len(rule)
        self.tab = {k: make_element(k).tabulate(rule.points)
                    for k in ("CG3", "BDM2", "DG1")}
        self.wdet = rule.weights[None, :] * mesh.detp[:, None]      # (nc, nq)
        # Physical quadrature points, (nc, nq, 3).
        self.vpoints = (mesh.cell_coords[:, 0, None, :]
                        + np.einsum("cdk,qk->cqd", mesh.J, rule.points))
        self.kvol = mesh.k[:, None, :]                              # (nc, 1, 3)
        # Interior-moment weight functions for BDM2 dof interpolation.
        pts = rule.points
        self.wint = np.stack([
            np.tile([1.0, 0.0], (self.nq, 1)),
            np.tile([0.0, 1.0], (self.nq, 1)),
            np.column_stack([-pts[:, 1], pts[:, 0]]),
        ], axis=1)                                                  # (nq, 3, 2)

    def _setup_facets(self):
        mesh = self.mesh
        rule = edge_quadrature(self.facet_degree)
        self.frule = rule
        self.nqe = len(rule)
        # Reference tabulations per (local edge, orientation).
        tabs = {}
        for kind in ("CG3", "BDM2", "DG1"):
            el = make_element(kind)
            per = []
            for e in range(3):
                row = []
                for o in range(2):
                    s = rule.points if o == 0 else 1.0 - rule.points
                    row.append(el.tabulate(edge_point(e, s)))
                per.append(row)
            tabs[kind] = per
        # Gather to per-facet-side arrays.
        self.side_cells = mesh.facet_cells
        orient = np.zeros((mesh.nfacets, 2), dtype=np.int64)
        orient[:, 1] = mesh.facet_flip.astype(np.int64)
        self.ftab = {}
        for kind in ("CG3", "BDM2", "DG1"):
            sides = []
            for s in (0, 1):
                e_arr = mesh.facet_edges[:, s]
                o_arr = orient[:, s]
                keys = tabs[kind][0][0].keys()
                stacked = {key: np.stack(
                    [tabs[kind][e][o][key] for e in range(3) for o in range(2)])
                    for key in keys}
                flat = e_arr * 2 + o_arr
                sides.append({key: stacked[key][flat] for key in keys})
            self.ftab[kind] = sides
        self.fweights = rule.weights[None, :] * mesh.facet_lengths[:, None]
        self.fpoints = (mesh.facet_endpoints[:, 0, None, :]
                        + rule.points[None, :, None]
                        * (mesh.facet_endpoints[:, 1] - mesh.facet_endpoints[:, 0])[:, None, :])
        self.fnormal_plus = mesh.facet_normal_plus
        self.fnormal_minus = mesh.facet_normal_minus
        self.ftangent = mesh.facet_tangent
        self.sideJ = [mesh.J[self.side_cells[:, s]] for s in (0, 1)]
        self.sidedetp = [mesh.detp[self.side_cells[:, s]] for s in (0, 1)]
        self.sidek = [mesh.k[self.side_cells[:, s]] for s in (0, 1)]

    # -- field evaluation at volume quadrature points -------------------------

    def _loc(self, kind, coeffs):
        return self._spaces[kind].local_coeffs(coeffs)

    def eval_scalar(self, kind, coeffs):
        return self._memoized(("s", kind, id(coeffs)), coeffs, lambda:
                              self._loc(kind, coeffs) @ self.tab[kind]["val"].T)

    def eval_scalar_grad(self, kind, coeffs):
        def compute():
            tmp = np.tensordot(self._loc(kind, coeffs),
                               self.tab[kind]["grad"], axes=([1], [1]))
            return np.matmul(tmp, self.mesh.pinv)
        return self._memoized(("sg", kind, id(coeffs)), coeffs, compute)

    def eval_vec(self, coeffs):
        def compute():
            tmp = np.tensordot(self._loc("BDM2", coeffs),
                               self.tab["BDM2"]["val"], axes=([1], [1]))
            out = np.matmul(tmp, self.mesh.J.swapaxes(1, 2))
            out /= self.mesh.detp[:, None, None]
            return out
        return self._memoized(("v", id(coeffs)), coeffs, compute)

    def eval_vec_div(self, coeffs):
        return (self._loc("BDM2", coeffs) @ self.tab["BDM2"]["div"].T
                / self.mesh.detp[:, None])

    def eval_vec_grad(self, coeffs):
        """Physical in-plane gradient, (nc, nq, comp, deriv)."""
        def compute():
            nc, nq = self.mesh.ncells, self.nq
            tmp = np.tensordot(self._loc("BDM2", coeffs),
                               self.tab["BDM2"]["grad"], axes=([1], [1]))
            # (nc, nq, k, l) -> J_(dk) tmp_(kl) pinv_(le) / detp
            tmp = tmp.transpose(0, 2, 1, 3).reshape(nc, 1, 2, nq * 2)
            tmp = np.matmul(self.mesh.J[:, None, :, :], tmp)
            tmp = tmp.reshape(nc, 3, nq, 2).transpose(0, 2, 1, 3)
            out = np.matmul(tmp, self.mesh.pinv[:, None, :, :])
            out /= self.mesh.detp[:, None, None, None]
            return out
        return self._memoized(("vg", id(coeffs)), coeffs, compute)

    # -- field traces at facet quadrature points ------------------------------

    def feval_scalar(self, kind, coeffs, side):
        def compute():
            loc = self._loc(kind, coeffs)[self.side_cells[:, side]]
            tab = self.ftab[kind][side]["val"]
            return np.matmul(tab, loc[:, :, None])[:, :, 0]
        return self._memoized(("fs", kind, id(coeffs), side), coeffs, compute)

    def feval_vec(self, coeffs, side):
        def compute():
            loc = self._loc("BDM2", coeffs)[self.side_cells[:, side]]
            tab = self.ftab["BDM2"][side]["val"]              # (nf, nq, 12, 2)
            tmp = np.matmul(tab.swapaxes(2, 3), loc[:, None, :, None])
            out = np.matmul(self.sideJ[side][:, None, :, :], tmp)[..., 0]
            out /= self.sidedetp[side][:, None, None]
            return out
        return self._memoized(("fv", id(coeffs), side), coeffs, compute)

    # -- functionals over test bases ------------------------------------------

    def functional_scalar(self, kind, G):
        """Vector of <G, phi_i> for scalar test basis, G sampled (nc, nq)."""
        loc = (G * self.wdet) @ self.tab[kind]["val"]
        return self._spaces[kind].scatter(loc)

    def functional_scalar_grad(self, kind, G):
        """Vector of <G, grad phi_i>, G sampled (nc, nq, 3)."""
        Gk = np.matmul(G, self.mesh.pinv.swapaxes(1, 2))
        Gk *= self.wdet[:, :, None]
        loc = np.tensordot(Gk, self.tab[kind]["grad"], axes=([1, 2], [0, 2]))
        return self._spaces[kind].scatter(loc)

    def functional_vec(self, G):
        """Vector of <G, v_i> for the W1 basis, G sampled (nc, nq, 3)."""
        Gk = np.matmul(G, self.mesh.J)
        Gk *= (self.wdet / self.mesh.detp[:, None])[:, :, None]
        loc = np.tensordot(Gk, self.tab["BDM2"]["val"], axes=([1, 2], [0, 2]))
        return self.W1.scatter(loc)

    def functional_vec_div(self, G):
        """Vector of <G, div v_i>, G sampled (nc, nq)."""
        loc = (G * self.wdet / self.mesh.detp[:, None]) @ self.tab["BDM2"]["div"]
        return self.W1.scatter(loc)

    def functional_vec_grad(self, T):
        """Vector of <T : grad v_i>, T sampled (nc, nq, comp, deriv)."""
        # Tref_(kl) = J_(ek) T_(ed) pinv_(ld) / detp
        A = np.matmul(self.mesh.J.swapaxes(1, 2)[:, None, :, :], T)
        Tref = np.matmul(A, self.mesh.pinv.swapaxes(1, 2)[:, None, :, :])
        Tref *= (self.wdet / self.mesh.detp[:, None])[:, :, None, None]
        loc = np.tensordot(Tref, self.tab["BDM2"]["grad"],
                           axes=([1, 2, 3], [0, 2, 3]))
        return self.W1.scatter(loc)

    def facet_functional_vec(self, V_plus, V_minus):
        """Vector of sum_sides int V_side . v_i over facets, V (nf, nqe, 3)."""
        out = np.zeros(self.W1.dim)
        for side, V in ((0, V_plus), (1, V_minus)):
            Vk = np.matmul(V, self.sideJ[side])
            Vk *= (self.fweights / self.sidedetp[side][:, None])[:, :, None]
            tab = self.ftab["BDM2"][side]["val"]              # (nf, nq, 12, 2)
            nf = len(tab)
            loc = np.matmul(
                tab.transpose(0, 2, 1, 3).reshape(nf, 12, self.nqe * 2),
                Vk.reshape(nf, self.nqe * 2, 1))[:, :, 0]
            cells = self.side_cells[:, side]
            np.add.at(out, self.W1.cell_dofs[cells],
                      loc * self.W1.cell_signs[cells])
        return out

    def facet_functional_scalar(self, kind, g_plus, g_minus):
        """Vector of sum_sides int g_side phi_i over facets, g (nf, nqe)."""
        space = self._spaces[kind]
        out = np.zeros(space.dim)
        for side, g in ((0, g_plus), (1, g_minus)):
            gw = (self.fweights * g)[:, None, :]
            loc = np.matmul(gw, self.ftab[kind][side]["val"])[:, 0, :]
            cells = self.side_cells[:, side]
            np.add.at(out, space.cell_dofs[cells], loc * space.cell_signs[cells])
        return out

    # -- mass operators -------------------------------------------------------

    def _setup_mass(self):
        mesh = self.mesh
        w = self.vrule.weights
        val2 = self.tab["DG1"]["val"]
        JtJ = np.einsum("cdk,cdl->ckl", mesh.J, mesh.J)

        # Scalar plain-mass blocks: sum_q wdet val_i val_j.
        self._mass_blocks = {}
        for kind in ("CG3", "DG1"):
            v = self.tab[kind]["val"]
            self._mass_blocks[kind] = np.einsum("cq,qi,qj->cij", self.wdet, v, v)
        v1 = self.tab["BDM2"]["val"]
        self._mass_blocks["BDM2"] = np.einsum(
            "q,ckl,qik,qjl->cij", w, JtJ / mesh.detp[:, None, None], v1, v1,
            optimize=True)

        # DG1-weighted mass tensors: blocks(c) = sum_m w_loc[c, m] P[c, :, :, m].
        self._wmass_P = {}
        self._wmass_P["BDM2"] = np.einsum(
            "q,qm,ckl,qik,qjl->cijm", w, val2, JtJ / mesh.detp[:, None, None],
            v1, v1, optimize=True)
        v0 = self.tab["CG3"]["val"]
        self._wmass_P["CG3"] = np.einsum(
            "cq,qm,qi,qj->cijm", self.wdet, val2, v0, v0, optimize=True)

        self.M0 = self._to_csr("CG3", self._mass_blocks["CG3"])
        self.M1 = self._to_csr("BDM2", self._mass_blocks["BDM2"])
        self.M2 = self._to_csr("DG1", self._mass_blocks["DG1"])
        self._M2_blockinv = np.linalg.inv(self._mass_blocks["DG1"])

    def _to_csr(self, kind, blocks):
        space = self._spaces[kind]
        n = blocks.shape[1]
        signed = blocks * space.cell_signs[:, :, None] * space.cell_signs[:, None, :]
        rows = np.repeat(space.cell_dofs, n, axis=1).ravel()
        cols = np.tile(space.cell_dofs, (1, n)).ravel()
        A = sp.coo_matrix((signed.ravel(), (rows, cols)),
                          shape=(space.dim, space.dim))
        return A.tocsr()

    def weighted_mass_blocks(self, kind, weight_coeffs):
        w_loc = self.W2.local_coeffs(weight_coeffs)
        P = self._wmass_P[kind]
        n = P.shape[1]
        return np.matmul(P.reshape(len(P), n * n, 3),
                         w_loc[:, :, None]).reshape(len(P), n, n)

    def weighted_mass(self, kind, weight_coeffs, check_positive=True):
        """Sparse DG1-weighted mass matrix on W1 or W0."""
        if check_positive:
            self.check_positive(weight_coeffs)
        return self._to_csr(kind, self.weighted_mass_blocks(kind, weight_coeffs))

    def block_matvec(self, kind, blocks, x):
        space = self._spaces[kind]
        loc = np.matmul(blocks, space.local_coeffs(x)[:, :, None])[:, :, 0]
        return space.scatter(loc)

    def check_positive(self, D_coeffs, where="depth"):
        vals = self.eval_scalar("DG1", D_coeffs)
        m = float(vals.min())
        for side in (0, 1):
            m = min(m, float(self.feval_scalar("DG1", D_coeffs, side).min()))
        if m <= 0.0:
            raise PositivityError(m, where)
        return m

    def mass_lu(self, kind):
        if kind not in self._lus:
            M = {"CG3": self.M0, "BDM2": self.M1, "DG1": self.M2}[kind]
            self._lus[kind] = spla.splu(sp.csc_matrix(M))
        return self._lus[kind]

    def solve_weighted(self, kind, weight_coeffs, rhs, rtol=1e-13, x0=None,
                       check_positive=True):
        """Solve <w v, x> = rhs against the DG1 weight w by preconditioned CG."""
        if check_positive:
            self.check_positive(weight_coeffs)
        blocks = self.weighted_mass_blocks(kind, weight_coeffs)
        lu = self.mass_lu(kind)
        wbar = self.mass_scalar(weight_coeffs) / self.mesh.total_area()
        precond = lambda r: lu.solve(r) / wbar
        matvec = lambda x: self.block_matvec(kind, blocks, x)
        return pcg(matvec, rhs, precond, rtol=rtol, x0=x0)

    # -- projections and interpolation ---------------------------------------

    def project_W2(self, values):
        """L2 projection of point samples (nc, nq) into DG1."""
        rhs = np.einsum("cq,qi->ci", values * self.wdet, self.tab["DG1"]["val"])
        loc = np.einsum("cij,cj->ci", self._M2_blockinv, rhs)
        out = np.zeros(self.W2.dim)
        out[self.W2.cell_dofs] = loc
        return out

    def project_W1(self, values):
        """L2 projection of vector samples (nc, nq, 3) into BDM2."""
        return self.mass_lu("BDM2").solve(self.functional_vec(values))

    def project_W0(self, values):
        return self.mass_lu("CG3").solve(self.functional_scalar("CG3", values))

    def interpolate_W1(self, fn):
        """BDM2 dof interpolation of an analytic velocity fn(points)->(...,3)."""
        mesh = self.mesh
        coeffs = np.zeros(self.W1.dim)
        pa = mesh.facet_endpoints[:, 0]
        d = mesh.facet_endpoints[:, 1] - mesh.facet_endpoints[:, 0]
        for g, s in enumerate(EDGE_DOF_NODES):
            pts = pa + s * d
            un = np.einsum("fd,fd->f", fn(pts), mesh.facet_normal_plus)
            coeffs[3 * np.arange(mesh.nfacets) + g] = mesh.facet_lengths * un
        uq = fn(self.vpoints.reshape(-1, 3)).reshape(mesh.ncells, self.nq, 3)
        pw = np.einsum("ckd,qmk->cqmd", mesh.pinv, self.wint)
        interior = np.einsum("cq,cqd,cqmd->cm", self.wdet, uq, pw)
        coeffs[3 * mesh.nfacets + 3 * np.arange(mesh.ncells)[:, None]
               + np.arange(3)] = interior
        return coeffs

    # -- scalar integrals ------------------------------------------------------

    def integrate(self, values):
        """Integral of point samples (nc, nq) over the mesh."""
        return float(np.sum(values * self.wdet))

    def mass_scalar(self, D_coeffs):
        return self.integrate(self.eval_scalar("DG1", D_coeffs))
