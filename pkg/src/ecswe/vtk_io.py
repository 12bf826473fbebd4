"""Legacy ASCII VTK snapshots of the prognostic and diagnostic fields.

Each snapshot is an unstructured triangle grid with cell-averaged depth and
centroid velocity vectors as CELL_DATA, and the potential vorticity sampled
at the mesh vertices (the vertex subset of the CG3 nodes) as POINT_DATA.
Periodic meshes reference vertex classes, so seam triangles appear wrapped
in a viewer; the data itself is exact.
"""

import numpy as np

from .elements import make_element


def _fmt(x):
    return f"{x:.16g}"


def cell_average_depth(ctx, D):
    # DG1 cell average is the mean of the three nodal coefficients.
    return D[ctx.W2.cell_dofs].mean(axis=1)


def centroid_velocity(ctx, u):
    tab = make_element("BDM2").tabulate(np.array([[1.0 / 3.0, 1.0 / 3.0]]))
    loc = ctx.W1.local_coeffs(u)
    tmp = np.tensordot(loc, tab["val"][0], axes=([1], [0]))
    return np.einsum("cdk,ck->cd", ctx.mesh.J, tmp) / ctx.mesh.detp[:, None]


def vertex_pv(ctx, q):
    return q[: ctx.mesh.nvertices]


def write_vtk(path, ctx, D, u, q, title="ecswe snapshot"):
    mesh = ctx.mesh
    depth = cell_average_depth(ctx, D)
    vel = centroid_velocity(ctx, u)
    pv = vertex_pv(ctx, q)
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 2.0\n")
        fh.write(title + "\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {mesh.nvertices} double\n")
        for v in mesh.vertices:
            fh.write(f"{_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}\n")
        fh.write(f"CELLS {mesh.ncells} {4 * mesh.ncells}\n")
        for c in mesh.cells:
            fh.write(f"3 {c[0]} {c[1]} {c[2]}\n")
        fh.write(f"CELL_TYPES {mesh.ncells}\n")
        fh.write("5\n" * mesh.ncells)
        fh.write(f"CELL_DATA {mesh.ncells}\n")
        fh.write("SCALARS depth double 1\nLOOKUP_TABLE default\n")
        for x in depth:
            fh.write(_fmt(x) + "\n")
        fh.write("VECTORS velocity double\n")
        for v in vel:
            fh.write(f"{_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}\n")
        fh.write(f"POINT_DATA {mesh.nvertices}\n")
        fh.write("SCALARS potential_vorticity double 1\nLOOKUP_TABLE default\n")
        for x in pv:
            fh.write(_fmt(x) + "\n")
