"""Oriented triangular meshes: doubly periodic square and icosahedral sphere.

Every mesh is boundary-free, so each facet has exactly two incident cells,
labelled + and - with the lower (cell, local edge) pair taken as +.  Cells
are stored with their own (unwrapped) vertex coordinates so that periodic
cells straddling the seam keep a consistent affine geometry; vertex ids
refer to equivalence classes.  All coordinates are embedded in 3D (z = 0 on
the plane), which lets the perp operation u -> k x u share one code path
between geometries.

Local edge e of a cell runs from local vertex (e+1)%3 to (e+2)%3.  For a
consistently oriented closed surface the two sides always traverse a shared
facet in opposite directions; this is validated during construction.
"""

import numpy as np

from .errors import InvalidMeshError
from .quadrature import edge_quadrature

EDGE_VERTS = [(1, 2), (2, 0), (0, 1)]


class Mesh:
    def __init__(self, vertices, cells, cell_coords, geometry, metadata):
        self.vertices = np.asarray(vertices, dtype=float)
        self.cells = np.asarray(cells, dtype=np.int64)
        self.cell_coords = np.asarray(cell_coords, dtype=float)
        self.geometry = geometry  # "plane" or "sphere"
        self.metadata = dict(metadata)
        self.nvertices = len(self.vertices)
        self.ncells = len(self.cells)
        self._setup_geometry()
        self._build_facets()
        self._validate()

    # -- geometry ---------------------------------------------------------

    def _setup_geometry(self):
        p0 = self.cell_coords[:, 0, :]
        e1 = self.cell_coords[:, 1, :] - p0
        e2 = self.cell_coords[:, 2, :] - p0
        normal = np.cross(e1, e2)
        area2 = np.linalg.norm(normal, axis=1)
        if np.any(area2 <= 0.0) or np.any(~np.isfinite(area2)):
            raise InvalidMeshError("degenerate cell (zero Jacobian)")
        self.J = np.stack([e1, e2], axis=2)            # (nc, 3, 2)
        self.detp = area2                              # area scale factor
        self.k = normal / area2[:, None]               # unit cell normal
        JtJ = np.einsum("cdi,cdj->cij", self.J, self.J)
        inv = np.linalg.inv(JtJ)
        self.pinv = np.einsum("cij,cdj->cid", inv, self.J)  # (nc, 2, 3)
        self.cell_areas = 0.5 * self.detp
        self.cell_centroids = self.cell_coords.mean(axis=1)

        if self.geometry == "plane":
            if np.any(self.k[:, 2] < 0.99999):
                raise InvalidMeshError("plane cells must be CCW in the xy plane")
        else:
            if np.any(np.einsum("cd,cd->c", self.k, self.cell_centroids) <= 0):
                raise InvalidMeshError("sphere cells must be oriented outward")

    # -- facet connectivity -------------------------------------------------

    def _edge_keys(self):
        """One hashable key per (cell, edge) side; shared sides match."""
        keys = {}
        if self.geometry == "sphere":
            for c in range(self.ncells):
                for e in range(3):
                    a, b = EDGE_VERTS[e]
                    va, vb = self.cells[c, a], self.cells[c, b]
                    keys[(c, e)] = (min(va, vb), max(va, vb))
        else:
            Lx = self.metadata["Lx"]
            Ly = self.metadata["Ly"]
            n = self.metadata["n"]
            for c in range(self.ncells):
                for e in range(3):
                    a, b = EDGE_VERTS[e]
                    mid = 0.5 * (self.cell_coords[c, a] + self.cell_coords[c, b])
                    ix = int(round((mid[0] % Lx) / Lx * 2 * n)) % (2 * n)
                    iy = int(round((mid[1] % Ly) / Ly * 2 * n)) % (2 * n)
                    keys[(c, e)] = (ix, iy)
        return keys

    def _build_facets(self):
        sides = {}
        for (c, e), key in self._edge_keys().items():
            sides.setdefault(key, []).append((c, e))
        plus, minus, flips = [], [], []
        for key, pair in sorted(sides.items()):
            if len(pair) != 2:
                raise InvalidMeshError(
                    f"facet key {key} has {len(pair)} incident sides")
            pair.sort()
            (cp, ep), (cm, em) = pair
            ap, bp = EDGE_VERTS[ep]
            am, bm = EDGE_VERTS[em]
            dir_p = self.cell_coords[cp, bp] - self.cell_coords[cp, ap]
            dir_m = self.cell_coords[cm, bm] - self.cell_coords[cm, am]
            agree = float(np.dot(dir_p, dir_m)) > 0.0
            plus.append((cp, ep))
            minus.append((cm, em))
            flips.append(not agree)
        self.nfacets = len(plus)
        self.facet_cells = np.array(
            [[p[0], m[0]] for p, m in zip(plus, minus)], dtype=np.int64)
        self.facet_edges = np.array(
            [[p[1], m[1]] for p, m in zip(plus, minus)], dtype=np.int64)
        self.facet_flip = np.array(flips, dtype=bool)

        # Per-facet frame from the + side.
        cp = self.facet_cells[:, 0]
        ep = self.facet_edges[:, 0]
        a_idx = np.array([EDGE_VERTS[e][0] for e in ep])
        b_idx = np.array([EDGE_VERTS[e][1] for e in ep])
        pa = self.cell_coords[cp, a_idx]
        pb = self.cell_coords[cp, b_idx]
        self.facet_endpoints = np.stack([pa, pb], axis=1)
        d = pb - pa
        self.facet_lengths = np.linalg.norm(d, axis=1)
        self.facet_tangent = d / self.facet_lengths[:, None]
        self.facet_normal_plus = np.cross(self.facet_tangent, self.k[cp])
        cm = self.facet_cells[:, 1]
        sgn = np.where(self.facet_flip, -1.0, 1.0)[:, None]
        self.facet_normal_minus = np.cross(sgn * self.facet_tangent, self.k[cm])

        # (cell, local edge) -> facet lookup used by the dof maps.
        self.cell_facets = np.full((self.ncells, 3), -1, dtype=np.int64)
        self.cell_is_plus = np.zeros((self.ncells, 3), dtype=bool)
        self.cell_agree = np.zeros((self.ncells, 3), dtype=bool)
        for f in range(self.nfacets):
            cpp, epp = self.facet_cells[f, 0], self.facet_edges[f, 0]
            cmm, emm = self.facet_cells[f, 1], self.facet_edges[f, 1]
            self.cell_facets[cpp, epp] = f
            self.cell_is_plus[cpp, epp] = True
            self.cell_agree[cpp, epp] = True
            self.cell_facets[cmm, emm] = f
            self.cell_is_plus[cmm, emm] = False
            self.cell_agree[cmm, emm] = not self.facet_flip[f]

    def _validate(self):
        if np.any(self.cell_facets < 0):
            raise InvalidMeshError("cell edge without facet record")
        # Consistent orientation: neighbours traverse shared facets oppositely.
        if not np.all(self.facet_flip):
            raise InvalidMeshError("inconsistently oriented neighbouring cells")
        if self.geometry == "sphere":
            a = self.metadata["radius"]
            r = np.linalg.norm(self.vertices, axis=1)
            if np.max(np.abs(r - a)) > 1e-12 * a:
                raise InvalidMeshError("sphere vertices off the sphere")

    # -- queries ------------------------------------------------------------

    def max_edge_length(self):
        return float(np.max(self.facet_lengths))

    def total_area(self):
        return float(np.sum(self.cell_areas))

    def facet_quadrature_frames(self, facet, degree=8):
        """Tangent, two-sided normals and weighted points on one facet."""
        rule = edge_quadrature(degree)
        pa, pb = self.facet_endpoints[facet]
        pts = pa[None, :] + rule.points[:, None] * (pb - pa)[None, :]
        return {
            "tangent": self.facet_tangent[facet],
            "normal_plus": self.facet_normal_plus[facet],
            "normal_minus": self.facet_normal_minus[facet],
            "points": pts,
            "weights": rule.weights * self.facet_lengths[facet],
        }

    def dump_text(self, path):
        """Plain-text dump: vertices, cell triples and facet records."""
        with open(path, "w") as fh:
            fh.write("ecswe mesh dump v1\n")
            if self.geometry == "plane":
                fh.write(f"plane {self.metadata['Lx']!r} {self.metadata['Ly']!r}\n")
            else:
                fh.write(f"sphere {self.metadata['radius']!r}\n")
            fh.write(f"vertices {self.nvertices}\n")
            for v in self.vertices:
                fh.write(f"{v[0]!r} {v[1]!r} {v[2]!r}\n")
            fh.write(f"cells {self.ncells}\n")
            for c in self.cells:
                fh.write(f"{c[0]} {c[1]} {c[2]}\n")
            fh.write(f"facets {self.nfacets}\n")
            for f in range(self.nfacets):
                fh.write("{} {} {} {}\n".format(
                    self.facet_cells[f, 0], self.facet_edges[f, 0],
                    self.facet_cells[f, 1], self.facet_edges[f, 1]))


def build_periodic_square(n, L):
    """Doubly periodic unit-square-style mesh: n x n squares, 2 triangles each."""
    if n < 2:
        raise InvalidMeshError(f"periodic square needs n >= 2, got {n}")
    if L <= 0:
        raise InvalidMeshError(f"side length must be positive, got {L}")
    h = L / n
    vid = lambda i, j: (i % n) * n + (j % n)
    verts = np.zeros((n * n, 3))
    for i in range(n):
        for j in range(n):
            verts[vid(i, j)] = (i * h, j * h, 0.0)
    cells, coords = [], []
    for i in range(n):
        for j in range(n):
            p = {(di, dj): np.array([(i + di) * h, (j + dj) * h, 0.0])
                 for di in (0, 1) for dj in (0, 1)}
            v = {(di, dj): vid(i + di, j + dj) for di in (0, 1) for dj in (0, 1)}
            cells.append([v[0, 0], v[1, 0], v[1, 1]])
            coords.append([p[0, 0], p[1, 0], p[1, 1]])
            cells.append([v[0, 0], v[1, 1], v[0, 1]])
            coords.append([p[0, 0], p[1, 1], p[0, 1]])
    return Mesh(verts, cells, coords, "plane",
                {"n": n, "Lx": L, "Ly": L, "refinement": None})


_ICOSA_FACES = [
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
]


def build_icosahedral_sphere(refinement, a):
    """Icosahedral sphere mesh: 20 * 4^refinement flat triangles, radius a."""
    if refinement < 0:
        raise InvalidMeshError(f"refinement must be >= 0, got {refinement}")
    if a <= 0:
        raise InvalidMeshError(f"radius must be positive, got {a}")
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    base = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=float)
    verts = [a * v / np.linalg.norm(v) for v in base]
    cells = [list(f) for f in _ICOSA_FACES]

    for _ in range(refinement):
        midpoint = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in midpoint:
                m = verts[i] + verts[j]
                verts.append(a * m / np.linalg.norm(m))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        new_cells = []
        for (i, j, k) in cells:
            ij, jk, ki = mid(i, j), mid(j, k), mid(k, i)
            new_cells += [[i, ij, ki], [ij, j, jk], [ki, jk, k], [ij, jk, ki]]
        cells = new_cells

    verts = np.array(verts)
    cells = np.array(cells, dtype=np.int64)
    # Outward orientation.
    for c in range(len(cells)):
        p = verts[cells[c]]
        if np.dot(np.cross(p[1] - p[0], p[2] - p[0]), p.mean(axis=0)) < 0:
            cells[c, 1], cells[c, 2] = cells[c, 2], cells[c, 1]
    coords = verts[cells]
    return Mesh(verts, cells, coords, "sphere",
                {"radius": a, "refinement": refinement})
