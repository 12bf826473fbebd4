import os
import subprocess
import sys

import numpy as np
import pytest

SCRIPTS = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))

CSV_HEADER = "step,time,energy,rel_energy_err,mass,enstrophy,rel_enstrophy_err"


def run_script(name, *args):
    return subprocess.run([sys.executable, os.path.join(SCRIPTS, name), *args],
                          capture_output=True, text=True, cwd=SCRIPTS)


@pytest.fixture
def sample_csv(tmp_path):
    def make(name="diagnostics.csv", rows=20, scale=1e-12, seed=0):
        rng = np.random.default_rng(seed)
        lines = [CSV_HEADER]
        for k in range(rows):
            e = scale * rng.standard_normal()
            z = 10 * scale * rng.standard_normal()
            lines.append(f"{k},{k * 50.0},{8.9e22 * (1 + e)},{e},1.0,2.0,{z}")
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n")
        return path

    return make


def octahedron_vtk(path, radius=1.0):
    """Tiny hand-written spherical snapshot: 6 vertices, 8 triangles."""
    pts = radius * np.array([
        [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]],
        dtype=float)
    cells = np.array([
        [0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
        [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]])
    depth = 1.0 + 0.1 * np.arange(8)
    vel = np.column_stack([np.arange(8), np.zeros(8), np.zeros(8)])
    pv = 2.5e-9 * pts[:, 2] / radius  # linear in latitude, +/- spread
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 2.0\nsample\nASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(pts)} double\n")
        for p in pts:
            fh.write(f"{float(p[0])!r} {float(p[1])!r} {float(p[2])!r}\n")
        fh.write(f"CELLS {len(cells)} {4 * len(cells)}\n")
        for c in cells:
            fh.write(f"3 {c[0]} {c[1]} {c[2]}\n")
        fh.write(f"CELL_TYPES {len(cells)}\n" + "5\n" * len(cells))
        fh.write(f"CELL_DATA {len(cells)}\n")
        fh.write("SCALARS depth double 1\nLOOKUP_TABLE default\n")
        fh.writelines(f"{float(x)!r}\n" for x in depth)
        fh.write("VECTORS velocity double\n")
        for v in vel:
            fh.write(f"{float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        fh.write(f"POINT_DATA {len(pts)}\n")
        fh.write("SCALARS potential_vorticity double 1\nLOOKUP_TABLE default\n")
        fh.writelines(f"{float(x)!r}\n" for x in pv)
    return path


@pytest.fixture
def sample_vtk(tmp_path):
    return octahedron_vtk(tmp_path / "snap.vtk")
