import numpy as np

from conftest import SCRIPTS, run_script

import sys

sys.path.insert(0, SCRIPTS)
from vtk_reader import read_vtk  # noqa: E402


def test_reader_roundtrip(sample_vtk):
    data = read_vtk(sample_vtk)
    assert data["points"].shape == (6, 3)
    assert data["cells"].shape == (8, 3)
    assert data["cell_data"]["depth"].shape == (8,)
    assert data["cell_data"]["velocity"].shape == (8, 3)
    assert data["point_data"]["potential_vorticity"].shape == (6,)
    assert np.isclose(data["cell_data"]["depth"][3], 1.3)


def test_depth_contours(sample_vtk, tmp_path):
    out = tmp_path / "depth.png"
    r = run_script("plot_fields.py", str(sample_vtk), "--field", "depth",
                   "--mode", "contours", "--levels", "16",
                   "--vmin", "0.75", "--vmax", "1.5", "--out", str(out))
    assert r.returncode == 0, r.stderr
    assert out.stat().st_size > 0


def test_velocity_magnitude_contours(sample_vtk, tmp_path):
    out = tmp_path / "vel.png"
    r = run_script("plot_fields.py", str(sample_vtk), "--field", "velocity",
                   "--out", str(out))
    assert r.returncode == 0, r.stderr
    assert out.stat().st_size > 0


def test_pv_latband(sample_vtk, tmp_path):
    out = tmp_path / "pv.png"
    r = run_script("plot_fields.py", str(sample_vtk), "--field", "pv",
                   "--mode", "latband", "--contour-spacing", "1.25e-9",
                   "--lat-min", "10", "--lat-max", "80", "--out", str(out))
    assert r.returncode == 0, r.stderr
    assert out.stat().st_size > 0


def test_latband_needs_spacing(sample_vtk, tmp_path):
    r = run_script("plot_fields.py", str(sample_vtk), "--field", "pv",
                   "--mode", "latband", "--out", str(tmp_path / "x.png"))
    assert r.returncode == 2
    assert "contour-spacing" in r.stderr


def test_level_count_validated(sample_vtk, tmp_path):
    r = run_script("plot_fields.py", str(sample_vtk), "--levels", "1",
                   "--out", str(tmp_path / "x.png"))
    assert r.returncode == 2


def test_missing_file_and_bad_format(tmp_path):
    r = run_script("plot_fields.py", str(tmp_path / "none.vtk"),
                   "--out", str(tmp_path / "x.png"))
    assert r.returncode == 2
    bad = tmp_path / "bad.vtk"
    bad.write_text("not a vtk file\n")
    r = run_script("plot_fields.py", str(bad), "--out", str(tmp_path / "x.png"))
    assert r.returncode == 2


def test_deterministic_output(sample_vtk, tmp_path):
    outs = []
    for tag in ("p", "q"):
        out = tmp_path / f"{tag}.png"
        r = run_script("plot_fields.py", str(sample_vtk), "--field", "pv",
                       "--mode", "latband", "--contour-spacing", "1e-9",
                       "--out", str(out))
        assert r.returncode == 0, r.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
