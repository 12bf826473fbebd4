import numpy as np
import pytest

from ecswe.cli import CSV_HEADER, CSV_HEADER_L2, main


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, (float(x) for x in line.split(","))))
            for line in lines[1:]]
    return header, rows


def test_run_zero_steps(tmp_path):
    out = tmp_path / "zero"
    rc = main(["run", "--scenario", "unit_square", "--n", "4", "--steps", "0",
               "--out", str(out)])
    assert rc == 0
    header, rows = read_csv(out / "diagnostics.csv")
    assert ",".join(header) == CSV_HEADER
    assert len(rows) == 1
    assert rows[0]["step"] == 0
    assert (out / "snap_000000.vtk").exists()
    assert (out / "run_manifest.txt").exists()


def test_run_writes_rows_and_snapshots(tmp_path):
    out = tmp_path / "run"
    rc = main(["run", "--scenario", "unit_square", "--n", "4", "--steps", "4",
               "--snapshot-every", "2", "--out", str(out)])
    assert rc == 0
    header, rows = read_csv(out / "diagnostics.csv")
    assert len(rows) == 5
    for name in ("snap_000000.vtk", "snap_000002.vtk", "snap_000004.vtk"):
        assert (out / name).exists()
    # mass column flat
    masses = [r["mass"] for r in rows]
    assert max(abs(m - masses[0]) for m in masses) <= 1e-12 * abs(masses[0])


def test_run_l2_columns_for_williamson2(tmp_path):
    out = tmp_path / "w2"
    rc = main(["run", "--scenario", "williamson2", "--refinement", "0",
               "--steps", "1", "--dt", "50", "--out", str(out)])
    assert rc == 0
    header, rows = read_csv(out / "diagnostics.csv")
    assert ",".join(header) == CSV_HEADER_L2
    assert rows[0]["l2_err_D"] > 0


def test_run_deterministic(tmp_path):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        rc = main(["run", "--scenario", "unit_square", "--n", "4",
                   "--steps", "3", "--out", str(out)])
        assert rc == 0
        outs.append((out / "diagnostics.csv").read_bytes())
    assert outs[0] == outs[1]


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# comment\n"
        "scenario = unit_square\n"
        "n = 4\n"
        "steps = 2\n"
        "variant = u_upwind_only\n")
    out = tmp_path / "out"
    rc = main(["run", "--config", str(cfg), "--steps", "1", "--out", str(out)])
    assert rc == 0
    manifest = (out / "run_manifest.txt").read_text()
    assert "variant = u_upwind_only" in manifest
    assert "resolved_steps = 1" in manifest


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("unknown_key = 1\n")
    assert main(["run", "--config", str(bad)]) == 2
    bad.write_text("scenario = unit_square\nsteps = many\n")
    assert main(["run", "--config", str(bad)]) == 2
    assert main(["run"]) == 2  # no scenario anywhere
    bad.write_text("scenario = unit_square\nsteps\n")
    assert main(["run", "--config", str(bad)]) == 2


def test_mesh_dump_option(tmp_path):
    out = tmp_path / "dump"
    rc = main(["run", "--scenario", "unit_square", "--n", "4", "--steps", "0",
               "--out", str(out), "--dump-mesh"])
    assert rc == 0
    assert (out / "mesh.txt").read_text().startswith("ecswe mesh dump")


def test_verify_passes():
    assert main(["verify", "--seed", "0", "--instances", "3"]) == 0


def test_verify_seed_sweep():
    for seed in range(3):
        assert main(["verify", "--seed", str(seed), "--instances", "2"]) == 0


def test_vtk_snapshot_content(tmp_path):
    out = tmp_path / "vtk"
    main(["run", "--scenario", "unit_square", "--n", "4", "--steps", "0",
          "--out", str(out)])
    text = (out / "snap_000000.vtk").read_text()
    assert text.startswith("# vtk DataFile Version 2.0")
    assert "DATASET UNSTRUCTURED_GRID" in text
    assert "POINTS 16 double" in text
    assert "CELLS 32 128" in text
    assert "SCALARS depth double 1" in text
    assert "VECTORS velocity double" in text
    assert "SCALARS potential_vorticity double 1" in text
    # cell-averaged depth of the initial unit-square field stays near 1
    lines = text.splitlines()
    i = lines.index("LOOKUP_TABLE default") + 1
    depth = np.array([float(x) for x in lines[i:i + 32]])
    assert abs(depth.mean() - 1.0) < 1e-6
