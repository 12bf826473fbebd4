from conftest import run_script


def test_single_curve(sample_csv, tmp_path):
    csv = sample_csv()
    out = tmp_path / "e.png"
    r = run_script("plot_energy.py", str(csv), "--out", str(out))
    assert r.returncode == 0, r.stderr
    assert out.stat().st_size > 0


def test_two_run_overlay_with_labels(sample_csv, tmp_path):
    a = sample_csv("a.csv", seed=1)
    b = sample_csv("b.csv", seed=2, scale=1e-8)
    out = tmp_path / "overlay.png"
    r = run_script("plot_energy.py", str(a), str(b), "--labels",
                   "with upwinding,without upwinding", "--logy",
                   "--out", str(out))
    assert r.returncode == 0, r.stderr
    assert out.stat().st_size > 0


def test_enstrophy_column(sample_csv, tmp_path):
    csv = sample_csv()
    out = tmp_path / "z.png"
    r = run_script("plot_energy.py", str(csv), "--column",
                   "rel_enstrophy_err", "--out", str(out))
    assert r.returncode == 0, r.stderr


def test_missing_column_names_it(sample_csv, tmp_path):
    csv = sample_csv()
    r = run_script("plot_energy.py", str(csv), "--column", "vorticity_rms",
                   "--out", str(tmp_path / "x.png"))
    assert r.returncode == 2
    assert "vorticity_rms" in r.stderr


def test_empty_series_errors(tmp_path):
    csv = tmp_path / "empty.csv"
    csv.write_text("step,time,energy,rel_energy_err,mass,enstrophy,"
                   "rel_enstrophy_err\n")
    r = run_script("plot_energy.py", str(csv), "--out", str(tmp_path / "x.png"))
    assert r.returncode == 2
    assert "no data rows" in r.stderr


def test_label_count_mismatch(sample_csv, tmp_path):
    csv = sample_csv()
    r = run_script("plot_energy.py", str(csv), str(csv), "--labels", "only-one",
                   "--out", str(tmp_path / "x.png"))
    assert r.returncode == 2


def test_deterministic_output(sample_csv, tmp_path):
    csv = sample_csv()
    outs = []
    for tag in ("p", "q"):
        out = tmp_path / f"{tag}.png"
        r = run_script("plot_energy.py", str(csv), "--logy", "--out", str(out))
        assert r.returncode == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
