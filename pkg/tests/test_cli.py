"""End-to-end CLI runs on a shrunken problem (short tau, coarse grid) plus
config validation and file-format round trips."""
import json
import subprocess
import sys

import numpy as np
import pytest

from susytweezer.cli import main
from susytweezer.configs import Extract1DConfig
from susytweezer.dataio import read_csv, read_json, write_json, read_field, write_field
from susytweezer.errors import ConfigError


def tiny_config(**overrides):
    cfg = {
        "schema_version": 1,
        "species": "Li6",
        "wavelength_nm": 810.0,
        "trap": {"alpha1_Er": -12.0, "w0_um": 1.0},
        "partner": {"alpha2_Er": -10.7303, "levels": 5},
        "grid": {"extent": 132.0, "points": 512},
        "schedule": {"tau_ms": 0.05},
    }
    cfg.update(overrides)
    return cfg


@pytest.fixture(scope="module")
def cfg_path(tmp_path_factory):
    p = tmp_path_factory.mktemp("cli") / "c.json"
    write_json(p, tiny_config())
    return p


def test_config_roundtrip_identity():
    d = tiny_config()
    cfg = Extract1DConfig.from_dict(d)
    d2 = cfg.to_dict()
    cfg2 = Extract1DConfig.from_dict(d2)
    assert cfg2 == cfg
    assert cfg2.to_dict() == d2


def test_config_errors_have_paths():
    bad = tiny_config()
    del bad["trap"]["w0_um"]
    with pytest.raises(ConfigError) as exc:
        Extract1DConfig.from_dict(bad)
    assert exc.value.path == "trap.w0_um"
    bad2 = tiny_config()
    bad2["trap"]["alpha1_Er"] = 12.0
    with pytest.raises(ConfigError, match="attractive"):
        Extract1DConfig.from_dict(bad2)
    bad3 = tiny_config()
    bad3["schema_version"] = 99
    with pytest.raises(ConfigError, match="version"):
        Extract1DConfig.from_dict(bad3)


def test_cli_exit_code_2_on_bad_config(tmp_path, capsys):
    p = tmp_path / "bad.json"
    write_json(p, tiny_config(trap={"alpha1_Er": 12.0, "w0_um": 1.0}))
    rc = main(["extract", "--config", str(p), "--n", "0", "--out", str(tmp_path)])
    assert rc == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config"


def test_spectrum_command(cfg_path, tmp_path):
    rc = main(["spectrum", "--config", str(cfg_path), "--out", str(tmp_path)])
    assert rc == 0
    cols, data = read_csv(tmp_path / "spectrum.csv")
    assert cols[0] == "level" and "energy_Er" in cols[1]
    assert data.shape[0] >= 6
    assert data[0, 1] == pytest.approx(-11.3809, abs=1e-3)
    m = read_json(tmp_path / "manifest.json")
    assert m["command"] == "spectrum" and len(m["content_hash"]) == 64


def test_partner_calibrate_command(tmp_path):
    rc = main(["partner", "--alpha1", "-12", "--w0-um", "1", "--mode",
               "calibrate", "--levels", "5", "--out", str(tmp_path)])
    assert rc == 0
    payload = read_json(tmp_path / "calibration.json")
    assert payload["alpha2_star_Er"] == pytest.approx(-10.8, abs=0.2)
    assert payload["rms_residual_Er"] < 0.05
    assert "manifest_sha256" in payload


def test_partner_exact_command(tmp_path):
    rc = main(["partner", "--alpha1", "-12", "--w0-um", "1", "--mode", "exact",
               "--out", str(tmp_path)])
    assert rc == 0
    cols, data = read_csv(tmp_path / "partner_potential.csv")
    assert data.shape[1] >= 3


def test_extract_sweep_track_and_fidelity_pipeline(cfg_path, tmp_path):
    out = tmp_path / "ex"
    rc = main(["extract", "--config", str(cfg_path), "--n", "0..2",
               "--no-gap", "--out", str(out)])
    assert rc == 0
    res = read_json(out / "extraction.json")
    assert set(res["levels"]) == {"0", "1", "2"}
    # sudden-ish regime: ground stays
    assert res["levels"]["0"]["fidelity"] > 0.99
    assert len(res["level_energies_Er"]) == 6
    assert (out / "trace_n1.csv").exists()
    cols, tr = read_csv(out / "trace_n1.csv")
    assert abs(tr[0, 1] - 1.0) < 1e-9            # norm column

    rc = main(["init-fidelity", "--extraction", str(out / "extraction.json"),
               "--boson-p0", "0.9", "--fermion-ttf", "0.5", "--depth", "5",
               "--na", "2", "--out", str(out)])
    assert rc == 0
    rep = read_json(out / "fidelity_report.json")
    assert 0.0 <= rep["boson"]["bound"] <= 1.0
    assert rep["fermion"]["ground_occupation"] == pytest.approx(
        1 - 1 / (np.exp(10.0) + 1))

    out2 = tmp_path / "sw"
    rc = main(["sweep", "--config", str(cfg_path), "--n", "0,1",
               "--tau-list", "0.02,0.05", "--no-gap", "--out", str(out2)])
    assert rc == 0
    cols, data = read_csv(out2 / "sweep.csv")
    assert data.shape[0] == 4

    out3 = tmp_path / "tk"
    rc = main(["track", "--config", str(cfg_path), "--samples", "9",
               "--out", str(out3)])
    assert rc == 0
    cols, data = read_csv(out3 / "flow.csv")
    assert data.shape[0] == 9 * 11


def test_optimize_command_tiny_budget(cfg_path, tmp_path):
    rc = main(["optimize", "--config", str(cfg_path), "--budget", "3",
               "--seed", "1", "--no-confirm", "--out", str(tmp_path)])
    assert rc == 0
    best = read_json(tmp_path / "optimize_best.json")
    assert best["evaluations"] == 3
    cols, hist = read_csv(tmp_path / "optimize_history.csv")
    assert hist.shape[0] == 3


def test_console_entrypoint_version():
    out = subprocess.run([sys.executable, "-m", "susytweezer.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "susytweezer" in out.stdout


def test_binary_field_roundtrip(tmp_path):
    import susytweezer as st
    g = st.build_grid((4.0, 4.0, 8.0), (8, 8, 16), dims=3)
    w = st.gaussian_packet(g, (0, 0, 0), (1.0, 1.0, 2.0), k0=(0.3, 0, 0))
    path = tmp_path / "psi.bin"
    write_field(path, w.psi, g, kind="wavefunction")
    header, arr = read_field(path)
    assert header["layout"] == "interleaved_re_im"
    assert header["shape"] == [8, 8, 16]
    assert np.array_equal(arr, w.psi)
    path2 = tmp_path / "rho.bin"
    write_field(path2, np.abs(w.psi) ** 2, g, kind="density")
    h2, rho = read_field(path2)
    assert h2["kind"] == "density"
    assert np.array_equal(rho, np.abs(w.psi) ** 2)


def test_csv_roundtrip(tmp_path):
    from susytweezer.dataio import write_csv
    rows = [(0, 1.5, -2.25e-8), (1, 2.0, 3.0)]
    p = tmp_path / "t.csv"
    write_csv(p, ["a", "b_Er", "c"], rows)
    cols, data = read_csv(p)
    assert cols == ["a", "b_Er", "c"]
    assert data[0, 2] == -2.25e-8


def test_manifest_hash_reproducible(cfg_path, tmp_path):
    out1, out2 = tmp_path / "m1", tmp_path / "m2"
    for o in (out1, out2):
        assert main(["spectrum", "--config", str(cfg_path), "--out", str(o)]) == 0
    m1 = read_json(out1 / "manifest.json")
    m2 = read_json(out2 / "manifest.json")
    assert m1["content_hash"] == m2["content_hash"]
    assert m1["wall_time_s"] != 0.0
