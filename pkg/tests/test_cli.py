import json
import math
from pathlib import Path

import numpy as np
import pytest

from omsense import cli, sensing, spectrum
from omsense.config import load_config

CONFIGS = Path(__file__).parent.parent / "configs"


def read_csv(path):
    lines = Path(path).read_text().splitlines()
    assert lines[0].startswith("# ")
    names = [c.split(" [")[0] for c in lines[0][2:].split(",")]
    rows = [line.split(",") for line in lines[1:]]
    return names, rows


def test_eigen_contains_lossless_mode(tmp_path):
    assert cli.run(["eigen", "--config", str(CONFIGS / "spectrum.toml"), "--out", str(tmp_path)]) == 0
    names, rows = read_csv(tmp_path / "eigen.csv")
    i_phi, i_d, i_im = names.index("phi"), names.index("delta_over_Gamma"), names.index("im_lambda_plus")
    # kappa = 2e-3 Gamma in this config, so the VIC mode decays at kappa/2
    at_zero = [r for r in rows if float(r[i_phi]) == 0 and abs(float(r[i_d])) < 1e-12]
    assert len(at_zero) == 1
    assert float(at_zero[0][i_im]) == pytest.approx(-1e-3, abs=1e-12)
    meta = json.loads((tmp_path / "eigen.meta.json").read_text())
    assert meta["summary"]["exceptional_points_over_Gamma"] == pytest.approx([-1.0, 1.0], abs=1e-9)
    assert meta["version"] and meta["timestamp"]


def test_lossless_eigen_has_zero_linewidth(tmp_path):
    cfg = tmp_path / "lossless.toml"
    cfg.write_text((CONFIGS / "spectrum.toml").read_text().replace('"0.002 Gamma"', "0"))
    assert cli.run(["eigen", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    names, rows = read_csv(tmp_path / "eigen.csv")
    i_phi, i_d, i_im = names.index("phi"), names.index("delta_over_Gamma"), names.index("im_lambda_plus")
    row = next(r for r in rows if float(r[i_phi]) == 0 and abs(float(r[i_d])) < 1e-12)
    assert float(row[i_im]) == 0.0


def test_sense_cut_region_two(tmp_path):
    assert cli.run(["sense-cut", "--config", str(CONFIGS / "region-two.toml"), "--out", str(tmp_path)]) == 0
    names, rows = read_csv(tmp_path / "sense-cut.csv")
    inv = np.array([float(r[names.index("eta_inv")]) for r in rows])
    phi = np.array([float(r[names.index("phi_dimless")]) for r in rows])
    assert 100 < inv.max() < 400
    assert abs(phi[inv.argmax()] + 0.024) < 0.002


def test_round_trip_rows(tmp_path):
    """Sampled rows are re-derivable from the library with the recorded parameters."""
    args = ["sense-map", "--config", str(CONFIGS / "sensing-map.toml"), "--out", str(tmp_path),
            "--grid", "9x7"]
    assert cli.run(args) == 0
    names, rows = read_csv(tmp_path / "sense-map.csv")
    assert len(rows) == 63
    p = load_config(CONFIGS / "sensing-map.toml").physical
    for r in rows[::10]:
        phi, delta = float(r[names.index("phi")]), float(r[names.index("delta")])
        pt = sensing.sensitivity(p.with_(phi=phi, delta=delta))
        assert float(r[names.index("eta")]) == pytest.approx(pt.eta, rel=1e-11)
        assert r[names.index("region")] == pt.region


def test_eigen_rows_round_trip(tmp_path):
    cli.run(["eigen", "--config", str(CONFIGS / "spectrum.toml"), "--out", str(tmp_path)])
    names, rows = read_csv(tmp_path / "eigen.csv")
    p = load_config(CONFIGS / "spectrum.toml").physical
    for r in rows[::97]:
        q = p.with_(phi=float(r[0]), delta=float(r[2]))
        s = spectrum.eigenvalues_closed_form(q)
        assert float(r[names.index("re_lambda_plus")]) == pytest.approx(s.lambda_plus.real / p.Gamma,
                                                                        rel=1e-9, abs=1e-11)


def test_deterministic_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert cli.run(["region-map", "--config", str(CONFIGS / "sensing-map.toml"), "--out", str(out),
                        "--grid", "21x21"]) == 0
    assert (a / "region-map.csv").read_bytes() == (b / "region-map.csv").read_bytes()


def test_json_format(tmp_path):
    assert cli.run(["steady", "--out", str(tmp_path), "--format", "json", "--phi=-0.012pi"]) == 0
    doc = json.loads((tmp_path / "steady.json").read_text())
    assert doc["columns"][1] == "beta"
    assert len(doc["rows"]) == 1


def test_overrides(tmp_path):
    assert cli.run(["coeffs", "--out", str(tmp_path), "--delta-range=-0.1Gamma:0.1Gamma",
                    "--grid", "3x5"]) == 0
    names, rows = read_csv(tmp_path / "coeffs.csv")
    d = sorted({float(r[names.index("delta_over_Gamma")]) for r in rows})
    assert d == pytest.approx([-0.1, -0.05, 0.0, 0.05, 0.1])


def test_response_pair(tmp_path):
    assert cli.run(["response", "--config", str(CONFIGS / "sensing-map.toml"), "--out", str(tmp_path),
                    "--grid", "41x3"]) == 0
    names, rows = read_csv(tmp_path / "response.csv")
    assert len(rows) == 82
    counts = {int(r[names.index("count")]) for r in rows}
    assert counts == {1, 3}


def test_nanosphere(tmp_path):
    assert cli.run(["nanosphere-g", "--config", str(CONFIGS / "nanosphere.toml"),
                    "--out", str(tmp_path)]) == 0
    names, rows = read_csv(tmp_path / "nanosphere-g.csv")
    assert int(rows[0][0]) > 1000


def test_dynamics_trajectory(tmp_path):
    cfg = tmp_path / "dyn.toml"
    cfg.write_text((CONFIGS / "hysteresis.toml").read_text().replace(
        "[sweep]", 't_end = "2 periods"\nsamples = 11\n\n[sweep]'
    ).replace('axis = "phi"\n', 'axis = "phi"\n'))
    assert cli.run(["dynamics", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    names, rows = read_csv(tmp_path / "dynamics.csv")
    assert len(rows) == 11 and names[:2] == ["t", "t_Gamma"]


def test_bad_config_exit_status(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[physical]\nGamma = 5\n")
    assert cli.run(["steady", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_unknown_subcommand_exits_nonzero():
    with pytest.raises(SystemExit) as info:
        cli.run(["plot"])
    assert info.value.code != 0


def test_missing_nanosphere_section(tmp_path):
    assert cli.run(["nanosphere-g", "--out", str(tmp_path)]) == 2


def test_phi_override_units(tmp_path):
    assert cli.run(["steady", "--out", str(tmp_path), "--phi=-0.012pi"]) == 0
    meta = json.loads((tmp_path / "steady.meta.json").read_text())
    assert meta["params"]["phi"] == pytest.approx(-0.012 * math.pi)
