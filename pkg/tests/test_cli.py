import csv
import json

import numpy as np
import pytest

from crowbarsim.cli import build_validation_report, main
from crowbarsim.core import Topology, reference_supply


@pytest.fixture
def config_file(tmp_path, ref_parallel):
    path = tmp_path / "supply.json"
    ref_parallel.to_json_file(path)
    return path


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_model_command(tmp_path, config_file, capsys):
    out = tmp_path / "out"
    rc = main(["model", "--config", str(config_file), "--until", "0.104",
               "--out", str(out), "--no-figures"])
    assert rc == 0
    summary = json.loads((out / "model_summary.json").read_text())
    assert summary["i_f_base"] == pytest.approx(33.77, rel=0.01)
    assert summary["ji_at_until"] == pytest.approx(137.70, rel=0.02)
    rows = _read_csv(out / "model_trace.csv")
    assert rows[0] == ["t_s", "i_A", "ji_A2s"]
    assert len(rows) > 1000
    printed = capsys.readouterr().out
    assert "i_f_base" in printed and "J_I" in printed


def test_model_command_zero_horizon(tmp_path, config_file):
    out = tmp_path / "out"
    rc = main(["model", "--config", str(config_file), "--until", "0",
               "--out", str(out), "--no-figures"])
    assert rc == 0
    rows = _read_csv(out / "model_trace.csv")
    assert rows == [["t_s", "i_A", "ji_A2s"]]
    summary = json.loads((out / "model_summary.json").read_text())
    assert summary["ji_at_until"] == 0.0


def test_model_command_malformed_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"transformer": {')
    out = tmp_path / "never"
    rc = main(["model", "--config", str(bad), "--out", str(out)])
    assert rc == 2
    assert not out.exists()  # no partial outputs


def test_model_command_missing_field_diagnostic(tmp_path, ref_parallel, capsys):
    doc = ref_parallel.to_dict()
    del doc["source"]["omega"]
    bad = tmp_path / "missing.json"
    bad.write_text(json.dumps(doc))
    rc = main(["model", "--config", str(bad)])
    assert rc == 2
    assert "source.omega" in capsys.readouterr().err


def test_model_topology_override(tmp_path, config_file):
    out = tmp_path / "out"
    rc = main(["model", "--config", str(config_file), "--topology", "series",
               "--vc", "3400", "--until", "0.02", "--out", str(out), "--no-figures"])
    assert rc == 0
    summary = json.loads((out / "model_summary.json").read_text())
    assert summary["cap_peak"] == pytest.approx(309.09, rel=1e-3)


def test_sim_command(tmp_path, config_file):
    out = tmp_path / "out"
    rc = main(["sim", "--config", str(config_file), "--fault-angle", "0",
               "--duration", "0.03", "--out", str(out), "--no-figures"])
    assert rc == 0
    report = json.loads((out / "sim_report.json").read_text())
    assert set(report) == {"fault_angle", "peak_A", "ji_at_end", "energy_residual"}
    assert report["peak_A"] == pytest.approx(158.4, rel=0.05)
    rows = _read_csv(out / "sim_trace.csv")
    assert rows[0] == ["t_s", "i_dc_A", "v_dc_V", "ji_A2s"]


def test_sim_command_rejects_zero_duration(config_file):
    rc = main(["sim", "--config", str(config_file), "--duration", "0"])
    assert rc == 2


def test_sim_command_no_cap(tmp_path, config_file):
    out = tmp_path / "out"
    rc = main(["sim", "--config", str(config_file), "--fault-angle", "0", "--no-cap",
               "--r-load", "49", "--duration", "0.05", "--out", str(out), "--no-figures"])
    assert rc == 0
    report = json.loads((out / "sim_report.json").read_text())
    assert report["peak_A"] == pytest.approx(33.8, rel=0.05)


def test_validate_self_check(tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["validate", "--no-sim", "--self-check", "--out", str(out), "--no-figures"])
    assert rc == 0
    report = json.loads((out / "validation_report.json").read_text())
    assert report["passed"] is True
    assert all(r["error_percent"] == 0.0 for r in report["rows"])


def test_validate_model_rows(tmp_path):
    out = tmp_path / "out"
    rc = main(["validate", "--no-sim", "--out", str(out), "--no-figures"])
    assert rc == 0
    report = json.loads((out / "validation_report.json").read_text())
    rows = {r["name"]: r for r in report["rows"]}
    ji_par = rows["J_I at 104 ms, parallel (A^2 s)"]
    assert ji_par["model_value"] == pytest.approx(137.70, rel=0.02)
    assert ji_par["error_percent"] == pytest.approx(-1.47, abs=0.35)
    peak_par = rows["peak current, parallel (A)"]
    assert peak_par["error_percent"] == pytest.approx(2.44, abs=0.1)
    fuse_energy = rows["fuse melting energy (J)"]
    assert fuse_energy["gated"] is False
    assert "inconsisten" in fuse_energy["note"]
    gated = [r for r in report["rows"] if r["gated"]]
    assert gated and all(abs(r["error_percent"]) <= 5.0 for r in gated)


def test_validation_report_with_simulator(ref_parallel, ref_series):
    report = build_validation_report(ref_parallel, ref_series, with_sim=True, fault_angle=0.0)
    names = [r.name for r in report.rows]
    assert any("sim" in n for n in names)
    assert report.passed
    sim_rows = [r for r in report.rows if "sim" in r.name]
    assert all(not r.gated for r in sim_rows)
    peak_rows = [r for r in sim_rows if "peak" in r.name]
    assert all(abs(r.error_percent) <= 5.0 for r in peak_rows)


def test_fuse_design_command(tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["fuse", "design", "--energy", "10", "--ji-max", "40", "--kv", "12",
               "--length-mm", "165", "--out", str(out)])
    assert rc == 0
    design = json.loads((out / "fuse_design.json").read_text())
    assert design["diameter_m"] == pytest.approx(0.136e-3, rel=0.10)
    assert design["melting_energy_J"] == pytest.approx(10.0, rel=1e-9)
    assert design["melting_ji_A2s"] <= 40.0


def test_fuse_design_infeasible(capsys):
    rc = main(["fuse", "design", "--energy", "0", "--ji-max", "40"])
    assert rc == 2
    assert "infeasible" in capsys.readouterr().err


def test_fuse_simulate_command(tmp_path, capsys):
    profile = tmp_path / "profile.csv"
    t = np.linspace(0.0, 0.15, 400)
    with open(profile, "w") as fh:
        fh.write("t_s,i_A\n")
        for tv in t:
            fh.write(f"{tv},13.7\n")
    out = tmp_path / "out"
    rc = main(["fuse", "simulate", "--profile", str(profile), "--diameter-mm", "0.136",
               "--length-mm", "165", "--out", str(out), "--no-figures"])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "melts" in printed
    rows = _read_csv(out / "fuse_trace.csv")
    assert rows[0] == ["t_s", "temp_C", "res_ohm", "ji_A2s", "energy_J"]
    last = [float(x) for x in rows[-1]]
    assert last[3] == pytest.approx(16.19, rel=0.02)  # melt Joules integral


def test_calibrate_single_point(tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"x_r_trx": [7.5], "r_load": [49.0]}))
    out = tmp_path / "out"
    rc = main(["calibrate", "--grid", str(grid), "--skip-tp", "--out", str(out),
               "--no-figures"])
    assert rc == 0
    table = _read_csv(out / "kc_table.csv")
    assert table[0][:4] == ["x_r_trx", "x_r_system", "k_c_solved", "residual_delta_ji_percent"]
    assert len(table) == 3  # header plus one sample per topology
    assert not (out / "kc_polynomial.json").exists()


def test_calibrate_small_grid(tmp_path, capsys):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({
        "x_r_trx": [5.0],
        "r_load": [5.0, 15.0, 45.0, 135.0, 300.0],
        "t_p": [9.4e-3],
    }))
    out = tmp_path / "out"
    rc = main(["calibrate", "--grid", str(grid), "--skip-tp", "--compare-reference",
               "--out", str(out), "--no-figures"])
    assert rc == 0
    poly = json.loads((out / "kc_polynomial.json").read_text())
    assert set(poly) == {"coeffs", "r2"}
    assert len(poly["coeffs"]) == 5
    assert 0.9 <= poly["r2"] <= 1.0
    assert (out / "corrected_parallel.csv").exists()
    assert (out / "corrected_series.csv").exists()
    assert (out / "uncorrected.csv").exists()
    printed = capsys.readouterr().out
    assert "built-in quartic" in printed


def test_figures_rendered(tmp_path, config_file):
    out = tmp_path / "out"
    rc = main(["model", "--config", str(config_file), "--until", "0.02", "--out", str(out)])
    assert rc == 0
    assert (out / "model_current.png").stat().st_size > 1000
