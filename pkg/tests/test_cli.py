import csv
import io
import json
import time

import numpy as np
import pytest

from mesofluct import cli, entanglement, models


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    lines = text.splitlines()
    assert lines[0] == "# mesofluct v1"
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    return rows[0], rows[1:]


def column(header, rows, name):
    k = header.index(name)
    return np.array([float(r[k]) if r[k] else np.nan for r in rows])


def test_evolve_csv_layout(capsys):
    code, out, _ = run(capsys, "evolve", "--points", "11", "--tmax", "5")
    assert code == 0
    header, rows = read_csv(out)
    assert header == ["t", "E", "S", "I1", "I2", "I3", "I4", "lambda_min", "f_deficit"]
    assert len(rows) == 11
    assert np.allclose(column(header, rows, "t"), np.linspace(0, 5, 11))


def test_json_and_csv_carry_the_same_numbers(capsys):
    args = ["evolve", "--points", "7", "--temp", "0.2", "--variant", "one-mode", "--r", "1.5"]
    _, out_csv, _ = run(capsys, *args)
    _, out_json, _ = run(capsys, *args, "--format", "json")
    header, rows = read_csv(out_csv)
    doc = json.loads(out_json)
    assert doc["schema"] == "mesofluct v1"
    assert doc["columns"] == header
    assert np.array_equal(np.array(doc["rows"], dtype=float), np.array(rows, dtype=float))
    assert doc["config"]["variant"] == "one-mode"


def test_unsqueezed_initial_state_stays_separable(capsys):
    _, out, _ = run(capsys, "evolve", "--variant", "custom", "--r1", "0", "--r3", "0", "--points", "51")
    header, rows = read_csv(out)
    assert np.all(column(header, rows, "E") == 0.0)


def test_oracle_column_matches_pipeline(capsys):
    code, out, err = run(capsys, "evolve", "--oracle", "--points", "41", "--gamma", "0.3")
    assert code == 0
    header, rows = read_csv(out)
    assert header[-1] == "S_closed"
    assert np.max(np.abs(column(header, rows, "S") - column(header, rows, "S_closed"))) <= 1e-9
    assert "max|S - S_closed|" in err


def test_oracle_rejects_model2(capsys):
    code, _, err = run(capsys, "evolve", "--model", "2", "--oracle")
    assert code == 2
    assert "oracle" in err


def test_delayed_birth_then_death(capsys):
    _, out, _ = run(capsys, "evolve", "--points", "401", "--temp", "0.1", "--r", "1",
                    "--variant", "symmetric")
    header, rows = read_csv(out)
    t, E = column(header, rows, "t"), column(header, rows, "E")
    bd = entanglement.detect_birth_death(t, E)
    assert E[0] == 0.0
    assert 0.5 < bd.t_birth < 1.0
    assert 8.0 < bd.t_death < 9.0
    assert E[-1] == 0.0


def test_output_file_and_determinism(tmp_path, capsys):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert run(capsys, "evolve", "--points", "21", "--out", str(p))[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_config_file_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment line\ngamma = 0.2\ntemp = 0.3\npoints = 5\n")
    _, out, _ = run(capsys, "evolve", "--config", str(cfg), "--points", "3", "--format", "json")
    doc = json.loads(out)
    assert len(doc["rows"]) == 3
    assert doc["config"]["gamma"] == 0.2
    assert doc["config"]["temp"] == 0.3


def test_config_values_are_coerced_and_checked(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("r-range = 0:1:3\nwork_ers = 2\n")
    with pytest.raises(cli.ConfigError):
        cli.read_config_file(cfg)
    cfg.write_text("gamma = 0.1\ngamma = 0.2\n")
    with pytest.raises(cli.ConfigError):
        cli.read_config_file(cfg)
    cfg.write_text("r-range = 0:1:3\ntc_out = tc.csv\n")
    assert cli.read_config_file(cfg) == {"r_range": "0:1:3", "tc_out": "tc.csv"}


def test_temperature_and_beta_conflict(tmp_path, capsys):
    assert run(capsys, "evolve", "--temp", "0.1", "--beta", "10")[0] == 2
    cfg = tmp_path / "run.cfg"
    cfg.write_text("temp = 0.1\nbeta = 10\n")
    assert run(capsys, "evolve", "--config", str(cfg))[0] == 2


def test_command_line_beta_overrides_file_temperature(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("temp = 0.3\n")
    _, out, _ = run(capsys, "evolve", "--config", str(cfg), "--beta", "4", "--format", "json",
                    "--points", "2")
    doc = json.loads(out)
    assert doc["config"]["beta"] == 4.0
    assert "temp" not in doc["config"]


@pytest.mark.parametrize("argv", [
    ["evolve", "--gamma", "0.7"],
    ["evolve", "--model", "3"],
    ["evolve", "--points", "many"],
    ["evolve", "--variant", "custom", "--r1", "-1"],
    ["evolve", "--model", "2", "--beta", "inf"],
    ["sweep", "--r-range", "0:1:0", "--temp-range", "0.1,0.2"],
    ["sweep", "--temp-range", "0.1,0.2"],
    ["sweep", "--r-range", "1", "--temp-range", "0,0.2"],
    ["bogus"],
])
def test_configuration_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err


def test_numeric_contract_exit_3(capsys):
    code, _, err = run(capsys, "evolve", "--variant", "custom", "--r1", "17", "--r3", "0",
                       "--points", "5")
    assert code == 3
    assert "double precision" in err


def test_sweep_table_and_critical_temperatures(tmp_path, capsys):
    tc_path = tmp_path / "tc.csv"
    code, out, _ = run(capsys, "sweep", "--r-range", "0.5,1", "--temp-range", "0.05:0.6:3",
                       "--tc-out", str(tc_path), "--workers", "1", "--points", "128")
    assert code == 0
    header, rows = read_csv(out)
    assert header == ["r", "T", "max_E", "t_birth", "t_death", "entangled"]
    assert len(rows) == 6
    entangled = column(header, rows, "entangled")
    assert entangled[0] == 1 and entangled[2] == 0
    tc_header, tc_rows = read_csv(tc_path.read_text())
    assert tc_header == ["r", "T_C"]
    spec = models.ModelSpec.model1(1.0, 0.5, 1.0)
    expected = entanglement.closed_form_critical_temperature(spec, 1.0, "symmetric", (0.05, 0.6))
    assert float(tc_rows[1][1]) == pytest.approx(expected, rel=1e-12)


def test_sweep_over_xi_adds_column(capsys):
    code, out, _ = run(capsys, "sweep", "--model", "2", "--xi-range", "0,1", "--r-range", "1",
                       "--temp-range", "0.2", "--workers", "1", "--points", "64")
    assert code == 0
    header, rows = read_csv(out)
    assert header[0] == "xi"
    assert column(header, rows, "xi").tolist() == [0.0, 1.0]


def test_verify_fast_passes_quickly(capsys):
    start = time.perf_counter()
    code, out, _ = run(capsys, "verify", "--fast")
    assert time.perf_counter() - start < 5.0
    assert code == 0
    lines = [line for line in out.splitlines() if line.startswith(("PASS", "FAIL"))]
    assert len(lines) >= 25
    assert all(line.startswith("PASS") for line in lines)


def test_verify_detects_a_sign_flip(monkeypatch, capsys):
    original = models.closed_form_L

    def flipped(spec, eps):
        L = original(spec, eps).copy()
        L[0, 6] *= -1
        return L

    monkeypatch.setattr(models, "closed_form_L", flipped)
    code, out, err = run(capsys, "verify", "--fast")
    assert code == 1
    assert "FAIL" in out
    assert "model1.oracle_L" in err
