import csv
import subprocess
import sys

import numpy as np
import pytest
import yaml

from foilfem.cli import main
from foilfem.config import bundled_configs, load_config, resolve_path


def small_config(**overrides):
    with open(resolve_path("standalone_scaled_50khz")) as fh:
        cfg = yaml.safe_load(fh)
    cfg.update(mesh={"nx": 16, "ny": 32}, oracle={"nx": 64, "ny": 32}, name="small")
    cfg["analysis"]["field_dump"] = False
    for k, v in overrides.items():
        if v is None:
            cfg.pop(k, None)
        else:
            cfg[k] = v
    return cfg


def write(tmp_path, cfg, name="c.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_list(capsys):
    assert main(["list"]) == 0
    assert set(capsys.readouterr().out.split()) == set(bundled_configs())


def test_every_bundled_config_parses():
    names = bundled_configs()
    assert len(names) == 6
    for n in names:
        assert load_config(n).name == n


def test_run_frequency_writes_solution_and_is_deterministic(tmp_path):
    path = write(tmp_path, small_config())
    assert main(["run", path, "--output-dir", str(tmp_path / "a")]) == 0
    assert main(["run", path, "--output-dir", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "solution.csv").read_bytes()
    assert a == (tmp_path / "b" / "solution.csv").read_bytes()
    row = read_csv(tmp_path / "a" / "solution.csv")[0]
    assert row["port"] == "winding" and int(row["N_u [1]"]) == 4
    assert float(row["Z_re [Ohm]"]) > 0 and float(row["W [J]"]) > 0
    assert float(row["weak_constraint_residual [1]"]) < 1e-10


def test_field_dump(tmp_path):
    cfg = small_config()
    cfg["analysis"]["field_dump"] = True
    assert main(["run", write(tmp_path, cfg), "--output-dir", str(tmp_path)]) == 0
    text = (tmp_path / "field.txt").read_text()
    assert "a_re[Wb/m]" in text


def test_oracle_command(tmp_path):
    path = write(tmp_path, small_config())
    assert main(["oracle", path, "--output-dir", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "oracle.csv")
    assert [r["model"] for r in rows] == ["resolved", "homogenized"]
    assert float(rows[1]["rel_error_W [1]"]) < 0.05


def test_study_command(tmp_path):
    cfg = small_config(mesh={"nx": 4, "ny": 8}, oracle=None)
    cfg["analysis"] = {"type": "study", "frequency": 5e4, "levels": [0, 1],
                       "kinds": ["legendre", "hat"], "counts": [1, 2],
                       "reference": {"type": "value", "value": 4.9e-7}}
    assert main(["study", write(tmp_path, cfg), "--output-dir", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "convergence.csv")
    assert len(rows) == 8 and {r["kind"] for r in rows} == {"legendre", "hat"}


def test_study_command_rejects_other_analyses(tmp_path, capsys):
    assert main(["study", write(tmp_path, small_config())]) == 2
    assert "analysis.type: study" in capsys.readouterr().err


def test_transient_command(tmp_path):
    with open(resolve_path("transformer_transient")) as fh:
        cfg = yaml.safe_load(fh)
    cfg["mesh"] = {"nx": 12, "ny": 16}
    cfg["analysis"].update(t_end=2e-3, dt=2.5e-4)
    assert main(["run", write(tmp_path, cfg), "--output-dir", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "timeseries.csv")
    assert len(rows) == 9
    assert list(rows[0])[:6] == ["t [s]", "V_s [V]", "V1 [V]", "V2 [V]", "I1 [A]", "I2 [A]"]
    assert max(float(r["kcl [1]"]) for r in rows) < 1e-10
    assert max(float(r["kvl [1]"]) for r in rows) < 1e-10


def test_negative_fill_factor_is_rejected(tmp_path, capsys):
    cfg = small_config()
    cfg["foils"][0]["fill_factor"] = -0.5
    assert main(["run", write(tmp_path, cfg)]) == 2
    assert "foils[0].fill_factor" in capsys.readouterr().err


@pytest.mark.parametrize("mutate,needle", [
    (lambda c: c.pop("mesh"), "mesh"),
    (lambda c: c["foils"][0].pop("turns"), "foils[0].turns"),
    (lambda c: c.update(meshh={"nx": 1}), "meshh"),
    (lambda c: c.update(dirichlet=["floor"]), "floor"),
    (lambda c: c["analysis"].update(type="eigen"), "analysis.type"),
    (lambda c: c["foils"][0].update(region="core"), "core"),
])
def test_invalid_configs_exit_2(tmp_path, capsys, mutate, needle):
    cfg = small_config()
    mutate(cfg)
    assert main(["run", write(tmp_path, cfg)]) == 2
    assert needle in capsys.readouterr().err


def test_yaml_syntax_error_reports_line(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("name: x\nmesh: {nx: 4\n")
    assert main(["run", str(p)]) == 2
    assert "line" in capsys.readouterr().err


def test_missing_gauge_exits_1(tmp_path, capsys):
    assert main(["run", write(tmp_path, small_config(dirichlet=[]))]) == 1
    assert "nullspace" in capsys.readouterr().err


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "foilfem", "list"], capture_output=True,
                         text=True, check=True)
    assert "standalone_50khz" in out.stdout
