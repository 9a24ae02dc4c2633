import filecmp
import json
import shutil
from pathlib import Path

import pytest

from trapsync.cli import main
from tests.conftest import DATA


def run(*argv):
    return main(list(argv))


def test_validate_default_config(capsys):
    assert run("validate") == 0
    assert "configuration OK" in capsys.readouterr().out


def test_map_outputs_and_summary(tmp_path):
    out = tmp_path / "out"
    assert run("map", "--out", str(out)) == 0
    assert (out / "uncompensated_map.csv").exists()
    assert (out / "compensated_map.csv").exists()
    assert (out / "compensated_map.csv.meta.json").exists()
    summary = json.loads((out / "map_summary.json").read_text())
    assert summary["reduction_factor"] == pytest.approx(18.2, rel=0.5)
    assert summary["metadata"]["tool_version"]
    header = (out / "uncompensated_map.csv").read_text().splitlines()[:6]
    assert any("config_hash" in line for line in header)
    assert any("seed" in line for line in header)


def test_map_explicit_power(tmp_path):
    out = tmp_path / "out"
    assert run("map", "--out", str(out), "--compensation", "power=1e-9") == 0
    summary = json.loads((out / "map_summary.json").read_text())
    assert summary["compensation_power_w"] == 1e-9


def test_missing_scene_file_exits_2_without_outputs(tmp_path, capsys):
    cfg = tmp_path / "config.yaml"
    cfg.write_text(
        "species_file: rb85.yaml\nscene_file: nope.yaml\noutput_dir: "
        f"{tmp_path / 'out'}\nseed: 1\n"
    )
    assert run("map", "--config", str(cfg)) == 2
    assert not (tmp_path / "out").exists()
    assert "scene_file" in capsys.readouterr().err


def test_zero_trap_power_rejected(tmp_path):
    scene = (DATA / "scene_rb85_array.yaml").read_text()
    scene = scene.replace("power_w: 41.0e-3", "power_w: 0.0")
    (tmp_path / "scene.yaml").write_text(scene)
    shutil.copy(DATA / "rb85.yaml", tmp_path / "rb85.yaml")
    cfg = tmp_path / "config.yaml"
    cfg.write_text(
        "species_file: rb85.yaml\nscene_file: scene.yaml\n"
        f"output_dir: {tmp_path / 'out'}\nseed: 1\n"
    )
    assert run("optimize", "--config", str(cfg)) == 2


def test_unknown_site_label_exits_2(tmp_path, capsys):
    assert run("ramsey", "--out", str(tmp_path), "--sites", "z9") == 2
    assert "z9" in capsys.readouterr().err


def test_empty_site_list_exits_2(tmp_path):
    assert run("ramsey", "--out", str(tmp_path), "--sites", " ") == 2


def test_bad_compensation_flag_exits_2(tmp_path):
    assert run("map", "--out", str(tmp_path), "--compensation", "maybe") == 2


def test_optimize_report_contents(tmp_path):
    out = tmp_path / "out"
    assert run("optimize", "--out", str(out)) == 0
    report = json.loads((out / "optimize_report.json").read_text())
    assert {"eta_exact", "eta_approximate"} <= set(report)
    assert report["scattering"]["ratio"] == pytest.approx(1.0, abs=0.3)


def test_ramsey_single_site_and_determinism(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert run("ramsey", "--out", str(out), "--sites", "e5",
                   "--compensation", "off") == 0
    assert filecmp.cmp(out_a / "ramsey_e5_unc.csv", out_b / "ramsey_e5_unc.csv",
                       shallow=False)
    fits = json.loads((out_a / "ramsey_fits_unc.json").read_text())
    assert "e5" in fits["sites"]
    assert fits["sites"]["e5"]["t2_star_s"] > 0
    assert fits["sites"]["e5"]["extracted_shift_hz"] < 0


def test_ramsey_seed_changes_output(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run("ramsey", "--out", str(out_a), "--sites", "e5",
               "--compensation", "off", "--seed", "1") == 0
    assert run("ramsey", "--out", str(out_b), "--sites", "e5",
               "--compensation", "off", "--seed", "2") == 0
    assert not filecmp.cmp(out_a / "ramsey_e5_unc.csv", out_b / "ramsey_e5_unc.csv",
                           shallow=False)


def test_echo_single_site(tmp_path):
    out = tmp_path / "out"
    assert run("echo", "--out", str(out), "--sites", "e5") == 0
    fits = json.loads((out / "echo_fits_comp.json").read_text())
    assert fits["sites"]["e5"]["t2_prime_s"] > 0


def test_config_dir_env_var(tmp_path, monkeypatch, capsys):
    cfg_dir = tmp_path / "confdir"
    cfg_dir.mkdir()
    shutil.copy(DATA / "config.yaml", cfg_dir / "config.yaml")
    monkeypatch.setenv("TRAPSYNC_CONFIG_DIR", str(cfg_dir))
    assert run("validate") == 0
    assert "configuration OK" in capsys.readouterr().out


def test_fit_misalignment_cli(tmp_path):
    out = tmp_path / "out"
    assert run("map", "--out", str(out)) == 0
    assert run("fit-misalignment", str(out / "compensated_map.csv"),
               "--out", str(out)) == 0
    report = json.loads((out / "misalignment_report.json").read_text())
    assert report["displacement_um"][0] == pytest.approx(-8.0, abs=1.0)
    assert report["centered_prediction_hz"] == pytest.approx(1.7, rel=0.5)
