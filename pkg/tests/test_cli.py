import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from conftest import CONFIGS, problem, spectrum_of, system_of
from slep.cli import (
    EXIT_INVALID,
    EXIT_NOT_BASIS,
    EXIT_OK,
    PRESETS,
    emit_plot_data,
    main,
    omega_samples,
    preset_shifts,
)
from slep.errors import NoData

EX1 = str(CONFIGS / "example1.json")
EX2 = str(CONFIGS / "example2.json")


def _files(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(Path(root).rglob("*")) if p.is_file()}


def test_report_example1(tmp_path, capsys):
    assert main(["report", "--config", EX1, "--N", "10", "--removed", "1", "--out", str(tmp_path)]) == EXIT_OK
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert float(summary["constants"]["pairing_second"]["value"]) == pytest.approx(1 / 45, abs=1e-8)
    assert summary["constants"]["pairing_second"]["module"] == "innerproducts"
    assert float(summary["A_values"]["sharp_first"]["value"]) == pytest.approx(-1 / 42, abs=1e-8)
    row = next(v for v in summary["verdicts"] if v["removed_index"] == 1)
    assert row["verdict"] == "basis"
    assert summary["identities"]["passed"] == summary["identities"]["checked"]
    for name in ("spectrum.csv", "identities.csv", "verdicts.csv", "verdicts.json", "biortho_l1.csv", "plot_chain.csv", "plot_omega.csv", "summary.txt"):
        assert (tmp_path / name).exists(), name
    printed = json.loads(capsys.readouterr().out)
    assert printed["case"] == "iii"


def test_basis_threshold_exit_code(tmp_path, capsys):
    args = ["basis", "--config", EX1, "--removed", "1", "--shift-C", "0.0714285714", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["verdict"] == "not_basis"
    assert main(args + ["--expect-basis"]) == EXIT_NOT_BASIS


def test_spectrum_example2(tmp_path, capsys):
    assert main(["spectrum", "--config", EX2, "--N", "6", "--out", str(tmp_path)]) == EXIT_OK
    first = json.loads(capsys.readouterr().out)["records"][0]
    assert first["multiplicity"] == 3 and first["criticality"] == "critical"
    assert abs(float(first["lambda"])) < 1e-10


def test_invalid_inputs(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"a": 1, "b": 0, "c": 1, "d": 1}))
    assert main(["spectrum", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_INVALID
    assert "DeterminantSign" in capsys.readouterr().err
    assert main(["spectrum", "--config", EX1, "--N", "3", "--out", str(tmp_path)]) == EXIT_INVALID
    assert main(["basis", "--config", EX1, "--out", str(tmp_path)]) == EXIT_INVALID
    assert main(["spectrum", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == EXIT_INVALID
    assert main(["spectrum", "--config", EX1, "--formats", "xml", "--out", str(tmp_path)]) == EXIT_INVALID
    with pytest.raises(SystemExit) as err:
        main(["spectrum", "--config", EX1, "--preset", "example1"])
    assert err.value.code == 2


def test_removed_out_of_range_is_invalid(tmp_path):
    assert main(["basis", "--config", EX1, "--N", "6", "--removed", "6", "--out", str(tmp_path)]) == EXIT_INVALID


def test_report_is_deterministic(tmp_path):
    args = ["report", "--config", EX2, "--N", "8", "--removed", "0"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    assert _files(tmp_path / "a") == _files(tmp_path / "b")


def test_manifest_checksums(tmp_path):
    main(["verify", "--config", EX1, "--N", "6", "--out", str(tmp_path)])
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["artifacts"]
    for entry in manifest["artifacts"]:
        data = (tmp_path / entry["path"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == entry["sha256"]


def test_chains_command_layout(tmp_path):
    assert main(["chains", "--config", EX1, "--N", "5", "--out", str(tmp_path)]) == EXIT_OK
    names = {p.name for p in (tmp_path / "chains").iterdir()}
    assert {"chain_0_member0.csv", "chain_0_member2.csv", "chain_0.json", "chain_3_member0.csv"} <= names


def test_biortho_command(tmp_path, capsys):
    assert main(["biortho", "--preset", "example2", "--N", "10", "--removed", "2", "--out", str(tmp_path)]) == EXIT_OK
    result = json.loads(capsys.readouterr().out)
    assert result["verdict"] == "basis" and result["max_deviation"] < 1e-6
    side = json.loads((tmp_path / "biortho_l2.json").read_text())
    assert side["pivot"] == "y_k"


def test_preset_mapping(tmp_path, capsys):
    assert preset_shifts("example1", 0.5, 0.25) == (0.5, 0.25)
    assert preset_shifts("example2", 0.5, 0.25) == (-0.5, -0.25)
    assert PRESETS["example2"]["problem"]["scale"] == pytest.approx(2**0.5)
    # the Example 2 threshold in its reference convention, C = -23/324
    args = ["basis", "--preset", "example2", "--removed", "1", "--shift-C", repr(-23 / 324), "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["verdict"] == "not_basis"


def test_plot_chain(tmp_path):
    spec, system = system_of("example1")
    path = emit_plot_data(system.distinguished_chain(), tmp_path / "c.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "x,member0,member1,member2"
    assert len(lines) == 1026


def test_plot_omega_brackets_roots(tmp_path):
    spec = problem("example1")
    samples = omega_samples(spec, -5.0, 200.0, 2048)
    path = emit_plot_data(samples, tmp_path / "w.csv")
    assert len(path.read_text().splitlines()) == 2049
    flips = np.nonzero(np.sign(samples.values[:-1]) * np.sign(samples.values[1:]) < 0)[0]
    brackets = [(samples.lams[i], samples.lams[i + 1]) for i in flips]
    simple = [float(r.lam) for r in spectrum_of("example1").records if r.multiplicity == 1 and r.lam < 200]
    for lam in simple:
        assert any(lo <= lam <= hi for lo, hi in brackets), lam


def test_plot_no_data(tmp_path):
    with pytest.raises(NoData):
        emit_plot_data(None, tmp_path / "x.csv")
    with pytest.raises(NoData):
        emit_plot_data(omega_samples(problem("example1"), 0.0, 1.0, 0), tmp_path / "x.csv")
    with pytest.raises(NoData):
        emit_plot_data(object(), tmp_path / "x.csv")


def test_potential_config_runs(tmp_path, capsys):
    cfg = str(CONFIGS / "potential.json")
    assert main(["verify", "--config", cfg, "--N", "6", "--out", str(tmp_path)]) == EXIT_OK
    result = json.loads(capsys.readouterr().out)
    assert result["passed"] == result["checked"] > 0
