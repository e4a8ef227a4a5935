from __future__ import annotations

import json
from pathlib import Path

import pytest

from bubblechain.cli import main
from bubblechain.config import ScenarioConfig, load_config
from bubblechain.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

BREAKING = """
scenario = "breaking"
seed = 11

[model]
sector = "ONE"
x = 1.0
g_par2 = 2.0
g_perp2 = 0.8

[initial_state]
preset = "PLUS"

[time_grid]
start = 0.0
stop = 2.0
num = 9

[output]
aggregate = [["413", "423"]]

[sampling]
shots = 500
"""


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_validate_ok(tmp_path, capsys):
    assert main(["validate", str(write(tmp_path, BREAKING))]) == 0
    assert "scenario=breaking" in capsys.readouterr().out


@pytest.mark.parametrize(
    "patch, message",
    [
        (("scenario = \"breaking\"", "scenario = \"nope\""), "scenario"),
        (("g_perp2 = 0.8", ""), "g_perp2"),
        (("preset = \"PLUS\"", "preset = \"S_HALF\""), "S_HALF"),
        (("num = 9", "num = 0"), "num"),
    ],
)
def test_validation_errors_exit_2(tmp_path, capsys, patch, message):
    cfg = write(tmp_path, BREAKING.replace(*patch))
    assert main(["validate", str(cfg)]) == 2
    assert message in capsys.readouterr().err


def test_numeric_guard_exit_3(tmp_path, monkeypatch):
    monkeypatch.setenv("BUBBLECHAIN_MAX_DIM", "64")
    assert main(["run", str(write(tmp_path, BREAKING)), "-o", str(tmp_path / "out")]) == 3


def test_coupling_aliases_need_explicit_map(tmp_path):
    text = BREAKING.replace("g_par2 = 2.0\ng_perp2 = 0.8", "[model.couplings]\ng_h2 = 2.8\ng_v2 = 2.0")
    with pytest.raises(ConfigError, match="coupling_map"):
        load_config(write(tmp_path, text))
    mapped = text + "\n[model.coupling_map]\nh = \"perp\"\nv = \"par\"\n"
    cfg = load_config(write(tmp_path, mapped, "m.toml"))
    assert (cfg.params.g_perp2, cfg.params.g_par2) == (2.8, 2.0)


def test_explicit_state_weights(tmp_path):
    text = BREAKING.replace('preset = "PLUS"', '[initial_state.states]\n"643" = 1.0\n"436" = [0.0, 1.0]')
    text = text.replace("[initial_state]\n", "")
    cfg = load_config(write(tmp_path, text))
    assert cfg.initial_weights == {"643": 1 + 0j, "436": 1j}


def test_config_roundtrip_through_dict(tmp_path):
    cfg = load_config(write(tmp_path, BREAKING))
    again = ScenarioConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again.to_dict() == cfg.to_dict()


def test_run_breaking_outputs(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(write(tmp_path, BREAKING)), "-o", str(out)]) == 0
    header = (out / "populations.csv").read_text().splitlines()[0].split(",")
    assert header[:3] == ["t", "exact:P_B", "trotter:P_B"]
    assert "exact:413+423" in header
    meta = json.loads((out / "run.json").read_text())
    assert meta["seed"] == 11 and meta["broken_state"] == "403"
    assert (out / "samples.csv").exists()


def test_sidecar_reruns_identically(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(write(tmp_path, BREAKING)), "-o", str(out1)]) == 0
    assert main(["run", str(out1 / "run.json"), "-o", str(out2)]) == 0
    for name in ("populations.csv", "samples.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_gatecount_command(tmp_path):
    out = tmp_path / "gc"
    assert main(["gatecount", str(CONFIGS / "gatecount.toml"), "-o", str(out)]) == 0
    text = (out / "gatecount.txt").read_text()
    for key in ("qubit_cnot_per_step = 544", "qubit_cnot_total = 1088", "native_entangling_target = 67",
                "overhead_factor"):
        assert key in text
    assert (out / "counts_vs_time.csv").read_text().startswith("t,native_entangling")


@pytest.mark.parametrize("name", ["fluctuations", "effective_compare", "full_populations"])
def test_shipped_configs_run(tmp_path, name):
    assert main(["run", str(CONFIGS / f"{name}.toml"), "-o", str(tmp_path / name)]) == 0


def test_fluctuations_has_three_column_families(tmp_path):
    out = tmp_path / "f"
    assert main(["run", str(CONFIGS / "fluctuations.toml"), "-o", str(out)]) == 0
    header = (out / "populations.csv").read_text().splitlines()[0]
    assert "exact:000" in header and "trotter:000" in header and "analytic:000" in header


def test_resonance_scan_parallel_equals_serial(tmp_path):
    cfg = CONFIGS / "resonance_scan.toml"
    a, b = tmp_path / "serial", tmp_path / "parallel"
    assert main(["run", str(cfg), "-o", str(a), "--jobs", "1"]) == 0
    assert main(["run", str(cfg), "-o", str(b), "--jobs", "3"]) == 0
    assert (a / "profile.csv").read_bytes() == (b / "profile.csv").read_bytes()
    rows = (a / "profile.csv").read_text().splitlines()[1:]
    assert len(rows) == 11
