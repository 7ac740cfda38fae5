import json
import subprocess
import sys
from pathlib import Path

import pytest

from coorbit_kit.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(p)


@pytest.mark.parametrize("cfg,code", [
    ({"kind": "one_parameter", "matrix": [[1, 0], [0, 1]]}, 0),
    ({"kind": "diag2param", "alpha": 1, "beta": 1}, 1),
    ({"kind": "diag2param", "alpha": 0, "beta": 1}, 0),
    ({"kind": "cyclic", "matrix": [[2, 0], [0, 3]]}, 0),
    ({"kind": "one_parameter", "matrix": [[1, 0], [0, -1]]}, 1),
    ({"kind": "mystery"}, 2),
])
def test_check_group_exit_codes(tmp_path, cfg, code):
    out = tmp_path / "out"
    assert main(["check-group", "--config", write(tmp_path, cfg), "--out", str(out)]) == code
    if code != 2:
        man = json.loads((out / "manifest.json").read_text())
        assert man["pass"] is (code == 0)
        assert "versions" in man and "seed" in man


def test_check_group_reports_probe_evidence(tmp_path):
    out = tmp_path / "o"
    main(["check-group", "--config", write(tmp_path, {"kind": "similitude", "dim": 1}), "--out", str(out)])
    ev = json.loads((out / "manifest.json").read_text())["results"]["evidence"]
    assert ev["transporter"]["bounded"] and ev["orbit_cover"]["covered_fraction"] == 1.0


@pytest.mark.parametrize("text", ["{bad", "[1, 2]"])
def test_malformed_config_exit_2(tmp_path, text):
    assert main(["check-group", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == 2


def test_usage_errors_exit_2(tmp_path):
    assert main(["nonsense", "--config", "x.json"]) == 2
    assert main(["bapu"]) == 2
    assert main(["bapu", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["pipeline", "--config", write(tmp_path, {"stage": "nope"}), "--out", str(tmp_path)]) == 2
    bad = {"stage": "coorbit-norm", "norm": {"p": "huge"}, "samples": {"n": 64}}
    assert main(["pipeline", "--config", write(tmp_path, bad), "--out", str(tmp_path)]) == 2
    assert main(["bapu", "--config", write(tmp_path, {}), "--threads", "0", "--out", str(tmp_path)]) == 2


def test_missing_signal_file_exit_2(tmp_path):
    cfg = {"stage": "coorbit-norm", "samples": {"n": 64}, "signals": {"files": ["nothere.bin"]}}
    assert main(["pipeline", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 2


def test_stage_failure_exit_1(tmp_path):
    cfg = {"stage": "bapu", "window": {"C": {"kind": "annulus", "r_inner": 1, "r_outer": 30}, "margin": 0.2}}
    out = tmp_path / "o"
    assert main(["pipeline", "--config", write(tmp_path, cfg), "--out", str(out)]) == 1
    assert "error" in json.loads((out / "manifest.json").read_text())


def test_bapu_stage(tmp_path):
    out = tmp_path / "o"
    assert main(["pipeline", "--config", str(CONFIGS / "bapu_1d.json"), "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["checks"]["partition_defect"] and man["tolerances"]["partition_defect"] == 1e-3
    assert (out / "bapu" / "bapu.json").exists()


def test_quasinorm_stage(tmp_path):
    out = tmp_path / "o"
    assert main(["pipeline", "--config", str(CONFIGS / "quasinorm_2d.json"), "--out", str(out)]) == 0
    rep = json.loads((out / "equivalence.json").read_text())
    assert rep["verdict"] == "not equivalent (empirical)"
    flipped = {"stage": "quasinorm-equiv", "A1": [[2, 0], [0, 2]], "A2": [[2, 0], [0, 4]], "expect": "equivalent"}
    assert main(["pipeline", "--config", write(tmp_path, flipped), "--out", str(out)]) == 1


def test_besov_stage_and_determinism(tmp_path):
    cfg = json.loads((CONFIGS / "besov_1d.json").read_text())
    cfg["signals"]["n"] = 4
    p = write(tmp_path, cfg)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["besov-norm", "--config", p, "--out", str(a), "--seed", "3"]) == 0
    assert main(["besov-norm", "--config", p, "--out", str(b), "--seed", "3", "--threads", "3"]) == 0
    assert (a / "besov_norms.csv").read_text() == (b / "besov_norms.csv").read_text()
    assert (a / "besov_norms.csv").read_text().startswith("# A:")


def test_coorbit_and_decomposition_stages(tmp_path):
    base = {"grid": {"N": [512], "spacing": [0.03125]}, "samples": {"n": 512}, "signals": {"n": 3}}
    assert main(["coorbit-norm", "--config", write(tmp_path, base), "--out", str(tmp_path / "c")]) == 0
    man = json.loads((tmp_path / "c" / "manifest.json").read_text())
    assert man["results"]["max_isometry_error"] < 1e-2
    assert main(["decomp-norm", "--config", write(tmp_path, base), "--out", str(tmp_path / "d")]) == 0
    assert main(["cwt", "--config", write(tmp_path, base), "--out", str(tmp_path / "w")]) == 0
    assert len(list((tmp_path / "w").glob("cwt_*.bin"))) == 3


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "coorbit_kit.cli", "check-group", "--config",
                        str(CONFIGS / "group_diag2param_11.json"), "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 1
    assert json.loads(r.stdout)["verdict"] is False
