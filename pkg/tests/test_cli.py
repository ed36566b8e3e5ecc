import io
import json
import math
import subprocess
import sys
import time

import pytest

from narrowescape.cli import CSV_COLUMNS, CSV_VERSION, run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_escape_example():
    code, out, _ = call("escape", "--eps", "0.01", "--center", "0", "--at", "0,0")
    assert code == 0
    doc = json.loads(out)
    assert doc["u"] == pytest.approx(5.548317, abs=1e-6)
    assert doc["run"]["config"] == {"arcs": [{"center": 0.0, "half_length": 0.01}]}
    assert doc["run"]["potential"]["type"] == "none"
    assert doc["remainder"] == "O(eps)"


def test_escape_guard_exits_one():
    code, out, err = call("escape", "--eps", "0.01", "--center", "0", "--at", "0.995,0")
    assert code == 1
    assert out == ""
    assert "TooCloseToArc" in err


@pytest.mark.parametrize("argv", [
    ["escape", "--eps", "0.01", "--bogus", "1"],
    ["escape"],
    ["frobnicate"],
    ["escape", "--eps", "0.01", "--at", "0,0,0"],
    ["alpha"],
    ["alpha", "--d", "1.5"],
    ["escape", "--eps", "-0.1"],
])
def test_usage_errors(argv):
    assert call(*argv)[0] == 1


def test_alpha_example():
    code, out, _ = call("alpha", "--d", "10")
    assert code == 0
    alphas = json.loads(out)["alphas"]
    assert len(alphas) == 2
    assert alphas[0] == alphas[1]
    assert alphas[0] == pytest.approx(0.62, rel=0.15)
    assert alphas[0] == pytest.approx(1 / math.log(5), abs=1e-8)


def test_nine_significant_digits():
    doc = json.loads(call("alpha", "--d", "10")[1])
    assert repr(doc["alphas"][0]) == "0.621334935"


def test_clustered_pair_reports_both_expansions():
    code, out, _ = call("escape", "--eps", "1e-4", "--d", "50")
    doc = json.loads(out)
    assert code == 0
    assert doc["u"] == doc["u_clustered"]
    assert doc["u_clustered"] == pytest.approx(doc["u_separated"], rel=0.02)


def test_config_file_with_potential(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"arcs": [{"center": 0.0, "half_length": 0.01}],
                                "potential": {"type": "linear", "coeffs": [1.0, 0.0]}}))
    code, out, _ = call("escape", "--config", str(path))
    doc = json.loads(out)
    assert code == 0
    assert doc["corrector_pending"] is True
    assert doc["u"] == pytest.approx(0.4158208 * math.log(200), rel=1e-6)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"arcs": [{"center": 0.0}]}))
    assert call("escape", "--config", str(bad))[0] == 1


def test_flux_and_eigen():
    doc = json.loads(call("flux", "--eps", "0.01")[1])
    assert doc["fluxes"][0]["amplitude"] == -1.0
    assert doc["total_mass"] == pytest.approx(-math.pi)
    doc = json.loads(call("eigen", "--j0", "1", "--eps", "0.01", "--order", "1")[1])
    assert doc == {"run": {"command": "eigen", "j0": 1, "eps": 0.01, "center": 0.0},
                   "lambda0": 0.0, "shift": 0.217147241, "order": 1}
    assert call("eigen", "--j0", "2", "--eps", "0.01")[0] == 1


def test_csv_format_and_out_file(tmp_path):
    code, out, _ = call("escape", "--eps", "0.01", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# run: ")
    assert lines[1] == "key,value"
    assert "u,5.54831737" in lines
    target = tmp_path / "out.json"
    assert call("escape", "--eps", "0.01", "--out", str(target))[1] == ""
    assert json.loads(target.read_text())["u"] == pytest.approx(5.548317, abs=1e-6)


def test_output_is_byte_identical():
    argv = ["mc", "--eps", "0.1", "--h", "1e-4", "--trials", "1000", "--seed", "5"]
    first, second = call(*argv)[1], call(*argv)[1]
    assert first == second
    assert json.loads(first)["run"]["seed"] == 5


def test_validate_quick(tmp_path):
    target = tmp_path / "v.csv"
    start = time.perf_counter()
    code = subprocess.run([sys.executable, "-m", "narrowescape.cli", "validate", "--quick",
                           "--out", str(target)], capture_output=True).returncode
    elapsed = time.perf_counter() - start
    assert elapsed < 300
    text = target.read_text().splitlines()
    assert text[0] == f"# {CSV_VERSION}"
    config = json.loads(text[1].split(": ", 1)[1])
    assert config["h"] == 1e-4 and config["trials"] == 1000
    assert text[2] == ",".join(CSV_COLUMNS)
    cases = [line.split(",")[0] for line in text[3:] if not line.startswith("#")]
    assert cases == ["single", "single", "single", "antipodal", "cluster_d10", "eigen_j1"]
    assert code == 0
    assert not any(line.startswith("# breach") for line in text)


def test_validate_breach_exits_two(monkeypatch):
    from narrowescape import cli

    monkeypatch.setattr(cli, "validation_rows", lambda *a: ([{"case": "single", "eps": 0.1}], ["forced"]))
    code, out, _ = call("validate", "--quick")
    assert code == 2
    assert out.splitlines()[-1] == "# breach: forced"
