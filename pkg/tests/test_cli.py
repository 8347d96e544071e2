import csv
import io
import json
import math
import subprocess
import sys

import pytest

from parisruin import CL_DEFAULT
from parisruin.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(out):
    return list(csv.DictReader(line for line in io.StringIO(out) if not line.startswith("#")))


def test_psi_and_phi(capsys):
    code, out, _ = run(capsys, "psi", "--lam", "0.5", "2")
    assert code == 0
    rows = table(out)
    assert float(rows[1]["psi"]) == pytest.approx(CL_DEFAULT.psi(2.0), rel=1e-10)
    code, out, _ = run(capsys, "phi", "--q", "0.1", "--format", "json")
    doc = json.loads(out)
    assert doc["metadata"]["command"] == "phi"
    assert doc["rows"][0]["phi"] == pytest.approx(CL_DEFAULT.phi(0.1), rel=1e-10)


def test_exit_at_barrier_is_one(capsys):
    code, out, _ = run(capsys, "parisian", "exit", "--x", "3", "--b", "3", "--q", "0.1", "--r", "1")
    assert code == 0
    assert float(table(out)[0]["value"]) == 1.0


def test_inf_and_phi_flags(capsys):
    code, out, _ = run(capsys, "parisian", "potential", "--x", "1", "--b", "inf", "--q", "0.1",
                       "--lam", "phi", "--r", "1")
    assert code == 0
    assert math.isinf(float(table(out)[0]["value"]))


def test_domain_error_reports_class(capsys):
    code, _, err = run(capsys, "parisian", "exit", "--x", "4", "--b", "3", "--q", "0.1", "--r", "1")
    assert code == 1
    assert err.startswith("error: DomainError")


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["parisian"])
    assert exc.value.code != 0
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2


def test_bad_config_is_value_error(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"sim": {"paths": 3}}))
    code, _, err = run(capsys, "psi", "--config", str(path))
    assert code == 2 and "unknown keys" in err


def test_config_with_flag_override(capsys, tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"model": {"preset": "bm-default"},
                                "query": {"x": [1.0], "b": [3.0], "q": [0.1], "r": [1.0]}}))
    code, out, _ = run(capsys, "parisian", "exit", "--config", str(path), "--x", "2")
    assert code == 0
    rows = table(out)
    assert len(rows) == 1 and float(rows[0]["x"]) == 2.0
    assert json.loads(out.splitlines()[0][len("# metadata: "):])["model"]["sigma"] == 1.0


def test_value_command(capsys):
    code, out, _ = run(capsys, "value", "--x", "1", "--b", "3", "--q", "0.1", "--r", "1", "--f-at-b", "1")
    exit_code, exit_out, _ = run(capsys, "parisian", "exit", "--x", "1", "--b", "3", "--q", "0.1", "--r", "1")
    assert code == 0
    assert table(out)[0]["value"] == table(exit_out)[0]["value"]


def test_simulate_command(capsys):
    code, out, _ = run(capsys, "simulate", "--x", "3", "--b", "3", "--r", "1", "--n-paths", "1e3",
                       "--estimand", "exit:0.1", "ruin")
    assert code == 0
    rows = {r["estimand"]: r for r in table(out)}
    assert float(rows["exit[q=0.1]"]["mean"]) == 1.0
    assert float(rows["ruin"]["mean"]) == 0.0
    code, _, err = run(capsys, "simulate", "--estimand", "bogus")
    assert code == 2


def test_selftest_command(capsys):
    code, out, _ = run(capsys, "selftest", "--model", "bm-default")
    assert code == 0
    assert all(r["passed"] == "true" for r in table(out))


def test_compare_config_grid_is_deterministic(tmp_path):
    cfg = tmp_path / "grid.json"
    cfg.write_text(json.dumps({"query": {"x": [1.0], "b": [3.0], "q": [0.1], "lam": [0.5], "r": [1.0]},
                               "sim": {"n_paths": 20000, "seed": 5}}))
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.csv"
        proc = subprocess.run([sys.executable, "-m", "parisruin", "compare", "parisian-joint", "parisian-exit",
                               "--grid", "config", "--config", str(cfg), "--out", str(path)],
                              capture_output=True, text=True)
        assert proc.returncode in (0, 1)
        assert "rows within tolerance" in proc.stderr
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    rows = table(outs[0].decode())
    assert {r["target"] for r in rows} == {"parisian-joint", "parisian-exit"}
