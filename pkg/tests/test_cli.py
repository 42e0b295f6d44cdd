import json
import subprocess
import sys

from mgsim.cli import EXIT_ABORT, EXIT_INVALID, EXIT_OK, EXIT_ORDER, main
from _builders import SHIPPED


def test_validate_ok(capsys):
    assert main(["validate", "--scenario", str(SHIPPED["case1"])]) == EXIT_OK
    assert "ok: case1" in capsys.readouterr().out


def test_validate_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(SHIPPED["case1"].read_text().replace("t2 = 0.05", "t2 = 0.07"))
    assert main(["validate", "--scenario", str(bad)]) == EXIT_INVALID
    assert "t2" in capsys.readouterr().err


def test_run_writes_outputs(tmp_path):
    code = main(["run", "--scenario", str(SHIPPED["case2"]), "--out", str(tmp_path), "--duration", "0.2"])
    assert code == EXIT_OK
    s = json.loads((tmp_path / "case2.json").read_text())
    assert s["rows"] == 200 and s["case"] == "case2"
    assert (tmp_path / "case2.csv").exists()


def test_run_numerical_abort_exit_code(tmp_path, capsys):
    code = main(["run", "--scenario", str(SHIPPED["case1"]), "--out", str(tmp_path), "--duration", "1",
                 "--dt", "1e-3"])
    assert code == EXIT_ABORT
    assert "non-finite" in capsys.readouterr().err


def test_compare_identical_summaries_fails_ordering(tmp_path):
    main(["run", "--scenario", str(SHIPPED["case1"]), "--out", str(tmp_path), "--duration", "0.1", "--no-csv"])
    p = str(tmp_path / "case1.json")
    assert main(["compare", "--out", str(tmp_path), p, p, p, p]) == EXIT_ORDER
    assert json.loads((tmp_path / "compare.json").read_text())["passed"] is False


def test_compare_wrong_count_is_invalid(tmp_path):
    main(["run", "--scenario", str(SHIPPED["case1"]), "--out", str(tmp_path), "--duration", "0.1", "--no-csv"])
    p = str(tmp_path / "case1.json")
    assert main(["compare", p, p]) == EXIT_INVALID


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "mgsim", "validate", "--scenario", "case3"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "case3" in out.stdout
