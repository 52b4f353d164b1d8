import subprocess
import sys

import numpy as np
import pytest

from adarpr import cli
from adarpr.problems import write_ppm


def test_parse_seeds():
    assert cli.parse_seeds("0-3") == [0, 1, 2, 3]
    assert cli.parse_seeds("5,1,1,2-3") == [1, 2, 3, 5]
    for bad in ("", "3-1", "-2", "a"):
        with pytest.raises(ValueError):
            cli.parse_seeds(bad)


def test_selftest_exit_codes(monkeypatch, capsys):
    assert cli.main(["selftest"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 7 and "[FAIL]" not in out
    monkeypatch.setattr(cli, "selftest", lambda seed: False)
    assert cli.main(["selftest"]) == cli.EXIT_SELFTEST


def test_synthetic_writes_csv(tmp_path, capsys):
    out = tmp_path / "run"
    code = cli.main(["synthetic", "--n", "20", "--m-ratio", "8", "--seeds", "0-1",
                     "--algos", "adasubgrad,adaipl-lac", "--init", "warm:0.1",
                     "--eps", "1e-6", "--out", str(out)])
    assert code == 0
    assert (out / "traces.csv").read_text().startswith("seed,algo,k,F,rel_err,step,")
    assert "adaipl-lac" in (out / "summary.csv").read_text()
    assert "adasubgrad" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["synthetic", "--n", "0"],
    ["synthetic", "--pfail", "0.7"],
    ["synthetic", "--algos", "newton"],
    ["synthetic", "--init", "cold"],
    ["synthetic", "--eps", "-1"],
    ["synthetic", "--seeds", "9-1"],
    ["synthetic", "--jobs", "0"],
    ["image", "--ppm", "/nonexistent/file.ppm"],
])
def test_validation_errors_exit_1(argv, capsys):
    assert cli.main(argv) == cli.EXIT_INVALID
    assert "error" in capsys.readouterr().err


def test_usage_errors_exit_1():
    with pytest.raises(SystemExit) as exc:
        cli.main(["synthetic", "--bogus"])
    assert exc.value.code == cli.EXIT_INVALID
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == cli.EXIT_INVALID


def test_image_subcommand(tmp_path):
    img = np.random.default_rng(0).integers(0, 256, (4, 4, 3), dtype=np.uint8)
    path = tmp_path / "x.ppm"
    write_ppm(path, img)
    code = cli.main(["image", "--ppm", str(path), "--blocks", "6", "--seeds", "0",
                     "--algos", "adasubgrad", "--init", "warm:0.1", "--eps", "1e-6",
                     "--out", str(tmp_path / "o")])
    assert code == 0
    assert (tmp_path / "o" / "traces.csv").exists()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "adarpr", "selftest"], capture_output=True,
                          text=True, timeout=120)
    assert proc.returncode == 0
    assert "[PASS] hadamard ensemble L = 2" in proc.stdout
