import json
import subprocess
import sys

import pytest

from alphap.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_field_info(capsys):
    code, out, _ = run(["field", "info", "--d", "-3"], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["field_d"] == -3


def test_bad_field_exit_3(capsys):
    code, _, err = run(["field", "info", "--d", "-5"], capsys)
    assert code == 3 and "NotClassNumberOne" in err


def test_unknown_command_exit_3():
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 3


def test_perron_equal_arguments_exit_3(capsys):
    code, _, _ = run(["smooth", "perron", "--params", "gamma=1", "rho=1", "T=10"], capsys)
    assert code == 3


@pytest.mark.parametrize("which", ["poisson", "theta", "perron", "sawtooth"])
def test_smooth_commands(which, capsys):
    code, out, _ = run(["smooth", which], capsys)
    assert code == 0
    assert json.loads(out)


@pytest.mark.parametrize("which", ["lin", "avg", "bilinear", "verify"])
def test_expsum_commands(which, capsys):
    args = ["x=0", "y=1000"] if which == "lin" else ["x=1024"]
    code, out, _ = run(["expsum", which, "--params", *args], capsys)
    assert code == 0
    assert json.loads(out)


def test_primes_sieve_csv(tmp_path, capsys):
    path = tmp_path / "p.csv"
    code, _, _ = run(["primes", "sieve", "--d", "-1", "--xmax", "30", "--format", "csv", "--out", str(path)], capsys)
    assert code == 0
    lines = path.read_text().splitlines()
    assert len(lines) == 11


def test_out_selects_format(capsys):
    code, out, _ = run(["primes", "sieve", "--x", "30", "--out", "csv"], capsys)
    assert code == 0 and out.splitlines()[0].count(",") == 2


def test_dioph_gintner(capsys):
    code, out, _ = run(["dioph", "gintner", "--alpha", "sqrt2_sqrt3", "--qmax", "2"], capsys)
    assert code == 0
    found = {(r["a"], r["q"]) for r in json.loads(out)["approximations"]}
    assert ("0 3", "1 1") in found


def test_sieve_check(capsys):
    code, out, _ = run(["sieve", "check", "--x", "1024", "--mu", "0.3", "--kappa", "0.5", "--seed", "4"], capsys)
    assert code == 0
    assert json.loads(out)


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# landau run\nd = -7\nx = 5000\n")
    code, out, _ = run(["experiment", "landau", "--config", str(cfg)], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["field_d"] == -7 and data["params"]["x"] == 5000
    code, out, _ = run(["experiment", "landau", "--config", str(cfg), "--d", "-2"], capsys)
    assert json.loads(out)["field_d"] == -2


def test_lin_precondition_exit_3(capsys):
    code, _, _ = run(["expsum", "lin", "--params", "x=1024", "y=1000"], capsys)
    assert code == 3


def test_bad_param_value(capsys):
    code, _, _ = run(["experiment", "landau", "--x", "ten"], capsys)
    assert code == 3


def test_threads_accepted(capsys):
    code, _, _ = run(["experiment", "landau", "--x", "1000", "--threads", "4"], capsys)
    assert code == 0


def test_timing_flag(capsys):
    _, out, _ = run(["experiment", "landau", "--x", "1000"], capsys)
    assert "runtime_seconds" not in json.loads(out)
    _, out, _ = run(["experiment", "landau", "--x", "1000", "--timing"], capsys)
    assert "runtime_seconds" in json.loads(out)


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "alphap.cli", "experiment", "landau", "--x", "1000"],
                         capture_output=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["counts"]["prime_ideal_count"] == 167


def test_byte_identical_reruns(tmp_path):
    argv = ["experiment", "search", "--d", "-3", "--alpha", "e_pi", "--x-max", "20000", "--seed", "9"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
