import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from scipy.special import gamma

from fraccos.cli import SUBCOMMANDS, RunConfig, UsageError, load_generator, main

# E_{1.5,0.5}(-1)
SCALAR_ORACLE = -0.17329266435413843


def _write(path, data):
    path.write_text(json.dumps(data))
    return path


@pytest.fixture
def setup(tmp_path):
    def make(rows, **config):
        _write(tmp_path / "gen.json", {"dim": len(rows), "rows": rows})
        data = {"alpha": 1.5, "generator": "gen.json", "out": "out"}
        data.update(config)
        return _write(tmp_path / "config.json", data)

    return make


def _read_csv(path):
    with open(path, newline="") as inf:
        rows = list(csv.reader(inf))
    return rows[0], np.array([[float(v) for v in row] for row in rows[1:]])


# {{{ eval-ml


def test_eval_ml_exp(capsys):
    assert main(["eval-ml", "--alpha", "1", "--beta", "1", "--z", "1"]) == 0
    out = capsys.readouterr().out
    assert "2.71828182845904" in out
    assert "error estimate" in out


def test_eval_ml_cosine_zero(capsys):
    assert main(["eval-ml", "--alpha", "2", "--beta", "1", "--z", "-2.4674"]) == 0
    value = float(capsys.readouterr().out.split("=")[1].split()[0])
    assert abs(value) < 1e-5


def test_eval_ml_oracle(capsys):
    assert main(["eval-ml", "--alpha", "1.5", "--beta", "0.5", "--z", "-1"]) == 0
    value = float(capsys.readouterr().out.split("=")[1].split()[0])
    assert value == pytest.approx(SCALAR_ORACLE, abs=1e-15)


def test_eval_ml_divergence(capsys):
    assert main(["eval-ml", "--alpha", "1.5", "--z", "1e8"]) == 2
    assert "ml-divergence" in capsys.readouterr().err


# }}}


# {{{ configuration


def test_help_for_every_subcommand(capsys):
    assert main(["--help"]) == 0
    for cmd in SUBCOMMANDS:
        assert main([cmd, "--help"]) == 0
        assert "usage" in capsys.readouterr().out


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "fraccos", "eval-ml", "--alpha", "1", "--z", "0"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert "= 1.0" in proc.stdout


def test_config_defaults(setup):
    cfg = RunConfig.from_json(setup([[-1.0]]))
    assert cfg.kind == "rl"
    assert cfg.quad_order == 32
    assert cfg.checks == ("resolvent", "cosine")
    assert cfg.generator_path.name == "gen.json"


@pytest.mark.parametrize(
    "bad",
    [
        {"alpha": 2.0},
        {"quad_order": 4},
        {"kind": "wave"},
        {"tolerances": {"resolvent": -1.0}},
        {"tolerances": {"nonsense": 1.0}},
        {"checks": ["resolvent", "nonsense"]},
        {"kind": "caputo", "checks": ["resolvent"]},
        {"grid": {"kind": "uniform", "T": 1.0, "count": 100}},
        {"unknown_key": 1},
    ],
)
def test_config_validation(setup, capsys, bad):
    path = setup([[-1.0]], **bad)
    with pytest.raises(UsageError):
        RunConfig.from_json(path)
    assert main(["verify", "--config", str(path)]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_generator_file(tmp_path):
    path = _write(tmp_path / "g.json", {"dim": 2, "rows": [[[0, 1], 0], [0, [1, -1]]]})
    a = load_generator(path)
    np.testing.assert_array_equal(a, np.array([[1j, 0], [0, 1 - 1j]]))
    with pytest.raises(UsageError):
        load_generator(_write(tmp_path / "h.json", {"dim": 3, "rows": [[1.0]]}))


def test_missing_generator(tmp_path, capsys):
    config = _write(tmp_path / "config.json", {"alpha": 1.5, "generator": "missing.json"})
    assert main(["solve", "--config", str(config)]) == 2
    err = capsys.readouterr().err
    assert str(tmp_path / "missing.json") in err


def test_missing_config(tmp_path, capsys):
    assert main(["verify", "--config", str(tmp_path / "nope.json")]) == 2
    assert "nope.json" in capsys.readouterr().err


# }}}


# {{{ solve and build


def test_solve_zero_generator(setup, tmp_path, capsys):
    config = setup([[0.0, 0.0], [0.0, 0.0]], initial_value=[1.0, 0.0])
    assert main(["solve", "--config", str(config)]) == 0
    assert "certification: passed" in capsys.readouterr().out

    header, data = _read_csv(tmp_path / "out" / "solution.csv")
    assert header == ["t", "f0", "f1"]
    t = data[:, 0]
    np.testing.assert_allclose(data[:, 1], t**-0.5 / gamma(0.5), rtol=1e-15)
    np.testing.assert_array_equal(data[:, 2], 0.0)
    meta = json.loads((tmp_path / "out" / "solution.csv.json").read_text())
    assert meta["exponent"] == -0.5


def test_solve_scalar(setup, tmp_path):
    config = setup([[-1.0]], grid={"kind": "uniform", "T": 2.0, "count": 4})
    assert main(["solve", "--config", str(config)]) == 0
    _, data = _read_csv(tmp_path / "out" / "solution.csv")
    row = data[data[:, 0] == 1.0][0]
    assert row[1] == pytest.approx(SCALAR_ORACLE, abs=1e-9)


def test_solve_certification_failure(setup, capsys):
    # no extrapolated limit can meet a tolerance below roundoff
    config = setup([[-1.0]], tolerances={"certification": 1e-30})
    assert main(["solve", "--config", str(config)]) == 3
    assert "certification: FAILED" in capsys.readouterr().out


def test_build(setup, tmp_path):
    config = setup([[-1.0, 0.0], [0.0, -2.0]], grid={"kind": "geometric", "T": 1.0, "count": 5})
    assert main(["build", "--config", str(config), "--alpha", "1.25"]) == 0
    header, data = _read_csv(tmp_path / "out" / "family.csv")
    assert header == ["t", "f0", "f1", "f2", "f3"]
    np.testing.assert_allclose(data[:, 0], [1 / 16, 1 / 8, 1 / 4, 1 / 2, 1])
    np.testing.assert_array_equal(data[:, 2], 0.0)


def test_recover_generator(setup, tmp_path, capsys):
    rows = [[0.0, 1.0], [-1.0, 0.0]]
    config = setup(rows)
    assert main(["recover-generator", "--config", str(config)]) == 0
    assert "distance to configured generator" in capsys.readouterr().out
    recovered = load_generator(tmp_path / "out" / "generator.json")
    np.testing.assert_allclose(recovered, rows, atol=1e-6)


# }}}


# {{{ verify


def _reports(tmp_path, out="out"):
    lines = (tmp_path / out / "reports.jsonl").read_text().splitlines()
    return {json.loads(line)["check_id"]: json.loads(line) for line in lines}


def test_verify_default(setup, tmp_path):
    config = setup([[-1.0, 0.0], [0.0, -2.0]])
    assert main(["verify", "--config", str(config)]) == 0
    reports = _reports(tmp_path)
    assert set(reports) == {"resolvent", "cosine"}
    assert all(r["passed"] for r in reports.values())
    summary = (tmp_path / "out" / "summary.csv").read_text().splitlines()
    assert len(summary) == 3


def test_verify_corrupted(setup, tmp_path):
    config = setup([[-1.0, 0.0], [0.0, -2.0]])
    assert main(["verify", "--config", str(config), "--corrupt", "1e-2"]) == 1
    reports = _reports(tmp_path)
    assert not reports["resolvent"]["passed"]
    assert not reports["cosine"]["passed"]


def test_verify_all_checks(setup, tmp_path):
    config = setup([[0.0, 1.0], [-1.0, 0.0]], grid={"kind": "default", "T": 2.0, "count": 8})
    checks = "resolvent,cosine,generator,caputo,laplace,uniqueness"
    assert main(["verify", "--config", str(config), "--checks", checks]) == 0
    reports = _reports(tmp_path)
    assert set(reports) == {
        "resolvent", "cosine", "generator", "caputo", "laplace", "laplace-numerical", "uniqueness",
    }


def test_verify_failed_limit_is_reported(setup, tmp_path):
    config = setup([[-1.0]], alpha=1.75)
    code = main(["verify", "--config", str(config), "--corrupt", "1e-2", "--checks", "generator"])
    assert code == 1
    report = _reports(tmp_path)["generator"]
    assert report["details"]["error"] == "limit-unstable"
    assert math.isinf(report["rel_residual"])


def test_verify_caputo_kind(setup, tmp_path):
    config = setup([[-1.0]], kind="caputo", checks=["caputo"])
    assert main(["verify", "--config", str(config)]) == 0
    assert _reports(tmp_path)["caputo"]["passed"]


def test_verify_no_checks(setup, capsys):
    config = setup([[-1.0]])
    assert main(["verify", "--config", str(config), "--checks", ""]) == 2
    assert "no checks selected" in capsys.readouterr().err
    assert main(["verify", "--config", str(setup([[-1.0]], checks=[]))]) == 2


def test_verify_quad_order_flag(setup, tmp_path):
    config = setup([[-1.0]])
    assert main(["verify", "--config", str(config), "--quad-order", "4"]) == 2
    assert main(["verify", "--config", str(config), "--quad-order", "16", "--out", str(tmp_path / "o16")]) == 0
    assert _reports(tmp_path, "o16")["cosine"]["quadrature_order"] == 16


def test_verify_deterministic(setup, tmp_path):
    config = setup([[0.0, 1.0], [-1.0, 0.0]], checks=["resolvent", "cosine", "laplace"])
    outputs = []
    for out in ("run1", "run2"):
        assert main(["verify", "--config", str(config), "--out", str(tmp_path / out)]) == 0
        outputs.append(
            ((tmp_path / out / "reports.jsonl").read_bytes(), (tmp_path / out / "summary.csv").read_bytes())
        )
    assert outputs[0] == outputs[1]


# }}}
