import csv
import json
import math
import os
import subprocess
import sys

import pytest

from varlorentz.cli import EXIT_CONFIG, EXIT_OK, main


def run(tmp_path, command, cfg=None, *flags):
    argv = [command, "--out", str(tmp_path)]
    if cfg is not None:
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        argv += ["--config", str(path)]
    return main(argv + list(flags))


def outputs(tmp_path):
    return sorted(p.name for p in tmp_path.iterdir() if p.name != "cfg.json")


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[float(x) for x in r] for r in rows[1:]]


def test_rearrange_two_level_breakpoints(tmp_path):
    r_a, r_b = math.sqrt(0.1 / math.pi), math.sqrt(0.3 / math.pi)
    cfg = {"profile": {"dim": 2, "radius": 1.0, "kind": "steps", "radii": [r_a, r_b],
                       "levels": [2.0, 1.0, 0.0]}}
    assert run(tmp_path, "rearrange", cfg) == EXIT_OK
    res = json.loads((tmp_path / "rearrange.json").read_text())["result"]
    assert res["breakpoints"] == pytest.approx([0.0, 0.1, 0.3, math.pi], abs=1e-15)
    header, rows = read_csv(tmp_path / "f_star.csv")
    assert header == ["t", "f_star"]
    assert all(b[1] <= a[1] for a, b in zip(rows, rows[1:]))


def test_rearrange_default_tent_distribution(tmp_path):
    assert run(tmp_path, "rearrange") == EXIT_OK
    _, rows = read_csv(tmp_path / "distribution.csv")
    by_lambda = {round(lam, 12): v for lam, v in rows}
    assert by_lambda[0.5] == pytest.approx(0.78540, abs=5e-6)


def test_norm_command(tmp_path):
    cfg = {"profile": {"dim": 2, "radius": 0.5, "kind": "tent"},
           "exponent": {"kind": "constant", "q0": 2.0}, "second_index": 2.0}
    assert run(tmp_path, "norm", cfg) == EXIT_OK
    res = json.loads((tmp_path / "norm.json").read_text())["result"]
    # L^{2,2} is L^2 up to the 1/p factor in the Lorentz integral
    l2 = math.sqrt(math.pi * 0.25 / 6)
    assert res["luxemburg"] == pytest.approx(l2, rel=1e-10)
    assert res["lorentz"] == pytest.approx(l2 / math.sqrt(2), rel=1e-8)
    assert res["lorentz_of_rearrangement"] == pytest.approx(res["lorentz"], rel=1e-8)


@pytest.mark.parametrize("cfg", [
    {"profile": {"dim": 2, "radius": -1.0, "kind": "tent"}},
    {"t_points": 1},
    {"unknown": 3},
    {"profile": {"dim": 2, "radius": 1.0, "kind": "spiral"}},
])
def test_malformed_config_exits_2_without_output(tmp_path, cfg, capsys):
    assert run(tmp_path, "rearrange", cfg) == EXIT_CONFIG
    assert outputs(tmp_path) == []
    assert "config error" in capsys.readouterr().err


def test_unreadable_config_and_bad_flags(tmp_path):
    (tmp_path / "cfg.json").write_text("{not json")
    assert main(["norm", "--config", str(tmp_path / "cfg.json"), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["norm", "--seed", "3", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["frobnicate"]) == EXIT_CONFIG
    assert outputs(tmp_path) == []


def test_classify_verdicts(tmp_path):
    small = {"decay_exponents": [1, 2, 3, 4], "bump_scales": [2, 4]}
    assert run(tmp_path, "classify", small) == EXIT_OK
    res = json.loads((tmp_path / "verdict.json").read_text())["result"]
    assert res["verdict"] == "Compact"
    critical = dict(small, family={"p": 1.0, "d": 2, "C": 1.0, "ell": 1.0, "eta": 0.1})
    assert run(tmp_path, "classify", critical) == EXIT_OK
    res = json.loads((tmp_path / "verdict.json").read_text())["result"]
    assert res["verdict"] == "NonCompact"


def test_gamma_command(tmp_path):
    cfg = {"radii": [0.1, 0.01], "budget": 100}
    assert run(tmp_path, "gamma", cfg) == EXIT_OK
    res = json.loads((tmp_path / "gamma.json").read_text())["result"]
    assert len(res["per_radius"]) == 2
    assert all(t["gamma_hat"] >= t["floor"] for t in res["per_radius"])
    assert outputs(tmp_path) == ["gamma.json", "gamma_trace.csv"]


def test_bernstein_small_run_is_deterministic(tmp_path):
    cfg = {"N": 2, "samples": 20, "budget": 100}
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    assert run(a, "bernstein", cfg) == EXIT_OK
    assert run(b, "bernstein", cfg) == EXIT_OK
    for name in ("system.json", "bernstein.json"):
        assert (a / name).read_text() == (b / name).read_text()
    rep = json.loads((a / "bernstein.json").read_text())["result"]
    assert rep["inf_quotient"] >= rep["analytic_bound"]


def test_bernstein_rejects_subcritical_family(tmp_path):
    cfg = {"family": {"p": 1.0, "d": 2, "C": 1.0, "ell": 0.5, "eta": 0.1}}
    assert run(tmp_path, "bernstein", cfg) == EXIT_CONFIG


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "varlorentz.cli", "rearrange", "--out", str(tmp_path),
                           "--tol", "0"], capture_output=True, text=True)
    assert proc.returncode == EXIT_CONFIG
    proc = subprocess.run([sys.executable, "-m", "varlorentz.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "rearrange" in proc.stdout
    assert os.listdir(tmp_path) == []
