import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from finsler import report
from finsler.cli import main, run
from finsler.config import RunConfig, Tolerances, build_norm, load_config, validate
from finsler.errors import ConfigError
from finsler.motions import probe_closure
from finsler.norms import ratio3
from finsler.ortho import Basis

# witness digest of the first NotClosed probe: ratio3(A=1), rng_seed 42, 100 trials
PROBE_DIGEST = "23c82721c09c6ad86a7c4cf576e89f73e656dc6dfe174b8956113b208b0f894d"


def _write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _run(tmp_path, sub, text, env=None):
    cfg = _write(tmp_path, text)
    out = str(tmp_path / "out.json")
    old = dict(os.environ)
    os.environ.pop("FINSLER_SEED", None)
    os.environ.update(env or {})
    try:
        code = main([sub, "--config", cfg, "--out", out])
    finally:
        os.environ.clear()
        os.environ.update(old)
    with open(out) as fh:
        raw = fh.read()
    return code, json.loads(raw), raw


R3 = 'dim = 3\nrng_seed = 42\ntrials = 100\n[metric]\nkind = "ratio3"\nA = 1\n'


def test_check_euclidean(tmp_path):
    code, rep, _ = _run(tmp_path, "check", 'dim = 3\ntrials = 100\n[metric]\nkind = "euclidean"\n')
    assert code == 0 and rep["diagnostics"] == []
    assert max(rep["outputs"]["max_residual"].values()) <= 1e-10


def test_gram_isotropic(tmp_path):
    text = 'dim = 2\nseed_basis = [[1, 1], [1, 0]]\n[metric]\nkind = "pseudo"\np = 1\nq = 1\n'
    code, rep, _ = _run(tmp_path, "gram", text)
    assert code == 3
    (d,) = rep["diagnostics"]
    assert d["code"] == "IsotropicIntermediate" and d["witness"]["step"] == 1


def test_probe_closure_pinned(tmp_path):
    code, rep, _ = _run(tmp_path, "probe-closure", R3)
    out = rep["outputs"]
    assert code == 0 and out["verdict"] == "NotClosed"
    assert out["witness_digest"] == PROBE_DIGEST
    assert out["witness"]["violation"] > 1e-3
    # the witness replays through the library
    w = out["witness"]
    res = probe_closure(ratio3(1), Basis(w["b1"]), Basis(w["b2"]))
    assert res.violation == pytest.approx(w["violation"], rel=1e-12)


def test_probe_closure_quadratic_closed(tmp_path):
    text = 'dim = 3\ntrials = 20\n[metric]\nkind = "pseudo"\np = 2\n'
    code, rep, _ = _run(tmp_path, "probe-closure", text)
    assert code == 0 and rep["outputs"]["verdict"] == "Closed" and rep["outputs"]["witness"] is None


def test_deterministic_bytes(tmp_path):
    a = _run(tmp_path, "probe-closure", R3)[2]
    b = _run(tmp_path, "probe-closure", R3)[2]
    assert a == b
    c = _run(tmp_path, "lie", R3)[2]
    assert c == _run(tmp_path, "lie", R3)[2]


def test_seed_env_override(tmp_path):
    base = _run(tmp_path, "probe-closure", R3.replace("rng_seed = 42", "rng_seed = 1"), {"FINSLER_SEED": "0x2a"})
    assert base[1]["command"]["config"]["rng_seed"] == 42
    assert base[1]["outputs"]["witness_digest"] == PROBE_DIGEST
    code, rep, _ = _run(tmp_path, "check", R3, {"FINSLER_SEED": "nope"})
    assert code == 2 and rep["diagnostics"][0]["code"] == "ConfigError"


@pytest.mark.parametrize(
    "text",
    [
        "dim = 3\n[metric\n",
        'dim = 10\n[metric]\nkind = "euclidean"\n',
        'dim = 3\n[metric]\nkind = "lorentz"\n',
        'dim = 3\n[metric]\nkind = "euclidean"\n[tolerances]\northo_tol = -1\n',
        'dim = 2\nseed_basis = [[1, 2], [2, 4]]\n[metric]\nkind = "euclidean"\n',
        'dim = 2\n[metric]\nkind = "expr"\nexpr = "v1^2 +"\n',
        'dim = 2\n[metric]\nkind = "expr"\nexpr = "v1^2 + v3^2"\n',
        'dim = 2\n[metric]\nkind = "expr"\nexpr = "v1^2 + v2"\n',
        'dim = 2\n[metric]\nkind = "ratio3"\n',
        'dim = 3\nbogus = 1\n[metric]\nkind = "euclidean"\n',
        'dim = 3\n[metric]\nkind = "pseudo"\np = 2\nq = 2\n',
    ],
)
def test_config_errors_exit_2(tmp_path, text):
    code, rep, _ = _run(tmp_path, "check", text)
    assert code == 2
    assert rep["diagnostics"] and "message" in rep["diagnostics"][0]


def test_missing_config_file(tmp_path):
    out = str(tmp_path / "o.json")
    assert main(["check", "--config", str(tmp_path / "absent.toml"), "--out", out]) == 2


def test_not_product_form_exit_2(tmp_path):
    code, rep, _ = _run(tmp_path, "lightspeed", R3)
    assert code == 2 and rep["diagnostics"][0]["code"] == "NotProductForm"


def test_not_spacelike_seed_exit_2(tmp_path):
    text = 'dim = 2\nseed_plus = [[0, 1]]\n[metric]\nkind = "pseudo"\np = 1\n'
    code, rep, _ = _run(tmp_path, "cone", text)
    assert code == 2 and rep["diagnostics"][0]["code"] == "NotSpacelikeSeed"


def test_lightspeed_ok(tmp_path):
    text = 'dim = 4\ntrials = 200\n[metric]\nkind = "spacetime4"\nc = 2\nA = 1\n'
    code, rep, _ = _run(tmp_path, "lightspeed", text)
    assert code == 0 and rep["outputs"]["v0"] == pytest.approx(0.5) and rep["outputs"]["spread"] <= 1e-12


def test_cone_ok(tmp_path):
    text = 'dim = 3\nseed_plus = [[1, 0, 0], [0, 1, 0]]\n[metric]\nkind = "pseudo"\np = 2\n'
    code, rep, _ = _run(tmp_path, "cone", text)
    assert code == 0 and rep["outputs"]["minus"] == [[0.0, 0.0, 1.0]]


def test_numeric_failures_exit_3(tmp_path):
    text = 'dim = 2\npoint = [1, 1]\n[metric]\nkind = "expr"\nexpr = "v1^2"\n'
    code, rep, _ = _run(tmp_path, "derive", text)
    assert code == 3 and rep["diagnostics"][0]["code"] == "SingularMetric"
    text = 'dim = 4\n[metric]\nkind = "spacetime4"\n'
    code, rep, _ = _run(tmp_path, "lie", text)
    assert code == 3 and rep["diagnostics"][0]["code"] == "NonSmoothError"


def test_violation_exit_1(tmp_path):
    text = R3 + "[tolerances]\northo_tol = 1e-300\n"
    code, rep, _ = _run(tmp_path, "gram", text.replace("trials = 100", "seed_basis = [[1, 0.2, 0.1], [0.3, 1, 0], [0, 0.4, 1]]"))
    assert code == 1 and rep["diagnostics"][0]["code"] == "NotOrthonormal"
    assert rep["outputs"]["orthonormal"] is False


def test_derive_and_lie(tmp_path):
    code, rep, _ = _run(tmp_path, "derive", R3.replace("trials = 100", "point = [1, 2, 3]"))
    assert code == 0
    assert np.array(rep["outputs"]["cartan"]).shape == (3, 3, 3)
    code, rep, _ = _run(tmp_path, "lie", R3.replace("trials = 100", "trials = 10"))
    assert code == 0 and rep["outputs"]["dim"] == 3 and abs(rep["outputs"]["defect_max"]["rate"]) > 1e-6


def test_report_structure(tmp_path):
    _, rep, raw = _run(tmp_path, "gram", 'dim = 2\n[metric]\nkind = "euclidean"\n')
    assert rep["schema_version"] == "1"
    assert set(rep) == {"schema_version", "command", "inputs_digest", "outputs", "diagnostics", "exit_code"}
    assert rep["command"]["subcommand"] == "gram"
    assert not [f for f in os.listdir(tmp_path) if f.startswith(".finsler-")]


def test_console_script(tmp_path):
    cfg = _write(tmp_path, 'dim = 2\n[metric]\nkind = "euclidean"\n')
    proc = subprocess.run([sys.executable, "-m", "finsler.cli", "gram", "--config", cfg], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["outputs"]["orthonormal"] is True


# -- canonical JSON ------------------------------------------------------------

def test_canonical_floats():
    text = report.dumps({"b": [0.1, 1.0, math.inf, np.float64(1 / 3)], "a": np.int64(3)})
    assert text == '{\n  "a": 3,\n  "b": [0.10000000000000001, 1.0, null, 0.33333333333333331]\n}\n'
    assert json.loads(text)["b"][0] == 0.1


def test_digest_stable():
    assert report.digest({"x": 1, "y": [1.5]}) == report.digest({"y": [1.5], "x": 1})
    assert report.digest({"x": 1.0}) != report.digest({"x": 1.0000000000000002})


def test_validate_defaults():
    cfg = validate({"dim": 3, "metric": {"kind": "ratio3", "A": "1/4"}}, env={})
    assert cfg == RunConfig(dim=3, metric={"kind": "ratio3", "A": "1/4"})
    assert cfg.tolerances == Tolerances()
    assert build_norm(cfg).label() == "ratio3(A=1/4)"
    with pytest.raises(ConfigError):
        validate({"dim": True, "metric": {"kind": "euclidean"}}, env={})


def test_load_config(tmp_path):
    cfg = load_config(_write(tmp_path, R3), env={"FINSLER_SEED": "7"})
    assert cfg.rng_seed == 7 and cfg.trials == 100
