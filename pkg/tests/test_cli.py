import json
import math
import subprocess
import sys

import pytest


def run_cli(*args):
    res = subprocess.run([sys.executable, "-m", "slconv.cli", *args],
                         capture_output=True, text=True)
    return res.returncode, res.stdout, res.stderr


def test_kernel_cosine_oracle():
    rc, out, _ = run_cli("kernel", "--family", "cosine",
                         "--lambda", "4", "--x", "1.25")
    assert rc == 0
    lines = out.splitlines()
    assert lines[0].startswith("# slconv v")
    assert "seed=0" in lines[0]
    assert "cmd=" in lines[0]
    assert lines[1] == "w,w1,err"
    w = float(lines[2].split(",")[0])
    assert w == pytest.approx(math.cos(2.5), abs=1e-9)


def test_classify_hankel_zero():
    rc, out, _ = run_cli("classify", "--family", "hankel", "--alpha", "0")
    assert rc == 0
    assert out.strip() == "left=entrance right=natural"


def test_classify_cosine():
    rc, out, _ = run_cli("classify", "--family", "cosine")
    assert rc == 0
    assert out.strip() == "left=regular right=natural"


def test_validation_error_exit_code_and_json():
    rc, _, err = run_cli("kernel", "--family", "cosine",
                         "--lambda", "-1", "--x", "1")
    assert rc == 1
    payload = json.loads(err)
    assert payload["kind"] == "validation"
    assert "message" in payload


def test_unknown_family_is_validation_error():
    rc, _, err = run_cli("kernel", "--family", "bogus",
                         "--lambda", "1", "--x", "1")
    assert rc == 1
    assert json.loads(err)["kind"] == "validation"


def test_walk_deterministic_given_seed():
    args = ("walk", "--family", "cosine", "--step", "delta:1",
            "--n", "8", "--paths", "300", "--seed", "42")
    rc1, out1, _ = run_cli(*args)
    rc2, out2, _ = run_cli(*args)
    assert rc1 == rc2 == 0
    assert out1 == out2
    assert "seed=42" in out1.splitlines()[0]


def test_transform_gaussian():
    rc, out, _ = run_cli("transform", "--family", "cosine",
                         "--h", "exp(-x^2)", "--lambda-grid", "0:2:4")
    assert rc == 0
    rows = [line.split(",") for line in out.splitlines()[2:]]
    for lam_s, val_s in rows:
        want = 0.5 * math.sqrt(math.pi) * math.exp(-float(lam_s) / 4.0)
        assert float(val_s) == pytest.approx(want, rel=1e-8)


def test_convolve_emits_measure_json(tmp_path):
    out_file = tmp_path / "m.json"
    rc, _, _ = run_cli("convolve", "--family", "cosine",
                       "--x", "1", "--y", "2", "--out", str(out_file))
    assert rc == 0
    payload = json.loads(out_file.read_text())
    atoms = {a[0]: a[1] for a in payload["atoms"]}
    assert atoms == {1.0: 0.5, 3.0: 0.5}


def test_product_check_csv():
    rc, out, _ = run_cli("product-check", "--family", "cosine",
                         "--x", "0.7", "--y", "1.1",
                         "--lambda-grid", "0:5:25")
    assert rc == 0
    assert "max_abs_err=" in out.splitlines()[1]


def test_validate_family_reports_pass():
    rc, out, _ = run_cli("validate-family", "--family", "hankel",
                         "--alpha", "0.5")
    assert rc == 0
    assert "PASS" in out
    assert "FAIL" not in out


def test_semigroup_density_csv():
    rc, out, _ = run_cli("semigroup", "--family", "cosine",
                         "--psi", "lambda", "--t", "0.5",
                         "--x-grid", "0:0.01:10")
    assert rc == 0
    first = out.splitlines()[2].split(",")
    # density at the origin: 2 / sqrt(4 pi t) with t = 0.5
    assert float(first[1]) == pytest.approx(
        2.0 / math.sqrt(4 * math.pi * 0.5), rel=1e-6)
