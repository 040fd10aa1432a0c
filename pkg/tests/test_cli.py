import io

import numpy as np
import pytest

from vars_attn.cli import run
from vars_attn.io import read_pgm, read_tensor, write_csv_matrix


def call(*argv):
    buf = io.StringIO()
    code = run(list(argv), out=buf)
    return code, buf.getvalue()


@pytest.fixture(scope="module")
def fx(tmp_path_factory):
    d = tmp_path_factory.mktemp("fx")
    assert call("fixtures", "--out", str(d))[0] == 0
    return d


def test_solve_orthonormal(fx):
    code, out = call("solve", "--dict", str(fx / "orthonormal/P.csv"), "--input", str(fx / "orthonormal/x.csv"),
                     "--tol", "1e-10")
    assert code == 0
    row = out.splitlines()[0].split(",")
    assert row[0] == "code"
    np.testing.assert_allclose([float(v) for v in row[1:]], [0.7, 0.0], atol=1e-9)
    assert "support_size,1" in out


def test_solve_deterministic(fx):
    argv = ("solve", "--dict", str(fx / "lasso_0/P.csv"), "--input", str(fx / "lasso_0/x.csv"))
    assert call(*argv) == call(*argv)


def test_ode_sparse(fx):
    code, out = call("ode", "--dict", str(fx / "orthonormal/P.csv"), "--input", str(fx / "orthonormal/x.csv"))
    lines = out.splitlines()
    assert code == 0 and lines[0] == "t,dz_norm,du_norm,E"
    e = [float(l.split(",")[3]) for l in lines[1:]]
    assert e[-1] == pytest.approx(0.275, abs=1e-8)
    assert all(b <= a + 1e-12 for a, b in zip(e, e[1:]))


def test_ode_linear(fx, tmp_path):
    p = tmp_path / "P.csv"
    write_csv_matrix(p, np.sqrt(0.5) * np.eye(2))
    code, out = call("ode", "--mode", "linear", "--dict", str(p), "--input", str(fx / "orthonormal/x.csv"),
                     "--every", "100")
    assert code == 0
    z_end = float(out.splitlines()[-1].split(",")[1])
    assert z_end < 1e-8


def test_vars_static_map(fx, tmp_path):
    pgm, zf = tmp_path / "m.pgm", tmp_path / "z.vt"
    code, out = call("vars", "--input", str(fx / "bars/X.vt"), "--kernel", str(fx / "bars/kernel.csv"),
                     "--out-map", str(pgm), "--out-z", str(zf))
    assert code == 0
    assert out.startswith("channel,effective_lambda")
    img = read_pgm(pgm)
    assert img.shape == (4, 4) and img.max() == 1.0
    assert read_tensor(zf).shape == (4, 4, 2)


@pytest.mark.parametrize("variant", ["d", "sa"])
def test_vars_dynamic(fx, variant):
    code, out = call("vars", "--variant", variant, "--input", str(fx / "tokens/X.vt"), "--proj", str(fx / "tokens/W.csv"))
    assert code == 0 and out


def test_toy_contour():
    code, out = call("toy", "--beta", "0", "--grid", "3x3", "--quiet")
    assert code == 0
    rows = [l.split(",") for l in out.splitlines()[1:]]
    contour = [float(r[4]) for r in rows if r[3] == "1"]
    assert len(contour) == 3
    np.testing.assert_allclose(contour, 2.0, atol=1e-6)


def test_check_properties():
    code, out = call("check", "--suite", "properties")
    assert code == 0
    assert "FAIL" not in out


def test_missing_file_exit_code(tmp_path):
    assert call("solve", "--dict", str(tmp_path / "nope.csv"), "--input", str(tmp_path / "x.csv"))[0] == 3


def test_malformed_csv_exit_code(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    assert call("solve", "--dict", str(bad), "--input", str(bad))[0] == 3


def test_dimension_error_exit_code(fx, capsys):
    code, _ = call("solve", "--dict", str(fx / "lasso_0/P.csv"), "--input", str(fx / "orthonormal/x.csv"))
    assert code == 2
    assert capsys.readouterr().err.startswith("dimension")


def test_usage_errors():
    with pytest.raises(SystemExit) as info:
        run(["solve"])
    assert info.value.code == 2


def test_seed_env(monkeypatch, tmp_path):
    monkeypatch.setenv("VARS_SEED", "7")
    call("fixtures", "--out", str(tmp_path / "a"))
    call("--seed", "7", "fixtures", "--out", str(tmp_path / "b"))
    assert (tmp_path / "a/manifest.json").read_text() == (tmp_path / "b/manifest.json").read_text()
