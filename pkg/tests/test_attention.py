import numpy as np
import pytest

from vars_attn.attention import (
    linear_attention_euler_step,
    saliency_map,
    self_attention_baseline,
    vars_backward,
    vars_d,
    vars_s,
    vars_sd,
    vars_unrolled,
)
from vars_attn.checks import gradient_check_instance
from vars_attn.dictionary import build_dynamic, build_static, combine, normalize_atoms, random_projection
from vars_attn.errors import ArgumentError, DimensionError
from vars_attn.fixtures import bar_noise_fixture
from vars_attn.oracles import lasso_enumeration, least_squares_projection
from vars_attn.solver import SolverConfig, lasso_objective
from vars_attn.tensor import soft_threshold


def test_large_lambda_is_identity(rng):
    x = rng.standard_normal((9, 3))
    out = vars_s(x, build_static(rng.standard_normal((3, 3)), (3, 3)), SolverConfig(lam=1e3))
    np.testing.assert_array_equal(out.output, x)
    np.testing.assert_array_equal(out.codes, 0.0)
    np.testing.assert_array_equal(out.saliency, 0.0)


def test_identity_dictionary_closed_form(rng):
    x = rng.standard_normal((6, 2))
    out = vars_s(x, build_static(np.ones((1, 1)), (2, 3)), SolverConfig.converge(0.3))
    np.testing.assert_allclose(out.output, soft_threshold(x, 0.3) + x, atol=1e-9)


def test_grid_mismatch(rng):
    d = build_static(np.ones((3, 1)), (4, 4))
    with pytest.raises(DimensionError):
        vars_s(rng.standard_normal((9, 2)), d)


def test_bar_fixture_saliency():
    fx = bar_noise_fixture()
    out = vars_s(fx.tokens, build_static(fx.kernel, fx.grid))
    s = out.saliency
    assert s.max() == pytest.approx(1.0)
    assert s[fx.bar_tokens].mean() > s[fx.noise_tokens].mean()
    assert len(out.diagnostics) == fx.tokens.shape[1]


def test_vars_d_large_lambda(rng):
    x = 0.3 * rng.standard_normal((5, 3))
    out = vars_d(x, random_projection(3, 4, seed=1), SolverConfig(lam=1e3))
    np.testing.assert_array_equal(out.output, x)
    assert out.effective_lambda == 2e3


def test_vars_d_single_token(rng):
    x = 0.3 * rng.standard_normal((1, 3))
    out = vars_d(x, random_projection(3, 4, seed=1), SolverConfig.converge(0.01))
    assert out.output.shape == (1, 3)
    assert np.all(np.isfinite(out.output))


def test_vars_d_matches_enumeration():
    r = np.random.default_rng(3)
    x = 0.4 * r.standard_normal((8, 4))
    w = random_projection(4, 4, seed=5)
    cfg = SolverConfig.converge(0.05)
    out = vars_d(x, w, cfg)
    atoms = normalize_atoms(build_dynamic(x, w).atoms)
    for mu in range(4):
        best = lasso_enumeration(atoms, x[:, mu], 0.1)[1]
        assert lasso_objective(atoms, x[:, mu], out.codes[:, mu], 0.1) == pytest.approx(best, abs=1e-6)


def test_vars_d_lambda_zero_projects(rng):
    x = 0.3 * rng.standard_normal((6, 2))
    w = random_projection(2, 3, seed=2)
    out = vars_d(x, w, SolverConfig.converge(0.0, tol=1e-13))
    atoms = normalize_atoms(build_dynamic(x, w).atoms)
    for mu in range(2):
        np.testing.assert_allclose(out.reconstruction[:, mu], least_squares_projection(atoms, x[:, mu]), atol=1e-6)


def test_vars_sd_contract(rng):
    x = 0.3 * rng.standard_normal((9, 2))
    s = build_static(np.ones((3, 1)), (3, 3))
    d = build_dynamic(x, random_projection(2, 4, seed=0))
    out = vars_sd(x, combine(s, d), SolverConfig.converge(0.0))
    assert out.codes.shape == (13, 2)
    assert out.effective_lambda == 0.0
    for mu in range(2):
        resid = out.reconstruction[:, mu] - x[:, mu]
        best = 0.5 * np.sum((least_squares_projection(out.atoms, x[:, mu]) - x[:, mu]) ** 2)
        assert 0.5 * resid @ resid <= best + 1e-8
    with pytest.raises(ArgumentError):
        vars_sd(x + 1.0, combine(s, d))


def test_baseline_examples(rng):
    w = random_projection(3, 4, seed=0)
    out = self_attention_baseline(np.zeros((5, 3)), w)
    np.testing.assert_array_equal(out.output, 0.0)
    x1 = 0.5 * rng.standard_normal((1, 3))
    phi = build_dynamic(x1, w).atoms
    out = self_attention_baseline(x1, w)
    np.testing.assert_allclose(out.output, (1 + phi[0] @ phi[0]) * x1, rtol=1e-14)


def test_baseline_is_one_euler_step(rng):
    x = 0.5 * rng.standard_normal((7, 3))
    w = random_projection(3, 5, seed=1)
    phi = build_dynamic(x, w).atoms
    step = linear_attention_euler_step(phi, x, x, h=1.0)
    assert np.array_equal(step, self_attention_baseline(x, w).output)


def test_unrolled_matches_vars_s(rng):
    x = rng.standard_normal((9, 2))
    d = build_static(rng.standard_normal((3, 3)), (3, 3))
    cfg = SolverConfig(lam=0.3, steps=3)
    np.testing.assert_allclose(vars_unrolled(x, normalize_atoms(d.atoms), cfg), vars_s(x, d, cfg).output, atol=1e-12)


def test_backward_zero_steps_zero_init(rng):
    x = rng.standard_normal((4, 2))
    p = rng.standard_normal((4, 3))
    g = rng.standard_normal((4, 2))
    gx, gp = vars_backward(x, p, SolverConfig(lam=0.3, steps=0, init="zero"), g)
    np.testing.assert_array_equal(gx, g)
    np.testing.assert_array_equal(gp, 0.0)


def test_backward_orthonormal_small_lambda(rng):
    q = np.linalg.qr(rng.standard_normal((4, 4)))[0]
    x = rng.standard_normal((4, 2)) + 5.0
    g = rng.standard_normal((4, 2))
    # with lam = 0 the unrolled map is Z = 2X for any number of steps
    gx, _ = vars_backward(x, q, SolverConfig(lam=0.0, steps=3), g)
    np.testing.assert_allclose(gx, 2 * g, atol=1e-12)


def test_backward_finite_differences():
    rng = np.random.default_rng(7)
    for _ in range(3):
        worst, done = gradient_check_instance(rng, n_coords=10)
        assert done == 10
        assert worst <= 1e-4


def test_backward_rejects_tol_mode(rng):
    with pytest.raises(ArgumentError):
        vars_backward(np.ones((3, 1)), np.eye(3), SolverConfig.converge(0.3), np.ones((3, 1)))


def test_saliency_examples():
    np.testing.assert_array_equal(saliency_map(np.zeros((3, 2))), 0.0)
    np.testing.assert_allclose(saliency_map(np.array([[3.0, 4.0], [0.0, 1.0]])), [1.0, 0.2])


def test_channel_permutation(rng):
    x = rng.standard_normal((9, 3))
    d = build_static(rng.standard_normal((3, 3)), (3, 3))
    perm = [2, 0, 1]
    a = vars_s(x, d).output
    b = vars_s(x[:, perm], d).output
    np.testing.assert_allclose(a[:, perm], b, atol=1e-14)
