import numpy as np
import pytest

from vars_attn.dictionary import (
    EXP_LIMIT,
    bar_kernel,
    build_dynamic,
    build_static,
    combine,
    gabor_kernel,
    normalize_atoms,
)
from vars_attn.errors import ArgumentError, DegenerateAtomError, DimensionError, NumericRangeError
from vars_attn.oracles import correlate2d_loop


def test_delta_kernel_gives_identity():
    np.testing.assert_array_equal(build_static([[1.0]], (2, 2)).atoms, np.eye(4))


def test_vertical_kernel_on_column_grid():
    # a 3x1 vertical kernel needs a grid at least 3 tall; the 1-D strip runs down a 5x1 column
    d = build_static(bar_kernel(3), (5, 1))
    x = np.arange(1.0, 6.0)
    padded = np.concatenate([[0.0], x, [0.0]])
    np.testing.assert_array_equal(d.atoms.T @ x, padded[:-2] + padded[1:-1] + padded[2:])


def test_horizontal_kernel_on_row_grid():
    d = build_static(np.ones((1, 3)), (1, 5))
    x = np.array([1.0, -2.0, 3.0, 0.5, 4.0])
    np.testing.assert_array_equal(d.atoms.T @ x, [-1.0, 2.0, 1.5, 7.5, 4.5])


def test_static_matches_nested_loop_correlation(rng):
    kernel = rng.standard_normal((3, 3))
    img = rng.standard_normal((4, 4))
    d = build_static(kernel, (4, 4))
    np.testing.assert_allclose(d.atoms.T @ img.ravel(), correlate2d_loop(img, kernel).ravel(), atol=1e-12)


@pytest.mark.parametrize("kshape,grid", [((2, 2), (3, 5)), ((3, 1), (4, 4)), ((1, 4), (2, 6)), ((5, 5), (5, 5))])
def test_static_correlation_property(rng, kshape, grid):
    from scipy.signal import correlate2d

    kernel = rng.standard_normal(kshape)
    d = build_static(kernel, grid)
    for _ in range(3):
        img = rng.standard_normal(grid)
        np.testing.assert_allclose(d.atoms.T @ img.ravel(), correlate2d_loop(img, kernel).ravel(), atol=1e-12)
        if all(k % 2 == 1 for k in kshape):
            # odd kernels: our centring coincides with scipy's 'same' mode
            np.testing.assert_allclose(d.atoms.T @ img.ravel(), correlate2d(img, kernel, mode="same").ravel(), atol=1e-12)


def test_static_kernel_too_large():
    with pytest.raises(ArgumentError):
        build_static(np.ones((3, 1)), (1, 5))


def test_static_square():
    d = build_static(gabor_kernel(3), (4, 5))
    assert d.atoms.shape == (20, 20)
    assert d.grid == (4, 5)


def test_dynamic_zero_tokens_constant_atoms(rng):
    w = rng.standard_normal((3, 5))
    d = build_dynamic(np.zeros((4, 3)), w)
    np.testing.assert_allclose(d.atoms, np.full((4, 5), 1 / np.sqrt(5)), rtol=1e-15)


def test_dynamic_formula(rng):
    x, w = rng.standard_normal((6, 3)), rng.standard_normal((3, 4))
    d = build_dynamic(x, w)
    i, j = 2, 3
    expected = np.exp(x[i] @ w[:, j] - 0.5 * x[i] @ x[i]) / 2.0
    assert d.atoms[i, j] == pytest.approx(expected, rel=1e-14)
    assert np.all(d.atoms > 0)


def test_dynamic_kernel_monte_carlo():
    # small token norms keep the lognormal estimator's spread well inside 5%
    x = np.array([[0.2, -0.1, 0.25], [-0.15, 0.3, 0.1]])
    d = build_dynamic(x, None, seed=5, n_features=10_000)
    estimate = d.atoms @ d.atoms.T
    exact = np.exp(x @ x.T)
    assert np.all(np.abs(estimate - exact) / exact < 0.05)


def test_dynamic_deterministic_and_hash(rng):
    x, w = rng.standard_normal((4, 3)), rng.standard_normal((3, 2))
    a, b = build_dynamic(x, w), build_dynamic(x.copy(), w)
    np.testing.assert_array_equal(a.atoms, b.atoms)
    assert a.source_hash == b.source_hash
    assert build_dynamic(0 * x, w).source_hash != a.source_hash
    assert build_dynamic(0 * x, w).source_hash == build_dynamic(np.zeros_like(x), w).source_hash


def test_dynamic_gram_positive_psd(rng):
    d = build_dynamic(rng.standard_normal((7, 3)) * 0.5, rng.standard_normal((3, 5)))
    k = d.atoms @ d.atoms.T
    assert np.all(k > 0)
    np.testing.assert_allclose(k, k.T)
    assert np.linalg.eigvalsh(k).min() > -1e-12


def test_dynamic_overflow():
    with pytest.raises(NumericRangeError):
        build_dynamic(np.array([[30.0, 0.0]]), np.array([[40.0], [0.0]]))
    assert EXP_LIMIT == 700.0


def test_dynamic_shape_mismatch(rng):
    with pytest.raises(DimensionError):
        build_dynamic(rng.standard_normal((4, 3)), rng.standard_normal((2, 2)))


def test_combine_concatenates(rng):
    s = build_static([[1.0]], (2, 2))
    d = build_dynamic(rng.standard_normal((4, 3)), rng.standard_normal((3, 2)))
    c = combine(s, d)
    assert c.atoms.shape == (4, 6)
    np.testing.assert_array_equal(c.atoms[:, :4], np.eye(4))
    left, right = c.split()
    np.testing.assert_array_equal(left, s.atoms)
    np.testing.assert_array_equal(right, d.atoms)


def test_combined_gram_blocks(rng):
    s = build_static(rng.standard_normal((3, 3)), (3, 3))
    d = build_dynamic(rng.standard_normal((9, 2)), rng.standard_normal((2, 3)))
    a = combine(s, d).atoms
    g = a.T @ a
    np.testing.assert_allclose(g[:9, :9], s.atoms.T @ s.atoms, atol=1e-14)
    np.testing.assert_allclose(g[9:, 9:], d.atoms.T @ d.atoms, atol=1e-14)
    np.testing.assert_allclose(g, g.T)
    assert np.trace(g) == pytest.approx(np.trace(s.atoms.T @ s.atoms) + np.trace(d.atoms.T @ d.atoms))
    assert np.linalg.eigvalsh(g).min() > -1e-10


def test_combine_row_mismatch(rng):
    s = build_static([[1.0]], (2, 2))
    d = build_dynamic(rng.standard_normal((5, 3)), rng.standard_normal((3, 2)))
    with pytest.raises(DimensionError):
        combine(s, d)


def test_normalize_examples(rng):
    np.testing.assert_allclose(normalize_atoms([[3.0], [4.0]]), [[0.6], [0.8]], atol=1e-15)
    q = np.linalg.qr(rng.standard_normal((5, 3)))[0]
    np.testing.assert_allclose(normalize_atoms(q), q, atol=1e-15)
    n = normalize_atoms(rng.standard_normal((6, 3)))
    np.testing.assert_allclose(np.linalg.norm(n, axis=0), 1.0, atol=1e-12)


def test_normalize_zero_column():
    with pytest.raises(DegenerateAtomError):
        normalize_atoms([[1.0, 0.0], [2.0, 0.0]])
