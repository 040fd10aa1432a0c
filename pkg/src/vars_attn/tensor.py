"""Dense linear-algebra primitives.

Matrices and vectors are plain float64 numpy arrays (row-major, C order).
The ``as_matrix``/``as_vector`` helpers are the constructors: they enforce
shape and finiteness so downstream code can assume both.
"""
from __future__ import annotations

import numpy as np

from .errors import ArgumentError, ConvergenceError, DimensionError, NumericError

# Multiplier applied to power-iteration estimates of L before they bound an ISTA step.
LIPSCHITZ_SAFETY = 1.01


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise NumericError(f"{name} contains non-finite entries")
    return m


def as_vector(v, name: str = "vector") -> np.ndarray:
    x = np.ascontiguousarray(v, dtype=np.float64)
    if x.ndim == 2 and 1 in x.shape:
        x = x.ravel()
    if x.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NumericError(f"{name} contains non-finite entries")
    return x


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def spectral_norm_sq(p, tol: float = 1e-10, max_iter: int = 10_000, seed: int = 0) -> float:
    """Largest eigenvalue of ``p.T @ p`` (``sigma_max(p) ** 2``) by power iteration.

    Iteration stops once the eigen-residual ``||G v - rho v||`` falls below
    ``tol * rho``. The start vector is a seeded random unit vector.
    """
    p = as_matrix(p, "p")
    if p.size == 0:
        raise DimensionError("spectral_norm_sq needs a non-empty matrix")
    if not tol > 0:
        raise ArgumentError(f"tol must be positive, got {tol}")
    gram = p.T @ p
    if not np.any(gram):
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(gram.shape[0])
    v /= np.linalg.norm(v)
    rho = 0.0
    for _ in range(max_iter):
        w = gram @ v
        rho = float(v @ w)
        if rho > 0.0 and np.linalg.norm(w - rho * v) <= tol * rho:
            return rho
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start landed in the null space; redraw
            v = rng.standard_normal(gram.shape[0])
            v /= np.linalg.norm(v)
            continue
        v = w / nw
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations (rho={rho:.6g})",
        last=v,
        iteration=max_iter,
    )


def soft_threshold(x, t):
    """``sgn(x) * max(|x| - t, 0)``; works elementwise on arrays.

    Entries with ``|x| == t`` map exactly to zero.
    """
    if np.any(np.asarray(t) < 0):
        raise ArgumentError(f"threshold must be non-negative, got {t}")
    # "+ 0.0" turns the -0.0 produced for small negative inputs into 0.0
    if np.isscalar(x) and np.isscalar(t):
        return float(np.sign(x) * max(abs(x) - t, 0.0)) + 0.0
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0) + 0.0
