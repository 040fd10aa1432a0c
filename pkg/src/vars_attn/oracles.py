"""Slow, independent reference computations used to validate the fast paths.

Nothing here calls into the solver, dynamics or attention modules.
"""
from __future__ import annotations

import itertools

import numpy as np


def naive_matmul(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    n, k = a.shape
    k2, m = b.shape
    assert k == k2
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += a[i, t] * b[t, j]
            out[i, j] = s
    return out


def jacobi_eigenvalues(s, tol: float = 1e-15, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending."""
    a = np.array(s, dtype=float)
    n = a.shape[0]
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * max(1.0, np.abs(np.diag(a)).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t * t + 1)
                sn = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q], rot[q, p] = sn, -sn
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))


def gauss_solve(a, b) -> np.ndarray:
    """Gaussian elimination with partial pivoting; ``b`` may be a vector or matrix."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    vec = b.ndim == 1
    if vec:
        b = b[:, None]
    n = a.shape[0]
    m = np.hstack([a, b])
    for col in range(n):
        piv = col + int(np.argmax(np.abs(m[col:, col])))
        if m[piv, col] == 0.0:
            raise np.linalg.LinAlgError("singular matrix")
        m[[col, piv]] = m[[piv, col]]
        for r in range(col + 1, n):
            m[r] -= (m[r, col] / m[col, col]) * m[col]
    x = np.zeros_like(b)
    for r in range(n - 1, -1, -1):
        x[r] = (m[r, n:] - m[r, r + 1 : n] @ x[r + 1 :]) / m[r, r]
    return x[:, 0] if vec else x


def correlate2d_loop(img, kernel) -> np.ndarray:
    """Zero-padded 'same' cross-correlation, kernel centre at ``k // 2``."""
    img = np.asarray(img, float)
    kernel = np.asarray(kernel, float)
    h, w = img.shape
    kh, kw = kernel.shape
    out = np.zeros((h, w))
    for r in range(h):
        for c in range(w):
            s = 0.0
            for a in range(kh):
                for b in range(kw):
                    rr, cc = r + a - kh // 2, c + b - kw // 2
                    if 0 <= rr < h and 0 <= cc < w:
                        s += kernel[a, b] * img[rr, cc]
            out[r, c] = s
    return out


def lasso_enumeration(p, x, lam: float):
    """Exact lasso minimiser by enumerating every sign/zero pattern.

    For each pattern the equality part of the optimality conditions,
    ``P_S' P_S u_S = P_S' x - lam s_S``, is solved; sign-consistent solutions
    are feasible points and the cheapest is the optimum. Cost is 3**width.
    """
    p = np.asarray(p, float)
    x = np.asarray(x, float)
    m = p.shape[1]

    def obj(u):
        r = p @ u - x
        return 0.5 * r @ r + lam * np.abs(u).sum()

    best_u = np.zeros(m)
    best = obj(best_u)
    for signs in itertools.product((-1, 0, 1), repeat=m):
        s = np.array(signs, dtype=float)
        sup = np.flatnonzero(s)
        if sup.size == 0:
            continue
        ps = p[:, sup]
        g = ps.T @ ps
        rhs = ps.T @ x - lam * s[sup]
        try:
            us = gauss_solve(g, rhs)
        except np.linalg.LinAlgError:
            us = np.linalg.lstsq(g, rhs, rcond=None)[0]
        if np.any(us * s[sup] < 0):
            continue
        u = np.zeros(m)
        u[sup] = us
        f = obj(u)
        if f < best:
            best, best_u = f, u
    return best_u, best


def least_squares_projection(phi, x) -> np.ndarray:
    """``phi (phi' phi)^-1 phi' x`` via the normal equations."""
    phi = np.asarray(phi, float)
    coef = gauss_solve(phi.T @ phi, phi.T @ np.asarray(x, float))
    return phi @ coef


def central_difference(f, arr: np.ndarray, index, h: float = 1e-5) -> float:
    """``(f(arr + h e) - f(arr - h e)) / 2h`` for the entry at ``index``."""
    up = arr.copy()
    dn = arr.copy()
    up[index] += h
    dn[index] -= h
    return (f(up) - f(dn)) / (2 * h)
