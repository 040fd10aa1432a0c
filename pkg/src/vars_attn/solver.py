"""ISTA for the lasso ``min 1/2 ||P u - x||^2 + lam ||u||_1``."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ArgumentError, DimensionError, NumericError
from .tensor import LIPSCHITZ_SAFETY, as_matrix, as_vector, soft_threshold, spectral_norm_sq

DEFAULT_LAMBDA = 0.3
DEFAULT_STEPS = 3
DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    """Either ``steps`` (fixed unrolled iterations) or ``tol`` (run to convergence).

    ``init`` is ``"encode"`` (start from ``P.T @ x``) or ``"zero"``.
    """

    lam: float = DEFAULT_LAMBDA
    steps: int | None = DEFAULT_STEPS
    tol: float | None = None
    step_scale: float = 1.0
    max_iter: int = 100_000
    init: str = "encode"

    def __post_init__(self):
        if (self.steps is None) == (self.tol is None):
            raise ArgumentError("exactly one of steps / tol must be set")
        if self.lam < 0:
            raise ArgumentError(f"lambda must be >= 0, got {self.lam}")
        if self.steps is not None and self.steps < 0:
            raise ArgumentError(f"steps must be >= 0, got {self.steps}")
        if self.tol is not None and not self.tol > 0:
            raise ArgumentError(f"tol must be > 0, got {self.tol}")
        if not 0 < self.step_scale <= 1:
            raise ArgumentError(f"step_scale must lie in (0, 1], got {self.step_scale}")
        if self.init not in ("encode", "zero"):
            raise ArgumentError(f"unknown init {self.init!r}")

    @classmethod
    def converge(cls, lam: float = DEFAULT_LAMBDA, tol: float = DEFAULT_TOL, **kw) -> "SolverConfig":
        return cls(lam=lam, steps=None, tol=tol, **kw)

    @property
    def fixed_steps(self) -> bool:
        return self.steps is not None

    def with_lambda(self, lam: float) -> "SolverConfig":
        return replace(self, lam=lam)


@dataclass
class SparseCode:
    code: np.ndarray
    objective_trace: np.ndarray  # objective at the initial code, then after every update
    support_size: int
    converged: bool
    iterations: int = 0
    lipschitz: float = 0.0
    effective_lambda: float = 0.0
    extra: dict = field(default_factory=dict)


def lasso_objective(dict_atoms, x, code, lam: float) -> float:
    p, x, code = _check(dict_atoms, x, code)
    r = p @ code - x
    return float(0.5 * (r @ r) + lam * np.abs(code).sum())


def kkt_residual(dict_atoms, x, code, lam: float) -> float:
    """Largest violation of the lasso subgradient optimality conditions."""
    p, x, code = _check(dict_atoms, x, code)
    grad = p.T @ (p @ code - x)
    on = code != 0
    viol = np.where(on, np.abs(grad + lam * np.sign(code)), np.maximum(0.0, np.abs(grad) - lam))
    return float(viol.max()) if viol.size else 0.0


def _check(dict_atoms, x, code=None):
    p = as_matrix(dict_atoms, "dict_atoms")
    x = as_vector(x, "x")
    if p.shape[0] != x.shape[0]:
        raise DimensionError(f"dictionary has {p.shape[0]} rows, signal has length {x.shape[0]}")
    if code is None:
        return p, x
    code = as_vector(code, "code")
    if code.shape[0] != p.shape[1]:
        raise DimensionError(f"code length {code.shape[0]} != dictionary width {p.shape[1]}")
    return p, x, code


def lipschitz_constant(dict_atoms) -> float:
    """Safety-inflated largest eigenvalue of ``P.T @ P``."""
    return LIPSCHITZ_SAFETY * spectral_norm_sq(dict_atoms)


def ista_step(gram, ptx, code, lam, step):
    return soft_threshold(code - step * (gram @ code - ptx), lam * step)


def ista_solve(dict_atoms, x, cfg: SolverConfig, lipschitz: float | None = None) -> SparseCode:
    """Plain ISTA starting from ``P.T @ x`` (or zero, per ``cfg.init``).

    In tol mode the loop stops once the objective decrease and the largest
    coordinate change of the code both fall below ``cfg.tol``.
    """
    p, x = _check(dict_atoms, x)
    if p.size == 0:
        raise DimensionError("empty dictionary")
    L = lipschitz_constant(p) if lipschitz is None else float(lipschitz)
    gram = p.T @ p
    ptx = p.T @ x
    u = ptx.copy() if cfg.init == "encode" else np.zeros(p.shape[1])

    def objective(c):
        r = p @ c - x
        return 0.5 * (r @ r) + cfg.lam * np.abs(c).sum()

    trace = [objective(u)]
    if L == 0.0:
        # all-zero dictionary: every code reconstructs 0, zero is the optimum
        u = np.zeros(p.shape[1])
        return SparseCode(u, np.array([objective(u)]), 0, True, 0, 0.0, cfg.lam)

    step = cfg.step_scale / L
    limit = cfg.steps if cfg.fixed_steps else cfg.max_iter
    converged = cfg.fixed_steps
    it = 0
    for it in range(1, limit + 1):
        new = ista_step(gram, ptx, u, cfg.lam, step)
        f = objective(new)
        if not np.isfinite(f):
            raise NumericError(f"non-finite objective at ISTA iteration {it}", iteration=it)
        change = np.abs(new - u).max()
        drop = trace[-1] - f
        u = new
        trace.append(f)
        if not cfg.fixed_steps and drop < cfg.tol and change < cfg.tol:
            converged = True
            break
    return SparseCode(
        code=u,
        objective_trace=np.array(trace),
        support_size=int(np.count_nonzero(u)),
        converged=converged,
        iterations=it,
        lipschitz=L,
        effective_lambda=cfg.lam,
    )
