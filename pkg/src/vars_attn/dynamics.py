"""Forward-Euler integration of the linear, encoder-decoder and sparse recurrent dynamics.

Each integrator returns a :class:`DynamicsState` whose trajectory log holds,
per Euler step, the time, the infinity norms of dz/dt and du/dt, and an energy
value ``E``:

* linear:  ``E(z) = 1/2 z'(I - A)z - x'z``          (the flow is ``-grad E``)
* encdec:  ``E(z, u) = 1/2|z|^2 + 1/2|u|^2 - z'Pu - x'z``
* sparse:  ``E(g(u)) = 1/2|P g(u) - x|^2 + lam |g(u)|_1``, the lasso objective
  of the gated code. With the threshold of ``g`` at ``lam / 2`` this is the
  value of :func:`energy` at ``(P, x, g(u), lam / 2)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .errors import ArgumentError, DimensionError, InstabilityError
from .tensor import as_matrix, as_vector, spectral_norm_sq

DIVERGENCE_LIMIT = 1e12
# Tolerated per-step energy increase before a trajectory is reported as non-monotone.
ENERGY_SLACK = 1e-9


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 0.01
    t_max: float = 200.0
    alpha: float = 1.0
    beta: float = 2.0
    gamma: float = 2.0
    lam: float = 0.3
    equilibrium_tol: float = 1e-8
    record: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ArgumentError(f"dt must be positive, got {self.dt}")
        if not self.t_max >= 0:
            raise ArgumentError(f"t_max must be >= 0, got {self.t_max}")
        if self.lam < 0:
            raise ArgumentError(f"lambda must be >= 0, got {self.lam}")

    @classmethod
    def vars_preset(cls, lam: float = 0.3, **kw) -> "IntegratorConfig":
        """alpha = 1, beta = gamma = 2: the constants under which the sparse
        dynamics settle on the lasso solution."""
        return cls(alpha=1.0, beta=2.0, gamma=2.0, lam=lam, **kw)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    def but(self, **kw) -> "IntegratorConfig":
        return replace(self, **kw)


@dataclass
class Trajectory:
    t: np.ndarray
    dz_norm: np.ndarray
    du_norm: np.ndarray
    energy: np.ndarray

    def rows(self):
        return zip(self.t, self.dz_norm, self.du_norm, self.energy)

    def max_energy_increase(self) -> float:
        if self.energy.size < 2:
            return 0.0
        return float(np.max(np.diff(self.energy)))


@dataclass
class DynamicsState:
    z: np.ndarray
    u: np.ndarray
    t: float
    steps: int
    converged: bool
    trajectory: Trajectory | None = None
    spectral_radius: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def gated(self) -> np.ndarray:
        """g(u) for sparse runs; plain u otherwise."""
        return self.extra.get("gated", self.u)

    @property
    def energy_monotone(self) -> bool:
        if self.trajectory is None:
            return True
        return self.trajectory.max_energy_increase() <= ENERGY_SLACK


def gate(u, lam: float) -> np.ndarray:
    """Thresholding activation ``sgn(u) * (|u| - lam/2)_+``."""
    th = 0.5 * lam
    return u - np.clip(u, -th, th)


def energy(p, x, code, lam: float) -> float:
    """Lyapunov energy ``1/2 |P code - x|^2 + 2 lam |code|_1``.

    This is the lasso objective at sparsity weight ``2 lam``; it pairs with a
    gate whose threshold is ``lam``.
    """
    p = as_matrix(p, "p")
    x = as_vector(x, "x")
    code = as_vector(code, "code")
    if p.shape != (x.shape[0], code.shape[0]):
        raise DimensionError(f"shapes P{p.shape}, x{x.shape}, code{code.shape} are inconsistent")
    r = p @ code - x
    return float(0.5 * (r @ r) + 2.0 * lam * np.abs(code).sum())


def _radius(m: np.ndarray) -> float:
    # symmetric PSD input: sigma_max(m) == rho(m)
    return math.sqrt(spectral_norm_sq(m)) if m.size else 0.0


ENERGY_LINEAR, ENERGY_ENCDEC, ENERGY_SPARSE = 0, 1, 2


@njit(cache=True)
def _euler_kernel(jac, drive, leak, w, d, threshold, x, lam, energy_kind, n_steps, dt, tol, limit, record, log):
    """Integrate ``dw/dt = jac @ h(w) + drive - leak * w`` in place.

    ``h`` copies ``z = w[:d]`` and, when ``threshold >= 0``, soft-thresholds
    ``u = w[d:]``. Each visited state writes (t, |dz|_inf, |du|_inf, E) into
    ``log`` when ``record``. Returns (steps, status): status 1 = equilibrium,
    0 = reached t_max, -1 = diverged.
    """
    n = w.shape[0]
    h = np.empty(n)
    jh = np.empty(n)
    dw = np.empty(n)
    k = 0
    while True:
        for i in range(n):
            v = w[i]
            if i >= d and threshold >= 0.0:
                if v > threshold:
                    v = v - threshold
                elif v < -threshold:
                    v = v + threshold
                else:
                    v = 0.0
            h[i] = v
        ndz = 0.0
        ndu = 0.0
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += jac[i, j] * h[j]
            jh[i] = acc
            dw[i] = acc + drive[i] - leak[i] * w[i]
            a = abs(dw[i])
            if i < d:
                if a > ndz:
                    ndz = a
            elif a > ndu:
                ndu = a
        if record:
            e = 0.0
            if energy_kind == 0:
                for i in range(n):
                    e += 0.5 * (w[i] * w[i] - w[i] * jh[i]) - x[i] * w[i]
            elif energy_kind == 1:
                for i in range(n):
                    e += 0.5 * w[i] * w[i]
                for i in range(d):
                    e -= w[i] * jh[i] + x[i] * w[i]
            else:
                for i in range(d):
                    r = jh[i] - x[i]
                    e += 0.5 * r * r
                for i in range(d, n):
                    e += lam * abs(h[i])
            log[k, 0] = k * dt
            log[k, 1] = ndz
            log[k, 2] = ndu
            log[k, 3] = e
        if ndz < tol and ndu < tol:
            return k, 1
        if k >= n_steps:
            return k, 0
        big = 0.0
        for i in range(n):
            w[i] += dt * dw[i]
            a = abs(w[i])
            if not a <= big:  # also true for NaN, which then fails the limit test
                big = a
        k += 1
        if not big <= limit:
            return k, -1


def _euler(kind, jac, drive, leak, w, d, cfg, energy_kind, threshold=-1.0, x=None, lam=0.0, rho=None):
    """Run the compiled Euler loop on the stacked state ``w = [z; u]``.

    The equilibrium test is ``max |dz/dt| < tol`` and ``max |du/dt| < tol``.
    """
    n = w.shape[0]
    jac = np.ascontiguousarray(jac, dtype=np.float64)
    leak = np.broadcast_to(np.asarray(leak, dtype=np.float64), (n,)).copy()
    drive = np.ascontiguousarray(drive, dtype=np.float64)
    x = np.zeros(0) if x is None else np.ascontiguousarray(x, dtype=np.float64)
    n_steps = cfg.n_steps
    log = np.empty((n_steps + 1 if cfg.record else 1, 4))
    k, status = _euler_kernel(jac, drive, leak, w, d, float(threshold), x, float(lam), energy_kind,
                              n_steps, float(cfg.dt), float(cfg.equilibrium_tol), DIVERGENCE_LIMIT,
                              bool(cfg.record), log)
    if status < 0:
        raise InstabilityError(
            f"{kind} dynamics diverged at step {k} (spectral radius estimate {rho:.4g})",
            spectral_radius=rho,
            iteration=k,
        )
    traj = None
    if cfg.record:
        rows = log[: k + 1]
        traj = Trajectory(rows[:, 0].copy(), rows[:, 1].copy(), rows[:, 2].copy(), rows[:, 3].copy())
    return w, k, status == 1, traj


def integrate_linear_recurrent(a, x, z0=None, cfg: IntegratorConfig | None = None) -> DynamicsState:
    """Euler integration of ``dz/dt = -z + A z + x`` from ``z0`` (default 0)."""
    cfg = cfg or IntegratorConfig()
    a = as_matrix(a, "a")
    x = as_vector(x, "x")
    n = x.shape[0]
    if a.shape != (n, n):
        raise DimensionError(f"A must be {n}x{n}, got {a.shape}")
    z = np.zeros(n) if z0 is None else as_vector(z0, "z0").copy()
    if z.shape != (n,):
        raise DimensionError(f"z0 must have length {n}")
    rho = _radius(a)
    if rho >= 1.0:
        warnings.warn(f"spectral radius of A is {rho:.4g} >= 1; no bounded equilibrium", RuntimeWarning)

    z, k, ok, traj = _euler("linear", a, x, 1.0, z, n, cfg, ENERGY_LINEAR, x=x, rho=rho)
    return DynamicsState(z=z, u=np.zeros(0), t=k * cfg.dt, steps=k, converged=ok,
                         trajectory=traj, spectral_radius=rho)


def _stack(p, x, z0, u0, z_default):
    p = as_matrix(p, "p")
    x = as_vector(x, "x")
    d, m = p.shape
    if d != x.shape[0]:
        raise DimensionError(f"P has {d} rows, x has length {x.shape[0]}")
    z = z_default if z0 is None else as_vector(z0, "z0")
    u = np.zeros(m) if u0 is None else as_vector(u0, "u0")
    if z.shape != (d,) or u.shape != (m,):
        raise DimensionError(f"initial state shapes {z.shape}, {u.shape} do not match P{p.shape}")
    return p, x, d, m, np.concatenate([z, u])


def integrate_encoder_decoder(p, x, cfg: IntegratorConfig | None = None, z0=None, u0=None) -> DynamicsState:
    """Euler integration of ``dz/dt = -z + P u + x``, ``du/dt = -u + P' z`` from zero."""
    cfg = cfg or IntegratorConfig()
    p, x, d, m, w = _stack(p, x, z0, u0, np.zeros(len(np.atleast_1d(x))))
    rho = spectral_norm_sq(p) if p.size else 0.0  # rho(P P') = sigma_max(P)^2
    if rho >= 1.0:
        warnings.warn(f"spectral radius of P P' is {rho:.4g} >= 1; no bounded equilibrium", RuntimeWarning)
    jac = np.zeros((d + m, d + m))
    jac[:d, d:] = p
    jac[d:, :d] = p.T
    drive = np.concatenate([x, np.zeros(m)])

    w, k, ok, traj = _euler("encoder-decoder", jac, drive, 1.0, w, d, cfg, ENERGY_ENCDEC, x=x, rho=rho)
    return DynamicsState(z=w[:d].copy(), u=w[d:].copy(), t=k * cfg.dt, steps=k, converged=ok,
                         trajectory=traj, spectral_radius=rho)


def integrate_sparse_dynamics(p, x, cfg: IntegratorConfig | None = None, z0=None, u0=None) -> DynamicsState:
    """Euler integration of the gated encoder-decoder with lateral inhibition::

        dz/dt = -alpha z + P g(u) + x
        du/dt = -beta u - gamma (P'P - I) g(u) + P' z

    ``g`` thresholds at ``cfg.lam / 2``. The default start is ``z = x, u = 0``.
    With the preset constants, ``g(u*)`` solves the lasso at weight
    ``cfg.lam`` and ``z* = P g(u*) + x``.
    """
    cfg = cfg or IntegratorConfig.vars_preset()
    p, x, d, m, w = _stack(p, x, z0, u0, np.asarray(x, dtype=float))
    rho = spectral_norm_sq(p) if p.size else 0.0
    lam = cfg.lam
    jac = np.zeros((d + m, d + m))
    jac[:d, d:] = p
    jac[d:, :d] = p.T
    jac[d:, d:] = -cfg.gamma * (p.T @ p - np.eye(m))
    drive = np.concatenate([x, np.zeros(m)])
    leak = np.concatenate([np.full(d, cfg.alpha), np.full(m, cfg.beta)])

    w, k, ok, traj = _euler("sparse", jac, drive, leak, w, d, cfg, ENERGY_SPARSE,
                            threshold=0.5 * lam, x=x, lam=lam, rho=rho)
    u = w[d:].copy()
    state = DynamicsState(z=w[:d].copy(), u=u, t=k * cfg.dt, steps=k, converged=ok,
                          trajectory=traj, spectral_radius=rho, extra={"gated": gate(u, lam)})
    if traj is not None:
        rise = traj.max_energy_increase()
        state.extra["max_energy_increase"] = rise
        if rise > ENERGY_SLACK:
            warnings.warn(f"energy rose by {rise:.3g} within one step (slack {ENERGY_SLACK})", RuntimeWarning)
    return state
