"""Executable acceptance criteria and property suites.

Each check returns a :class:`CheckResult`; ``run_suite`` collects them for the
``check`` subcommand and the acceptance tests. Instances are drawn from a
seeded generator so every run sees the same problems.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import oracles
from .attention import (
    TokenMatrix,
    linear_attention_euler_step,
    self_attention_baseline,
    vars_backward,
    vars_d,
    vars_s,
    vars_sd,
    vars_unrolled,
    _unrolled,
)
from .dictionary import build_dynamic, build_static, combine, normalize_atoms, random_projection
from .dynamics import IntegratorConfig, integrate_encoder_decoder, integrate_linear_recurrent, integrate_sparse_dynamics
from .fixtures import DEFAULT_SEED, bar_noise_fixture, random_lasso_instance, random_small_instance, stable_factor
from .solver import SolverConfig, ista_solve, kkt_residual, lasso_objective, lipschitz_constant
from .tensor import matmul, soft_threshold, spectral_norm_sq
from .toy import RecurrentSpec, make_scene, saliency_ratio, simulate_toy


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status}  {self.name}: measured={self.measured:.3e} tol={self.tolerance:.1e} "
                f"({self.seconds:.2f}s) {self.detail}").rstrip()


def _timed(fn):
    def wrapper(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# -- acceptance criteria --------------------------------------------------------

TOY_SWEEP = [(0.0, 0.0), (0.45, 0.2), (0.5, 0.9), (0.9, 0.0), (0.9, 0.9)]


@_timed
def toy_closed_forms() -> CheckResult:
    """Contour -> b/(1-alpha), texture -> b/(1-alpha+beta) on a torus."""
    tol, b = 1e-6, 1.0
    worst = 0.0
    contour = make_scene("contour", (9, 9), b=b)
    texture = make_scene("texture", (9, 9), b=b)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for alpha, beta in TOY_SWEEP:
            spec = RecurrentSpec(alpha, beta)
            z = simulate_toy(contour.grid, spec)
            worst = max(worst, np.abs(z[contour.contour_units] - b / (1 - alpha)).max())
            worst = max(worst, np.abs(z[contour.background_units] - b).max())
            z = simulate_toy(texture.grid, spec)
            worst = max(worst, np.abs(z - b / (1 - alpha + beta)).max())
    res = CheckResult("1 toy closed forms", worst <= tol, worst, tol, f"{len(TOY_SWEEP)} (alpha, beta) points")
    return res


@lru_cache(maxsize=None)
def _ode_runs(n: int = 100, lam: float = 0.3, seed: int = DEFAULT_SEED):
    rng = np.random.default_rng(seed + 2)
    cfg = IntegratorConfig.vars_preset(lam=lam, t_max=5000.0)
    out = []
    for _ in range(n):
        p, x = random_small_instance(rng)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            state = integrate_sparse_dynamics(p, x, cfg)
        ref = ista_solve(p, x, SolverConfig.converge(lam))
        gap = lasso_objective(p, x, state.gated, lam) - lasso_objective(p, x, ref.code, lam)
        out.append((abs(gap), state.trajectory.max_energy_increase(), state.converged))
    return out


@_timed
def ode_sparse_equivalence() -> CheckResult:
    tol = 1e-5
    runs = _ode_runs()
    worst = max(g for g, _, _ in runs)
    all_settled = all(c for *_, c in runs)
    return CheckResult("2 ODE <-> sparse reconstruction", worst <= tol and all_settled, worst, tol,
                       f"{len(runs)} instances, {sum(c for *_, c in runs)} reached equilibrium")


@_timed
def lyapunov_descent() -> CheckResult:
    tol = 1e-9
    runs = _ode_runs()
    worst = max(r for _, r, _ in runs)
    return CheckResult("3 Lyapunov descent", worst <= tol, worst, tol, f"max per-step rise over {len(runs)} trajectories")


@_timed
def ista_oracle(n: int = 60, lam: float = 0.3, seed: int = DEFAULT_SEED) -> CheckResult:
    rng = np.random.default_rng(seed + 4)
    worst_obj = worst_kkt = 0.0
    for _ in range(n):
        m = int(rng.integers(1, 7))
        d = int(rng.integers(2, 9))
        p, x = random_lasso_instance(rng, d, m)
        sc = ista_solve(p, x, SolverConfig.converge(lam))
        _, best = oracles.lasso_enumeration(p, x, lam)
        worst_obj = max(worst_obj, abs(sc.objective_trace[-1] - best))
        worst_kkt = max(worst_kkt, kkt_residual(p, x, sc.code, lam))
    ok = worst_obj <= 1e-6 and worst_kkt <= 1e-8
    return CheckResult("4 ISTA vs enumeration", ok, worst_obj, 1e-6, f"KKT residual {worst_kkt:.2e} (tol 1e-8), {n} instances")


@_timed
def self_attention_special_case(n: int = 100, seed: int = DEFAULT_SEED) -> CheckResult:
    rng = np.random.default_rng(seed + 5)
    mismatched = 0
    for _ in range(n):
        N, C, F = (int(v) for v in rng.integers(1, 9, size=3))
        X = rng.standard_normal((N, C)) * 0.5
        W = random_projection(C, F, seed=int(rng.integers(2**31)))
        base = self_attention_baseline(X, W).output
        phi = build_dynamic(X, W).atoms
        step = linear_attention_euler_step(phi, X, X, 1.0)
        mismatched += not np.array_equal(base, step)
    return CheckResult("5 self-attention == one Euler step", mismatched == 0, float(mismatched), 0.0,
                       f"bitwise comparison over {n} token matrices")


@_timed
def reparameterization(n: int = 50, seed: int = DEFAULT_SEED) -> CheckResult:
    rng = np.random.default_rng(seed + 6)
    worst = 0.0
    for _ in range(n):
        d = int(rng.integers(1, 9))
        m = int(rng.integers(d, 9))
        p = stable_factor(rng, d, m, radius=float(rng.uniform(0.1, 0.8)))
        x = rng.standard_normal(d)
        zl = integrate_linear_recurrent(p @ p.T, x).z
        ed = integrate_encoder_decoder(p, x)
        direct = oracles.gauss_solve(np.eye(d) - p @ p.T, x)
        worst = max(worst, np.abs(zl - ed.z).max(), np.abs(zl - direct).max(), np.abs(ed.z - direct).max())
    return CheckResult("6 reparameterisation A = P P'", worst <= 1e-6, worst, 1e-6, f"{n} stable instances")


def gradient_check_instance(rng, steps: int = 3, lam: float = 0.3, n_coords: int = 20, h: float = 1e-5):
    """Worst relative FD error over ``n_coords`` coordinates of one random instance.

    Coordinates whose +-h perturbation flips a threshold decision are
    resampled, keeping the comparison on the smooth pieces.
    """
    grid = (3, 3)
    C = 2
    kernel = rng.standard_normal((3, 3))
    P = normalize_atoms(build_static(kernel, grid).atoms)
    X = rng.standard_normal((9, C))
    G = rng.standard_normal((9, C))
    cfg = SolverConfig(lam=lam, steps=steps)
    L = lipschitz_constant(P)
    gX, gP = vars_backward(X, P, cfg, G, lipschitz=L)

    def masks(Xv, Pv):
        return [m for _, _, m in _unrolled(Xv, Pv, cfg, L, keep=True)[1]]

    def smooth(Xa, Pa, Xb, Pb):
        return all(np.array_equal(a, b) for a, b in zip(masks(Xa, Pa), masks(Xb, Pb)))

    worst = 0.0
    done = tries = 0
    while done < n_coords and tries < 50 * n_coords:
        tries += 1
        if rng.random() < 0.5:
            idx = tuple(int(v) for v in rng.integers(0, X.shape))
            up, dn = X.copy(), X.copy()
            up[idx] += h
            dn[idx] -= h
            if not smooth(up, P, dn, P):
                continue
            fd = oracles.central_difference(lambda Xv: np.sum(G * vars_unrolled(Xv, P, cfg, L)), X, idx, h)
            an = gX[idx]
        else:
            idx = tuple(int(v) for v in rng.integers(0, P.shape))
            up, dn = P.copy(), P.copy()
            up[idx] += h
            dn[idx] -= h
            if not smooth(X, up, X, dn):
                continue
            fd = oracles.central_difference(lambda Pv: np.sum(G * vars_unrolled(X, Pv, cfg, L)), P, idx, h)
            an = gP[idx]
        worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), 1e-6))
        done += 1
    return worst, done


@_timed
def gradient_correctness(n: int = 10, seed: int = DEFAULT_SEED) -> CheckResult:
    rng = np.random.default_rng(seed + 7)
    worst = 0.0
    coords = 0
    for _ in range(n):
        w, done = gradient_check_instance(rng)
        worst = max(worst, w)
        coords += done
    ok = worst <= 1e-4 and coords >= 20 * n
    return CheckResult("7 backward vs finite differences", ok, worst, 1e-4, f"{coords} coordinates over {n} instances, k=3")


def _variant_instances(rng, n: int):
    for _ in range(n):
        grid = (4, 4)
        C, F = 3, 4
        X = rng.standard_normal((16, C)) * 0.5
        static = build_static(rng.standard_normal((3, 3)), grid)
        W = random_projection(C, F, seed=int(rng.integers(2**31)))
        combined = combine(static, build_dynamic(X, W))
        yield X, grid, static, W, combined


def _run_variant(name, X, grid, static, W, combined, cfg):
    tm = TokenMatrix(X, grid)
    if name == "s":
        return vars_s(tm, static, cfg)
    if name == "d":
        return vars_d(tm, W, cfg)
    return vars_sd(tm, combined, cfg)


@_timed
def identity_and_monotonicity(n: int = 5, seed: int = DEFAULT_SEED) -> CheckResult:
    rng = np.random.default_rng(seed + 8)
    identity_fail = 0
    worst_rise = 0.0
    fractions = (0.02, 0.05, 0.1, 0.25, 0.5, 0.9)
    for X, grid, static, W, combined in _variant_instances(rng, n):
        for name in ("s", "d", "sd"):
            probe = _run_variant(name, X, grid, static, W, combined, SolverConfig(lam=0.0, steps=0))
            atoms = probe.atoms
            weight = 2.0 if name == "d" else 1.0
            vanish = np.abs(atoms.T @ X).max() / weight
            out = _run_variant(name, X, grid, static, W, combined, SolverConfig.converge(1.01 * vanish))
            identity_fail += not np.array_equal(out.output, X)
            prev = None
            for f in fractions:
                res = _run_variant(name, X, grid, static, W, combined, SolverConfig.converge(f * vanish))
                l1 = np.abs(res.codes).sum(axis=0)
                if prev is not None:
                    worst_rise = max(worst_rise, float(np.max(l1 - prev)))
                prev = l1
    ok = identity_fail == 0 and worst_rise <= 1e-8
    return CheckResult("8 identity at sparsity / lambda monotonicity", ok, worst_rise, 1e-8,
                       f"{identity_fail} identity failures, {n} instances x 3 variants x {len(fractions)} lambdas")


@_timed
def saliency_demo(seed: int = DEFAULT_SEED) -> CheckResult:
    fx = bar_noise_fixture(seed)
    out = vars_s(TokenMatrix(fx.tokens, fx.grid), build_static(fx.kernel, fx.grid), SolverConfig())

    def bar_fraction(m):
        e = np.sum(m**2, axis=1)
        return e[fx.bar_tokens].sum() / e.sum()

    rec, inp = bar_fraction(out.reconstruction), bar_fraction(fx.tokens)
    ratio = saliency_ratio(out.saliency, fx.bar_tokens, fx.noise_tokens)
    again = vars_s(TokenMatrix(fx.tokens, fx.grid), build_static(fx.kernel, fx.grid), SolverConfig())
    deterministic = np.array_equal(again.output, out.output) and np.array_equal(bar_noise_fixture(seed).tokens, fx.tokens)
    ok = rec > inp and ratio > 1.0 and deterministic
    return CheckResult("9 saliency demonstration", ok, rec - inp, 0.0,
                       f"bar energy fraction {rec:.3f} vs input {inp:.3f}, saliency ratio {ratio:.3f}")


ACCEPTANCE = [
    toy_closed_forms,
    ode_sparse_equivalence,
    lyapunov_descent,
    ista_oracle,
    self_attention_special_case,
    reparameterization,
    gradient_correctness,
    identity_and_monotonicity,
    saliency_demo,
]

# -- lighter property suite ------------------------------------------------------


@_timed
def prop_core(seed: int = DEFAULT_SEED) -> CheckResult:
    rng = np.random.default_rng(seed + 20)
    worst = 0.0
    for _ in range(20):
        a, b, c = (rng.standard_normal(s) for s in [(4, 5), (5, 3), (3, 6)])
        worst = max(worst, np.abs(matmul(matmul(a, b), c) - matmul(a, matmul(b, c))).max())
        p = rng.standard_normal((6, 4))
        L = spectral_norm_sq(p)
        v = rng.standard_normal(4)
        worst = max(worst, (np.sum((p @ v) ** 2) / (v @ v)) - L)
        s, t = rng.standard_normal(2), abs(rng.standard_normal())
        worst = max(worst, abs(soft_threshold(-s[0], t) + soft_threshold(s[0], t)))
        worst = max(worst, abs(soft_threshold(s[0], t) - soft_threshold(s[1], t)) - abs(s[0] - s[1]))
    return CheckResult("core: associativity / power-iteration bound / shrinkage", worst <= 1e-10, worst, 1e-10)


@_timed
def prop_ista_descent(seed: int = DEFAULT_SEED) -> CheckResult:
    rng = np.random.default_rng(seed + 21)
    worst = 0.0
    for _ in range(20):
        p, x = random_lasso_instance(rng, 6, 4)
        sc = ista_solve(p, x, SolverConfig(lam=float(rng.uniform(0, 1)), steps=50))
        worst = max(worst, float(np.max(np.diff(sc.objective_trace))))
    return CheckResult("solver: ISTA objective non-increasing", worst <= 1e-12, worst, 1e-12)


@_timed
def prop_toy_linear(seed: int = DEFAULT_SEED) -> CheckResult:
    from .toy import build_toy_weights

    worst = 0.0
    for kind in ("contour", "random"):
        scene = make_scene(kind, (7, 7), seed=seed, boundary="open")
        spec = RecurrentSpec(0.4, 0.3)
        z = simulate_toy(scene.grid, spec)
        a = build_toy_weights(scene.grid, spec)
        worst = max(worst, np.abs((np.eye(len(z)) - a) @ z - scene.grid.b).max())
    return CheckResult("toy: equilibrium solves (I - A) z = b", worst <= 1e-8, worst, 1e-8)


PROPERTIES = [prop_core, prop_ista_descent, prop_toy_linear]

SUITES = {"acceptance": ACCEPTANCE, "properties": PROPERTIES}


def run_suite(name: str = "all") -> list[CheckResult]:
    if name == "all":
        checks = ACCEPTANCE + PROPERTIES
    else:
        checks = SUITES[name]
    return [check() for check in checks]
