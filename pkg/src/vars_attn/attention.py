"""VARS attention operators over token matrices, the linear self-attention
baseline, and reverse-mode gradients through the unrolled ISTA iterations.

Tokens are an ``(N, C)`` matrix. Every variant reconstructs each channel
``X[:, mu]`` sparsely over a dictionary with N rows and adds the input back::

    Z[:, mu] = P @ u_mu + X[:, mu]
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dictionary import CombinedDictionary, StaticDictionary, build_dynamic, normalize_atoms, token_hash
from .errors import ArgumentError, DimensionError
from .solver import SolverConfig, SparseCode, ista_solve, lipschitz_constant
from .tensor import as_matrix, soft_threshold


@dataclass(frozen=True)
class TokenMatrix:
    tokens: np.ndarray
    grid: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "tokens", as_matrix(self.tokens, "tokens"))
        if self.grid is not None:
            h, w = self.grid
            if h * w != self.tokens.shape[0]:
                raise DimensionError(f"grid {self.grid} does not hold {self.tokens.shape[0]} tokens")

    @property
    def n_tokens(self) -> int:
        return self.tokens.shape[0]

    @property
    def n_channels(self) -> int:
        return self.tokens.shape[1]


def as_tokens(x, grid=None) -> TokenMatrix:
    if isinstance(x, TokenMatrix):
        return x
    return TokenMatrix(np.asarray(x, dtype=float), grid)


@dataclass
class AttentionOutput:
    output: np.ndarray  # Z, (N, C)
    reconstruction: np.ndarray  # P U, (N, C)
    codes: np.ndarray  # U, (dict width, C)
    saliency: np.ndarray  # (N,)
    diagnostics: list[SparseCode] = field(default_factory=list)
    effective_lambda: float | None = None
    variant: str = ""
    atoms: np.ndarray | None = None


def saliency_map(out) -> np.ndarray:
    """Per-token reconstruction norm across channels, scaled so the maximum is 1.

    The attention map used for figures and the saliency checks; an all-zero
    reconstruction gives an all-zero map.
    """
    recon = out.reconstruction if isinstance(out, AttentionOutput) else np.asarray(out)
    s = np.linalg.norm(recon, axis=1)
    top = s.max() if s.size else 0.0
    return s / top if top > 0 else np.zeros_like(s)


def _reconstruct(x: TokenMatrix, atoms: np.ndarray, cfg: SolverConfig, lam: float, variant: str) -> AttentionOutput:
    X = x.tokens
    if atoms.shape[0] != X.shape[0]:
        raise DimensionError(f"dictionary has {atoms.shape[0]} rows for {X.shape[0]} tokens")
    ccfg = cfg.with_lambda(lam)
    L = lipschitz_constant(atoms)
    codes = np.zeros((atoms.shape[1], X.shape[1]))
    diags = []
    for mu in range(X.shape[1]):
        sc = ista_solve(atoms, X[:, mu], ccfg, lipschitz=L)
        codes[:, mu] = sc.code
        diags.append(sc)
    recon = atoms @ codes
    out = AttentionOutput(output=recon + X, reconstruction=recon, codes=codes, saliency=np.zeros(0),
                          diagnostics=diags, effective_lambda=lam, variant=variant, atoms=atoms)
    out.saliency = saliency_map(out)
    return out


def vars_s(x, dictionary: StaticDictionary, cfg: SolverConfig | None = None, normalize: bool = True) -> AttentionOutput:
    """Static-dictionary VARS: lasso weight ``lam``, atoms shared across channels."""
    cfg = cfg or SolverConfig()
    x = as_tokens(x, dictionary.grid)
    if x.grid is not None and tuple(x.grid) != tuple(dictionary.grid):
        raise DimensionError(f"token grid {x.grid} != dictionary grid {dictionary.grid}")
    atoms = normalize_atoms(dictionary.atoms) if normalize else dictionary.atoms
    return _reconstruct(x, atoms, cfg, cfg.lam, "s")


def vars_d(x, projection=None, cfg: SolverConfig | None = None, normalize: bool = True, seed: int = 0) -> AttentionOutput:
    """Dynamic-dictionary VARS over the random features of ``x``; lasso weight ``2 lam``."""
    cfg = cfg or SolverConfig()
    x = as_tokens(x)
    dyn = build_dynamic(x.tokens, projection, seed=seed)
    atoms = normalize_atoms(dyn.atoms) if normalize else dyn.atoms
    return _reconstruct(x, atoms, cfg, 2.0 * cfg.lam, "d")


def vars_sd(x, dictionary: CombinedDictionary, cfg: SolverConfig | None = None, normalize: bool = True) -> AttentionOutput:
    """VARS over the union of static and dynamic atoms; lasso weight ``lam``."""
    cfg = cfg or SolverConfig()
    x = as_tokens(x, dictionary.static_part.grid)
    if dictionary.dynamic_part.source_hash != token_hash(x.tokens):
        raise ArgumentError("dynamic atoms were built from different tokens")
    atoms = normalize_atoms(dictionary.atoms) if normalize else dictionary.atoms
    return _reconstruct(x, atoms, cfg, cfg.lam, "sd")


def self_attention_baseline(x, projection) -> AttentionOutput:
    """Linearised symmetric self-attention ``Z = Phi Phi' X + X`` with raw features."""
    x = as_tokens(x)
    phi = build_dynamic(x.tokens, projection).atoms
    codes = phi.T @ x.tokens
    recon = phi @ codes
    out = AttentionOutput(output=recon + x.tokens, reconstruction=recon, codes=codes,
                          saliency=np.zeros(0), variant="self-attention", atoms=phi)
    out.saliency = saliency_map(out)
    return out


def linear_attention_euler_step(phi, x, z, h: float = 1.0) -> np.ndarray:
    """One explicit Euler step of ``dZ/dt = -Z + Phi Phi' Z + X``.

    Written as ``(1 - h) Z + h (Phi Phi' Z + X)``, which is the same update
    with the leak folded into the first term.
    """
    phi = as_matrix(phi, "phi")
    x = as_matrix(x, "x")
    z = as_matrix(z, "z")
    return (1.0 - h) * z + h * (phi @ (phi.T @ z) + x)


# -- unrolled forward / backward ------------------------------------------------


def _unrolled(X, P, cfg: SolverConfig, L: float, keep: bool):
    step = cfg.step_scale / L
    thr = cfg.lam * step
    U = P.T @ X if cfg.init == "encode" else np.zeros((P.shape[1], X.shape[1]))
    tape = []
    for _ in range(cfg.steps):
        R = P @ U - X
        V = U - step * (P.T @ R)
        if keep:
            tape.append((U, R, np.abs(V) > thr))
        U = soft_threshold(V, thr)
    return U, tape


def vars_unrolled(x, dict_atoms, cfg: SolverConfig, lipschitz: float | None = None) -> np.ndarray:
    """``Z = P U_k + X`` after exactly ``cfg.steps`` ISTA updates, all channels at once."""
    if not cfg.fixed_steps:
        raise ArgumentError("unrolled evaluation needs a fixed-steps config")
    X = as_tokens(x).tokens
    P = as_matrix(dict_atoms, "dict_atoms")
    if P.shape[0] != X.shape[0]:
        raise DimensionError(f"dictionary has {P.shape[0]} rows for {X.shape[0]} tokens")
    L = lipschitz_constant(P) if lipschitz is None else lipschitz
    U, _ = _unrolled(X, P, cfg, L, keep=False)
    return P @ U + X


def vars_backward(x, dict_atoms, cfg: SolverConfig, grad_out, lipschitz: float | None = None):
    """Gradients of ``<grad_out, Z>`` w.r.t. the tokens and the atoms.

    ``Z`` is :func:`vars_unrolled`. ``L`` is held constant, and the soft
    threshold contributes slope 1 where ``|v| > threshold`` and 0 elsewhere
    (including exactly at the kink).
    """
    if not cfg.fixed_steps:
        raise ArgumentError("vars_backward supports fixed-steps (unrolled) configs only")
    X = as_tokens(x).tokens
    P = as_matrix(dict_atoms, "dict_atoms")
    G = as_matrix(grad_out, "grad_out")
    if P.shape[0] != X.shape[0]:
        raise DimensionError(f"dictionary has {P.shape[0]} rows for {X.shape[0]} tokens")
    if G.shape != X.shape:
        raise DimensionError(f"grad_out shape {G.shape} != token shape {X.shape}")
    L = lipschitz_constant(P) if lipschitz is None else lipschitz
    step = cfg.step_scale / L
    U, tape = _unrolled(X, P, cfg, L, keep=True)

    gX = G.copy()
    gP = G @ U.T
    gU = P.T @ G
    for U_prev, R, mask in reversed(tape):
        gV = gU * mask
        gX += step * (P @ gV)
        gP -= step * (R @ gV.T + P @ (gV @ U_prev.T))
        gU = gV - step * (P.T @ (P @ gV))
    if cfg.init == "encode":
        gX += P @ gU
        gP += X @ gU.T
    return gX, gP
