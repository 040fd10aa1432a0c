"""Attention from recurrent sparse reconstruction: ISTA-based attention
operators, the recurrent dynamics they come from, and a toy saliency model."""

from .attention import (
    AttentionOutput,
    TokenMatrix,
    linear_attention_euler_step,
    saliency_map,
    self_attention_baseline,
    vars_backward,
    vars_d,
    vars_s,
    vars_sd,
    vars_unrolled,
)
from .dictionary import (
    CombinedDictionary,
    DynamicDictionary,
    StaticDictionary,
    bar_kernel,
    build_dynamic,
    build_static,
    combine,
    gabor_kernel,
    normalize_atoms,
)
from .dynamics import (
    DynamicsState,
    IntegratorConfig,
    energy,
    integrate_encoder_decoder,
    integrate_linear_recurrent,
    integrate_sparse_dynamics,
)
from .errors import *  # noqa: F401,F403
from .solver import SolverConfig, SparseCode, ista_solve, kkt_residual, lasso_objective
from .tensor import matmul, soft_threshold, spectral_norm_sq
from .toy import BarGrid, RecurrentSpec, build_toy_weights, saliency_ratio, simulate_toy

__version__ = "0.1.0"
