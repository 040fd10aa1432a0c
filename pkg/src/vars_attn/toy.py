"""Orientation-tuned bars on a grid with hand-wired contour excitation and
iso-orientation flanker inhibition.

Orientation 0 is vertical. Only vertical bars are wired: each excites its
vertical neighbours by ``alpha / 2`` and, in ``excitation_and_inhibition``
mode, inhibits its horizontal neighbours by ``beta / 2``. Units are the
occupied cells in row-major order.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import DIVERGENCE_LIMIT, IntegratorConfig
from .errors import ArgumentError, InstabilityError

ORIENTATIONS = (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4)
MODES = ("excitation_only", "excitation_and_inhibition")
BOUNDARIES = ("torus", "open")

# Toy runs converge slowly when alpha approaches 1 (rate 1 - alpha); Euler stays
# stable for dt < 2 / (1 + alpha + beta).
TOY_CONFIG = IntegratorConfig(dt=0.05, t_max=2000.0, equilibrium_tol=1e-9)


@dataclass(frozen=True)
class BarGrid:
    orientation: np.ndarray  # (h, w) angles in radians, NaN for empty cells
    b: float = 1.0
    boundary: str = "torus"

    def __post_init__(self):
        o = np.array(self.orientation, dtype=float)
        if o.ndim != 2 or o.size == 0:
            raise ArgumentError(f"orientation must be a non-empty 2-D array, got shape {o.shape}")
        if not self.b > 0:
            raise ArgumentError(f"input drive b must be positive, got {self.b}")
        if self.boundary not in BOUNDARIES:
            raise ArgumentError(f"boundary must be one of {BOUNDARIES}")
        object.__setattr__(self, "orientation", o)

    @property
    def shape(self) -> tuple[int, int]:
        return self.orientation.shape

    @property
    def occupied(self) -> np.ndarray:
        return ~np.isnan(self.orientation)

    @property
    def vertical(self) -> np.ndarray:
        # isclose on NaN is False, so empty cells drop out
        return np.isclose(self.orientation, 0.0)

    def unit_index(self) -> np.ndarray:
        """(h, w) map from cell to unit number, -1 where empty."""
        idx = np.full(self.shape, -1)
        occ = self.occupied
        idx[occ] = np.arange(int(occ.sum()))
        return idx


@dataclass(frozen=True)
class RecurrentSpec:
    alpha: float = 0.5
    beta: float = 0.0
    mode: str = "excitation_and_inhibition"

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ArgumentError("alpha and beta must be non-negative")
        if self.mode not in MODES:
            raise ArgumentError(f"mode must be one of {MODES}")

    @property
    def inhibition(self) -> float:
        return self.beta if self.mode == "excitation_and_inhibition" else 0.0


def _neighbours(grid: BarGrid):
    """Yield (weight-kind, dr, dc) for the wired offsets."""
    yield "exc", 1, 0
    yield "exc", -1, 0
    yield "inh", 0, 1
    yield "inh", 0, -1


def build_toy_weights(grid: BarGrid, spec: RecurrentSpec) -> np.ndarray:
    """Dense recurrent weight matrix over the occupied units.

    On small tori an offset can wrap onto the same partner twice (or onto the
    unit itself); contributions then accumulate.
    """
    h, w = grid.shape
    idx = grid.unit_index()
    vert = grid.vertical
    n = int(grid.occupied.sum())
    a = np.zeros((n, n))
    wts = {"exc": spec.alpha / 2, "inh": -spec.inhibition / 2}
    torus = grid.boundary == "torus"
    for r, c in zip(*np.nonzero(vert)):
        for kind, dr, dc in _neighbours(grid):
            rr, cc = r + dr, c + dc
            if torus:
                rr, cc = rr % h, cc % w
            elif not (0 <= rr < h and 0 <= cc < w):
                continue
            if vert[rr, cc] and wts[kind] != 0.0:
                a[idx[r, c], idx[rr, cc]] += wts[kind]
    return a


def _shift(f: np.ndarray, dr: int, dc: int, torus: bool) -> np.ndarray:
    """out[r, c] = f[r + dr, c + dc], wrapping or zero-padding."""
    if torus:
        return np.roll(f, (-dr, -dc), axis=(0, 1))
    out = np.zeros_like(f)
    h, w = f.shape
    out[max(0, -dr) : h - max(0, dr), max(0, -dc) : w - max(0, dc)] = f[
        max(0, dr) : h - max(0, -dr), max(0, dc) : w - max(0, -dc)
    ]
    return out


def recurrent_input(grid: BarGrid, spec: RecurrentSpec, field: np.ndarray) -> np.ndarray:
    """``A z`` evaluated as a stencil on the (h, w) field.

    Every cell performs the same arithmetic in the same order, so scenes with
    translational symmetry keep it exactly.
    """
    torus = grid.boundary == "torus"
    v = np.where(grid.vertical, field, 0.0)
    exc = _shift(v, 1, 0, torus) + _shift(v, -1, 0, torus)
    inh = _shift(v, 0, 1, torus) + _shift(v, 0, -1, torus)
    out = (spec.alpha / 2) * exc - (spec.inhibition / 2) * inh
    return np.where(grid.vertical, out, 0.0)


def simulate_toy(grid: BarGrid, spec: RecurrentSpec, cfg: IntegratorConfig | None = None) -> np.ndarray:
    """Euler-integrate ``dz/dt = -z + A z + b`` from rest; returns the per-unit outputs.

    Warns when the largest eigenvalue of ``A`` reaches 1: the linear dynamics
    then have unstable modes, and only symmetric scenes reach their
    symmetric equilibrium.
    """
    cfg = cfg or TOY_CONFIG
    a = build_toy_weights(grid, spec)
    if a.size:
        top = float(np.linalg.eigvalsh(a).max())
        if top >= 1.0:
            warnings.warn(f"largest eigenvalue of the toy weights is {top:.4g} >= 1", RuntimeWarning)
    drive = np.where(grid.occupied, grid.b, 0.0)
    z = np.zeros(grid.shape)
    dt, tol = cfg.dt, cfg.equilibrium_tol
    for k in range(cfg.n_steps + 1):
        dz = recurrent_input(grid, spec, z) - z + drive
        if np.abs(dz).max() < tol or k == cfg.n_steps:
            break
        z += dt * dz
        if not np.abs(z).max() <= DIVERGENCE_LIMIT:
            raise InstabilityError(f"toy dynamics diverged at step {k + 1}", iteration=k + 1)
    return z[grid.occupied]


def saliency_ratio(outputs, contour_units, background_units) -> float:
    """Mean output over the contour units divided by the mean over the background."""
    outputs = np.asarray(outputs, dtype=float)
    contour_units = np.asarray(list(contour_units), dtype=int)
    background_units = np.asarray(list(background_units), dtype=int)
    if contour_units.size == 0 or background_units.size == 0:
        raise ArgumentError("contour and background unit sets must be non-empty")
    return float(outputs[contour_units].mean() / outputs[background_units].mean())


@dataclass(frozen=True)
class Scene:
    grid: BarGrid
    contour_units: np.ndarray
    background_units: np.ndarray


def make_scene(kind: str, shape=(9, 9), b: float = 1.0, boundary: str = "torus", seed: int = 42) -> Scene:
    """Build one of the demo scenes.

    ``contour``: the middle column is vertical, every other cell gets a random
    non-vertical bar. ``texture``: every cell is vertical. ``random``: random
    orientations everywhere, vertical included. The contour set is always the
    middle column.
    """
    h, w = shape
    rng = np.random.default_rng(seed)
    mid = w // 2
    if kind == "contour":
        o = rng.choice(ORIENTATIONS[1:], size=(h, w))
        o[:, mid] = 0.0
    elif kind == "texture":
        o = np.zeros((h, w))
    elif kind == "random":
        o = rng.choice(ORIENTATIONS, size=(h, w))
    else:
        raise ArgumentError(f"unknown scene {kind!r}")
    grid = BarGrid(o, b=b, boundary=boundary)
    idx = grid.unit_index()
    in_contour = np.zeros(shape, dtype=bool)
    in_contour[:, mid] = True
    return Scene(grid, idx[in_contour & grid.occupied], idx[~in_contour & grid.occupied])


def outputs_to_image(grid: BarGrid, outputs) -> np.ndarray:
    """Scatter per-unit outputs back onto the (h, w) grid; empty cells get 0."""
    img = np.zeros(grid.shape)
    img[grid.occupied] = outputs
    return img
