"""Static (translated-kernel), dynamic (random-feature) and combined dictionaries."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DegenerateAtomError, DimensionError, NumericRangeError
from .tensor import as_matrix

# Largest exponent admitted before exp() is considered an overflow risk.
EXP_LIMIT = 700.0


@dataclass(frozen=True)
class StaticDictionary:
    atoms: np.ndarray  # (N, N): column mu is the kernel centred on cell mu
    kernel: np.ndarray
    grid: tuple[int, int]


@dataclass(frozen=True)
class DynamicDictionary:
    atoms: np.ndarray  # (N, C'), strictly positive
    projection: np.ndarray  # (C, C')
    source_hash: str


@dataclass(frozen=True)
class CombinedDictionary:
    static_part: StaticDictionary
    dynamic_part: DynamicDictionary

    @property
    def atoms(self) -> np.ndarray:
        return np.hstack([self.static_part.atoms, self.dynamic_part.atoms])

    @property
    def n_static(self) -> int:
        return self.static_part.atoms.shape[1]

    def split(self, atoms: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Slice a combined atom matrix (default: our own) back into its two parts."""
        a = self.atoms if atoms is None else atoms
        return a[:, : self.n_static], a[:, self.n_static :]


def build_static(kernel, grid: tuple[int, int]) -> StaticDictionary:
    """One atom per grid cell: the kernel centred there, zero outside the grid.

    With this layout ``atoms.T @ img.ravel()`` is the zero-padded 'same'
    cross-correlation of ``img`` with ``kernel``. For even kernel sizes the
    centre is at index ``k // 2``.
    """
    kernel = as_matrix(kernel, "kernel")
    h, w = (int(g) for g in grid)
    kh, kw = kernel.shape
    if h < 1 or w < 1:
        raise ArgumentError(f"grid must be positive, got {grid}")
    if kh > h or kw > w:
        raise ArgumentError(f"kernel {kernel.shape} larger than grid {(h, w)}")
    ch, cw = kh // 2, kw // 2
    n = h * w
    atoms = np.zeros((n, n))
    for r in range(h):
        for c in range(w):
            col = r * w + c
            for a in range(kh):
                rr = r + a - ch
                if not 0 <= rr < h:
                    continue
                for b in range(kw):
                    cc = c + b - cw
                    if 0 <= cc < w:
                        atoms[rr * w + cc, col] = kernel[a, b]
    return StaticDictionary(atoms=atoms, kernel=kernel.copy(), grid=(h, w))


def token_hash(a: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(str(a.shape).encode())
    # + 0.0 folds -0.0 into 0.0 so equal arrays hash equally
    h.update((np.ascontiguousarray(a, dtype=np.float64) + 0.0).tobytes())
    return h.hexdigest()


def random_projection(n_channels: int, n_features: int, seed: int = 0) -> np.ndarray:
    """Gaussian feature weights, one column per random feature."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n_channels, n_features))


def positive_features(x: np.ndarray, projection: np.ndarray) -> np.ndarray:
    """exp(x W - |x|^2 / 2) / sqrt(C'), row-wise; raises before exp can overflow."""
    pre = x @ projection - 0.5 * np.sum(x * x, axis=1, keepdims=True)
    if pre.size and pre.max() > EXP_LIMIT:
        raise NumericRangeError(f"feature exponent {pre.max():.4g} exceeds {EXP_LIMIT}")
    return np.exp(pre) / np.sqrt(projection.shape[1])


def build_dynamic(x, projection=None, seed: int = 0, n_features: int | None = None) -> DynamicDictionary:
    """Positive random features of the tokens ``x`` (N x C).

    ``atoms @ atoms.T`` is an unbiased estimate of ``exp(x_i . x_j)`` when the
    projection columns are standard normal. If ``projection`` is omitted a
    Gaussian one with ``n_features`` columns (default C) is drawn from ``seed``.
    """
    x = as_matrix(x, "x")
    if projection is None:
        projection = random_projection(x.shape[1], n_features or x.shape[1], seed)
    projection = as_matrix(projection, "projection")
    if projection.shape[0] != x.shape[1]:
        raise DimensionError(f"projection has {projection.shape[0]} rows, tokens have {x.shape[1]} channels")
    atoms = positive_features(x, projection)
    return DynamicDictionary(atoms=atoms, projection=projection.copy(), source_hash=token_hash(x))


def combine(s: StaticDictionary, d: DynamicDictionary) -> CombinedDictionary:
    if s.atoms.shape[0] != d.atoms.shape[0]:
        raise DimensionError(f"static atoms have {s.atoms.shape[0]} rows, dynamic atoms {d.atoms.shape[0]}")
    return CombinedDictionary(static_part=s, dynamic_part=d)


def normalize_atoms(dict_atoms) -> np.ndarray:
    a = as_matrix(dict_atoms, "dict_atoms")
    norms = np.linalg.norm(a, axis=0)
    if np.any(norms == 0):
        bad = np.flatnonzero(norms == 0).tolist()
        raise DegenerateAtomError(f"zero atom column(s) {bad}")
    return a / norms


def gabor_kernel(size: int = 3, wavelength: float = 2.0, sigma: float | None = None) -> np.ndarray:
    """Vertical Gabor template: Gaussian envelope times a cosine across columns."""
    sigma = sigma if sigma is not None else size / 2.0
    half = size // 2
    r, c = np.mgrid[-half : size - half, -half : size - half].astype(float)
    return np.exp(-(r**2 + c**2) / (2 * sigma**2)) * np.cos(2 * np.pi * c / wavelength)


def bar_kernel(length: int = 3) -> np.ndarray:
    """A vertical bar of ones, ``length`` x 1."""
    return np.ones((length, 1))
