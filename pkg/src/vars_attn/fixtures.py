"""Canonical fixtures and seeded random instance generators."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dictionary import bar_kernel, normalize_atoms, random_projection
from .io import write_csv_matrix, write_vt
from .toy import make_scene

DEFAULT_SEED = 42


def random_lasso_instance(rng: np.random.Generator, d: int, m: int):
    """Unit-norm Gaussian atoms (d x m) and a Gaussian signal."""
    p = normalize_atoms(rng.standard_normal((d, m)))
    return p, rng.standard_normal(d)


def random_small_instance(rng: np.random.Generator, max_d: int = 8, max_m: int = 6):
    """Sizes with ``2 <= m <= max_m`` and ``m <= d <= max_d``."""
    m = int(rng.integers(2, max_m + 1))
    d = int(rng.integers(m, max_d + 1))
    return random_lasso_instance(rng, d, m)


def stable_factor(rng: np.random.Generator, d: int, m: int, radius: float = 0.8) -> np.ndarray:
    """Random P (d x m) rescaled so that rho(P P') == radius."""
    p = rng.standard_normal((d, m))
    return p * np.sqrt(radius) / np.linalg.norm(p, 2)


@dataclass(frozen=True)
class BarFixture:
    tokens: np.ndarray  # (16, C)
    grid: tuple[int, int]
    kernel: np.ndarray
    bar_tokens: np.ndarray
    noise_tokens: np.ndarray


def bar_noise_fixture(seed: int = DEFAULT_SEED, grid=(4, 4), n_noise: int = 3, channels: int = 2) -> BarFixture:
    """A full-height vertical bar in column 1 plus isolated noise pixels.

    Noise cells are drawn from columns 2 and beyond, with no two in the same
    column, so none of them lines up into a bar of their own.
    """
    rng = np.random.default_rng(seed)
    h, w = grid
    bar_col = 1
    img = np.zeros((h, w, channels))
    img[:, bar_col, :] = 1.0
    cols = rng.choice(np.arange(bar_col + 1, w), size=min(n_noise, w - bar_col - 1), replace=False)
    noise_cells = [(int(rng.integers(0, h)), int(c)) for c in cols]
    for r, c in noise_cells:
        img[r, c, :] = rng.uniform(0.6, 1.0, size=channels)
    bar = [r * w + bar_col for r in range(h)]
    noise = [r * w + c for r, c in noise_cells]
    return BarFixture(img.reshape(h * w, channels), (h, w), bar_kernel(3), np.array(bar), np.array(noise))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def make_fixtures(seed: int, out_dir) -> dict:
    """Write the canonical fixture set under ``out_dir`` plus ``manifest.json``.

    The manifest maps every relative path written to its sha256.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    written = []

    def put(rel, writer, value):
        path = out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        writer(path, value)
        written.append(rel)

    put("orthonormal/P.csv", write_csv_matrix, np.eye(2))
    put("orthonormal/x.csv", write_csv_matrix, np.array([[1.0, -0.2]]))
    for k in range(4):
        p, x = random_lasso_instance(rng, 6, 4)
        put(f"lasso_{k}/P.csv", write_csv_matrix, p)
        put(f"lasso_{k}/x.csv", write_csv_matrix, x[None, :])
    for kind in ("contour", "texture", "random"):
        scene = make_scene(kind, seed=seed)
        put(f"scenes/{kind}.csv", write_csv_matrix, scene.grid.orientation)
    put("tokens/X.vt", write_vt, rng.standard_normal((8, 4)) * 0.5)
    put("tokens/W.csv", write_csv_matrix, random_projection(4, 4, seed=int(rng.integers(2**31))))
    bars = bar_noise_fixture(seed)
    put("bars/X.vt", write_vt, bars.tokens.reshape(*bars.grid, -1))
    put("bars/kernel.csv", write_csv_matrix, bars.kernel)

    manifest = {"seed": seed, "files": {rel: _sha256(out / rel) for rel in written}}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def verify_manifest(out_dir) -> list[str]:
    """Relative paths whose current hash differs from the manifest (empty if all match)."""
    out = Path(out_dir)
    manifest = json.loads((out / "manifest.json").read_text())
    return [rel for rel, digest in manifest["files"].items()
            if not (out / rel).exists() or _sha256(out / rel) != digest]
