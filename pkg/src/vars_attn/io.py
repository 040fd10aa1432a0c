"""File formats: headerless CSV matrices, the ``VT01`` binary tensor, and PGM images."""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

VT_MAGIC = b"VT01"


def read_csv_matrix(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise FormatError(f"{path}: empty matrix")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise FormatError(f"{path}: ragged rows")
    m = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise FormatError(f"{path}: non-finite entry")
    return m


def write_csv_matrix(path, m) -> None:
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    with open(path, "w") as fh:
        for row in m:
            # repr gives the shortest string that round-trips exactly
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_vector(path) -> np.ndarray:
    """Read a CSV holding a single row or a single column as a 1-D array."""
    m = read_csv_matrix(path)
    if 1 not in m.shape:
        raise FormatError(f"{path}: expected a row or column vector, got shape {m.shape}")
    return m.ravel()


def encode_vt(a) -> bytes:
    a = np.asarray(a, dtype="<f8")
    header = VT_MAGIC + struct.pack("<I", a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape)
    return header + np.ascontiguousarray(a).tobytes()


def decode_vt(buf: bytes) -> np.ndarray:
    if len(buf) < 8 or buf[:4] != VT_MAGIC:
        raise FormatError("not a VT01 tensor (bad magic)")
    (ndim,) = struct.unpack_from("<I", buf, 4)
    off = 8 + 4 * ndim
    if len(buf) < off:
        raise FormatError("truncated VT01 header")
    dims = struct.unpack_from(f"<{ndim}I", buf, 8)
    count = int(np.prod(dims, dtype=np.int64))
    if len(buf) != off + 8 * count:
        raise FormatError(f"VT01 payload is {len(buf) - off} bytes, expected {8 * count}")
    return np.frombuffer(buf, dtype="<f8", count=count, offset=off).reshape(dims).astype(np.float64)


def write_vt(path, a) -> None:
    Path(path).write_bytes(encode_vt(a))


def read_vt(path) -> np.ndarray:
    return decode_vt(Path(path).read_bytes())


def read_tensor(path) -> np.ndarray:
    """Dispatch on content: VT01 magic means binary, anything else is CSV."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == VT_MAGIC:
        return read_vt(path)
    return read_csv_matrix(path)


def write_pgm(path, image) -> None:
    """Write a 2-D array with values in [0, 1] as an ASCII (P2) PGM, max value 255."""
    img = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    if img.ndim != 2:
        raise FormatError(f"PGM image must be 2-D, got shape {img.shape}")
    levels = np.rint(img * 255).astype(int)
    h, w = levels.shape
    lines = ["P2", f"{w} {h}", "255"]
    lines += [" ".join(str(v) for v in row) for row in levels]
    Path(path).write_text("\n".join(lines) + "\n")


def read_pgm(path) -> np.ndarray:
    toks = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0]
        toks.extend(line.split())
    if not toks or toks[0] != "P2":
        raise FormatError(f"{path}: not an ASCII PGM")
    w, h, maxval = int(toks[1]), int(toks[2]), int(toks[3])
    vals = np.array([int(t) for t in toks[4:]], dtype=np.int64)
    if vals.size != w * h:
        raise FormatError(f"{path}: expected {w * h} pixels, got {vals.size}")
    return vals.reshape(h, w) / maxval
