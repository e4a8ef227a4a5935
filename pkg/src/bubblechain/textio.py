"""Plain-text matrix dumps: one row per line, entries written as ``re,im``."""
from __future__ import annotations

import numpy as np


def _fmt(v: float) -> str:
    v = float(v)
    if v == 0.0:
        v = 0.0  # drop negative zero
    return repr(v)


def dump_matrix(matrix: np.ndarray, name: str = "matrix") -> str:
    m = np.atleast_2d(np.asarray(matrix, dtype=np.complex128))
    lines = [f"# {name} {m.shape[0]} {m.shape[1]}"]
    for row in m:
        lines.append(" ".join(f"{_fmt(z.real)},{_fmt(z.imag)}" for z in row))
    return "\n".join(lines) + "\n"


def load_matrices(text: str) -> dict[str, np.ndarray]:
    """Parse one or more dumps produced by :func:`dump_matrix`."""
    out: dict[str, np.ndarray] = {}
    lines = [ln for ln in text.splitlines() if ln.strip()]
    i = 0
    while i < len(lines):
        header = lines[i].split()
        if header[0] != "#" or len(header) != 4:
            raise ValueError(f"malformed matrix header: {lines[i]!r}")
        name, rows, cols = header[1], int(header[2]), int(header[3])
        m = np.empty((rows, cols), dtype=np.complex128)
        for r in range(rows):
            entries = lines[i + 1 + r].split()
            if len(entries) != cols:
                raise ValueError(f"row {r} of {name} has {len(entries)} entries, expected {cols}")
            for c, e in enumerate(entries):
                re, im = e.split(",")
                m[r, c] = complex(float(re), float(im))
        out[name] = m
        i += rows + 1
    return out


def load_matrix(text: str) -> np.ndarray:
    mats = load_matrices(text)
    if len(mats) != 1:
        raise ValueError(f"expected one matrix, found {len(mats)}")
    return next(iter(mats.values()))
