"""Small dense linear algebra over the rationals (and a float cross-check)."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np


def rref(rows: Sequence[Sequence], ncols: int | None = None) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form by exact Gauss-Jordan elimination."""
    m = [[Fraction(x) for x in r] for r in rows if any(r)]
    if ncols is None:
        ncols = len(m[0]) if m else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == len(m):
            break
        piv = next((i for i in range(r, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    return m[:r], pivots


def rank(rows: Sequence[Sequence]) -> int:
    return len(rref(rows)[1])


def nullspace(rows: Sequence[Sequence], ncols: int) -> list[list[Fraction]]:
    """Basis of {x : A x = 0}, itself returned in reduced row echelon form."""
    red, pivots = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for f in free:
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for row, p in zip(red, pivots):
            x[p] = -row[f]
        basis.append(x)
    if not basis:
        return []
    canon, _ = rref(basis, ncols)
    return canon


def nullspace_float(matrix, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal nullspace basis (rows) from the SVD, singular values <= tol * max count as zero."""
    a = np.asarray(matrix, dtype=float)
    if a.size == 0:
        return np.eye(a.shape[1])
    _, s, vt = np.linalg.svd(a)
    cutoff = tol * (s[0] if len(s) else 1.0)
    r = int(np.sum(s > cutoff))
    return vt[r:]
