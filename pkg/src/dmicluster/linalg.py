"""Dense linear algebra for small matrices.

Everything here is sized for cluster counts of roughly ten or fewer:
determinants and inverses of k x k aggregates, numerical rank and
independent-column selection of tall-and-skinny data matrices, and the
row-argmax extraction that turns score matrices into one-hot assignments.
All functions are pure and deterministic for identical inputs.
"""
from __future__ import annotations

import numpy as np

from .errors import NonSquareError, RankMismatchError, SingularMatrixError

DET_SIDE_CAP = 12
SINGULAR_TOL = 1e-12


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a non-empty 2d float64 array with finite entries."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={m.ndim}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def _require_square(m: np.ndarray) -> int:
    if m.shape[0] != m.shape[1]:
        raise NonSquareError(f"expected a square matrix, got shape {m.shape}")
    return m.shape[0]


def determinant(m, max_side: int = DET_SIDE_CAP) -> float:
    """Determinant of a small square matrix via pivoted elimination.

    Sides 1-3 use the closed cofactor form (it is exact and faster at this
    size); larger sides go through LAPACK's partially pivoted LU.
    """
    m = as_matrix(m)
    side = _require_square(m)
    if side > max_side:
        raise ValueError(f"side {side} exceeds the determinant cap {max_side}")
    return float(det_stack(m[np.newaxis])[0])


def det_stack(ms: np.ndarray) -> np.ndarray:
    """Determinants of a stack of square matrices, shape (..., k, k)."""
    k = ms.shape[-1]
    if k == 1:
        return ms[..., 0, 0].copy()
    if k == 2:
        return ms[..., 0, 0] * ms[..., 1, 1] - ms[..., 0, 1] * ms[..., 1, 0]
    if k == 3:
        a, b, c = ms[..., 0, 0], ms[..., 0, 1], ms[..., 0, 2]
        d, e, f = ms[..., 1, 0], ms[..., 1, 1], ms[..., 1, 2]
        g, h, i = ms[..., 2, 0], ms[..., 2, 1], ms[..., 2, 2]
        return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    return np.linalg.det(ms)


def inverse(m, singular_tol: float = SINGULAR_TOL) -> np.ndarray:
    """Inverse of a square matrix; raises SingularMatrixError when |det| is
    below singular_tol relative to the entry scale."""
    m = as_matrix(m)
    side = _require_square(m)
    scale = float(np.max(np.abs(m)))
    if scale == 0.0:
        raise SingularMatrixError("zero matrix has no inverse")
    det = float(np.linalg.det(m))
    if abs(det) < singular_tol * scale**side:
        raise SingularMatrixError(
            f"matrix is numerically singular (|det|={abs(det):.3e}, "
            f"scale={scale:.3e})"
        )
    return np.linalg.inv(m)


def default_rank_tol(m: np.ndarray) -> float:
    """Default pivot tolerance: 1e-9 times the largest absolute entry."""
    scale = float(np.max(np.abs(m)))
    return 1e-9 * scale if scale > 0.0 else 0.0


def numerical_rank(m, tol: float | None = None) -> int:
    """Numerical rank: pivots exceeding tol under column-pivoted elimination.

    Each step removes the largest remaining column from all others
    (column-pivoted modified Gram-Schmidt).  Pivots are measured as the
    root-mean-square entry of the residual column so the tolerance is
    per-entry and comparable across matrix heights.
    """
    m = as_matrix(m)
    if tol is None:
        tol = default_rank_tol(m)
    elif tol <= 0:
        raise ValueError("tol must be positive")
    cutoff = tol * np.sqrt(m.shape[0])
    work = m.copy()
    rank = 0
    for _ in range(min(work.shape)):
        norms = np.linalg.norm(work, axis=0)
        j = int(np.argmax(norms))
        if norms[j] <= cutoff:
            break
        q = work[:, j] / norms[j]
        work -= np.outer(q, q @ work)
        work[:, j] = 0.0
        rank += 1
    return rank


def pick_independent_columns(m, k: int, tol: float | None = None) -> list[int]:
    """Greedy left-to-right selection of k linearly independent columns.

    A column is accepted when its residual, after projecting out the columns
    already picked, exceeds tol (root-mean-square per entry).  Because the
    scan is left-to-right, an appended trailing column (such as an all-ones
    column) is picked only when the earlier columns do not already span the
    column space.
    """
    m = as_matrix(m)
    if tol is None:
        tol = default_rank_tol(m)
    if k < 1:
        raise ValueError("k must be at least 1")
    cutoff = tol * np.sqrt(m.shape[0])
    picked: list[int] = []
    basis: list[np.ndarray] = []
    for j in range(m.shape[1]):
        v = m[:, j].copy()
        for q in basis:
            v -= (q @ v) * q
        # one re-orthogonalization pass keeps the basis clean near tolerance
        for q in basis:
            v -= (q @ v) * q
        norm = float(np.linalg.norm(v))
        if norm > cutoff:
            picked.append(j)
            basis.append(v / norm)
            if len(picked) == k:
                return picked
    raise RankMismatchError(
        f"found only {len(picked)} independent columns, requested {k}"
    )


def idxmax(m, reference=None) -> np.ndarray:
    """One-hot matrix marking each row's largest entry.

    Ties break toward the lowest column index.  When ``reference`` (a one-hot
    assignment or a label vector) is given, a row keeps its reference column
    whenever that column is among the row maxima; this is the tie rule the
    alternating solver needs to avoid churning on ties.
    """
    m = as_matrix(m)
    n, k = m.shape
    best = np.argmax(m, axis=1)
    if reference is not None:
        ref = np.asarray(reference)
        labels = np.argmax(ref, axis=1) if ref.ndim == 2 else ref.astype(np.intp)
        if labels.shape != (n,):
            raise ValueError("reference does not match the input's row count")
        rows = np.arange(n)
        keep = m[rows, labels] >= m[rows, best]
        best = np.where(keep, labels, best)
    out = np.zeros((n, k))
    out[np.arange(n), best] = 1.0
    return out
