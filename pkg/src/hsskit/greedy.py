"""Greedy construction of a telescoping factorization from explicit entries.

One level at a time, each off-diagonal block row / column gets the optimal
rank-k subspace (exact truncated SVD), the remainder block is the diagonal
block itself, and the matrix is compressed through the new bases before the
next level.  Total arithmetic is O(N^2 k).
"""

from __future__ import annotations

import numpy as np

from .kernels import as_matrix, truncated_svd_left
from .structures import (
    BlockPartition,
    LevelFactors,
    TelescopingFactorization,
    block_apply_t,
    block_to_dense,
    hss_block_col,
    hss_block_row,
)

__all__ = ["greedy_hss_explicit", "sss_step_explicit"]


def sss_step_explicit(A, level: int, k: int):
    """One explicit compression step at the given level.

    Returns ``(factors, A_next)`` where factors holds, per block i, the top-k
    left singular vectors of block row i, the top-k right singular vectors of
    block column i, and the diagonal block of A; A_next = U^T (A - D) V is the
    half-size matrix handed to the next level.
    """
    A = as_matrix(A, "A")
    part = BlockPartition(level, k)
    if A.shape != (part.dim, part.dim):
        raise ValueError(f"matrix of shape {A.shape} does not conform to level {level}, k={k}")
    b, w = part.block_count, part.block_size
    U = np.empty((b, w, k))
    V = np.empty((b, w, k))
    D = np.empty((b, w, w))
    for i in range(b):
        U[i] = truncated_svd_left(hss_block_row(A, part, i), k)
        V[i] = truncated_svd_left(hss_block_col(A, part, i).T, k)
        D[i] = A[i * w : (i + 1) * w, i * w : (i + 1) * w]
    factors = LevelFactors(U, V, D)
    core = block_apply_t(U, A - block_to_dense(D))
    A_next = block_apply_t(V, core.T).T
    return factors, A_next


def greedy_hss_explicit(A, L: int, k: int) -> TelescopingFactorization:
    """Greedy rank-k factorization of a dense conforming matrix over L levels."""
    A = as_matrix(A, "A")
    n = (1 << (L + 1)) * k
    if A.shape != (n, n):
        raise ValueError(f"matrix of shape {A.shape} does not conform to (L={L}, k={k})")
    levels = []
    current = A
    for level in range(L, 0, -1):
        factors, current = sss_step_explicit(current, level, k)
        levels.append(factors)
    return TelescopingFactorization(tuple(reversed(levels)), current)
