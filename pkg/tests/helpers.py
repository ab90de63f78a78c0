"""Shared construction helpers for the test suite.

Oracles used to freeze expected values (brute-force slicers, full-SVD tails)
are deliberately written here, independently of the library code paths they
check.
"""

import numpy as np

from hsskit import RngStream, SSSFactorization, gaussian


def rand_orthonormal(rows, cols, rng):
    """Orthonormal columns via QR of a Gaussian draw."""
    q, _ = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q


def random_sss(level, k, seed):
    """Random exactly-SSS factorization at the given level."""
    rng = np.random.default_rng(seed)
    b, w = 2**level, 2 * k
    U = np.stack([rand_orthonormal(w, k, rng) for _ in range(b)])
    V = np.stack([rand_orthonormal(w, k, rng) for _ in range(b)])
    X = rng.standard_normal((b * k, b * k))
    D = np.stack([rng.standard_normal((w, w)) for _ in range(b)])
    return SSSFactorization(U=U, V=V, X=X, D=D)


def svd_tail_energy(B, k):
    """Optimal rank-k squared Frobenius error, from a full SVD."""
    svals = np.linalg.svd(B, compute_uv=False)
    return float(np.sum(svals[k:] ** 2))


def brute_block_row(A, block_size, i):
    """Index-arithmetic slicer: concatenate blocks (i, j) for j != i."""
    b = A.shape[0] // block_size
    pieces = []
    for j in range(b):
        if j == i:
            continue
        pieces.append(A[i * block_size : (i + 1) * block_size, j * block_size : (j + 1) * block_size])
    return np.hstack(pieces)


def brute_block_col(A, block_size, j):
    b = A.shape[0] // block_size
    pieces = []
    for i in range(b):
        if i == j:
            continue
        pieces.append(A[i * block_size : (i + 1) * block_size, j * block_size : (j + 1) * block_size])
    return np.vstack(pieces)


def rank_deficient_free_gaussian(rows, cols, seed):
    return gaussian(rows, cols, RngStream(seed).child("test"))
