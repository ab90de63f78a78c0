"""Test-matrix generators and error metrics for the experiment harness.

Generator families:

  - ``hard_instance``: the adversarial matrix of perturbed exchange blocks
    whose best rank-structured approximation is known in closed form.
  - ``banded_inverse_oracle``: the inverse of a random symmetric banded,
    strictly diagonally dominant matrix, served through banded Cholesky
    solves.  With total bandwidth 2k + 1 the inverse has rank-2k structure.
  - ``grid_schur_oracle``: Schur complement of an N x 51 grid-graph Laplacian
    onto its middle separator column.
  - ``bie_star_matrix``: second-kind Nystrom discretization of a Laplace
    double-layer boundary integral operator on a star-shaped curve.
  - ``random_telescoping`` / ``random_hss_matrix`` / ``random_blr2_matrix``:
    random members of the structured classes, for exact-recovery testing.

All sizes must conform to the perfect-tree dimension contract N = 2**(L+1)*k.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .blr2 import BLR2Factorization, BLR2Pattern, blr2_reconstruct
from .kernels import RngStream, as_matrix, gaussian
from .oracle import MatvecOracle
from .structures import (
    LevelFactors,
    SSSFactorization,
    TelescopingFactorization,
    reconstruct_dense,
    sss_reconstruct,
)

__all__ = [
    "banded_inverse_oracle",
    "bie_star_matrix",
    "frobenius_error",
    "grid_schur_oracle",
    "hard_instance",
    "random_banded_matrix",
    "random_blr2_matrix",
    "random_hss_matrix",
    "random_telescoping",
]


# ---------------------------------------------------------------------------
# adversarial instance


def hard_instance(L: int, delta: float) -> np.ndarray:
    """Dense 2**(L+1) matrix of 2x2 blocks: identity everywhere except
    perturbed exchange blocks [[0, 1+delta], [1, 0]] on the block
    anti-diagonal."""
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    blocks = 1 << L
    n = 2 * blocks
    A = np.zeros((n, n))
    eye = np.eye(2)
    exchange = np.array([[0.0, 1.0 + delta], [1.0, 0.0]])
    for i in range(blocks):
        for j in range(blocks):
            block = exchange if i + j == blocks - 1 else eye
            A[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = block
    return A


# ---------------------------------------------------------------------------
# random structured matrices


def random_telescoping(L: int, k: int, stream: RngStream) -> TelescopingFactorization:
    """Random factorization: orthonormal bases from QR of Gaussian blocks,
    Gaussian remainders and root."""
    levels = []
    for level in range(1, L + 1):
        b, w = 1 << level, 2 * k
        U = np.empty((b, w, k))
        V = np.empty((b, w, k))
        for i in range(b):
            U[i] = np.linalg.qr(gaussian(w, k, stream.child(level, i, "U")))[0]
            V[i] = np.linalg.qr(gaussian(w, k, stream.child(level, i, "V")))[0]
        D = np.stack([gaussian(w, w, stream.child(level, i, "D")) for i in range(b)])
        levels.append(LevelFactors(U, V, D))
    root = gaussian(2 * k, 2 * k, stream.child(0, 0, "root"))
    return TelescopingFactorization(tuple(levels), root)


def random_hss_matrix(L: int, k: int, seed: int) -> np.ndarray:
    """Dense matrix with exact (L, k) rank structure."""
    return reconstruct_dense(random_telescoping(L, k, RngStream(seed).child("hss")))


def random_blr2_matrix(pattern: BLR2Pattern, k: int, seed: int) -> np.ndarray:
    """Dense matrix that is exactly BLR2 for the given pattern and rank."""
    stream = RngStream(seed).child("blr2")
    b, m = pattern.block_count, pattern.block_size
    U = np.empty((b, m, k))
    V = np.empty((b, m, k))
    for i in range(b):
        U[i] = np.linalg.qr(gaussian(m, k, stream.child(i, "U")))[0]
        V[i] = np.linalg.qr(gaussian(m, k, stream.child(i, "V")))[0]
    X = gaussian(b * k, b * k, stream.child(0, "X"))
    D = {
        (i, j): gaussian(m, m, stream.child(i, j, "D"))
        for i, j in sorted(pattern.pairs)
    }
    return blr2_reconstruct(BLR2Factorization(pattern, k, U, V, X, D))


# ---------------------------------------------------------------------------
# inverse of a banded matrix


def _banded_arrays(n: int, bandwidth: int, seed: int):
    """Diagonal and superdiagonal arrays of a random symmetric banded matrix.

    ``bandwidth`` counts the nonzero diagonals (odd), so entries satisfy
    M[i, j] = 0 for |i - j| > (bandwidth - 1) / 2.  Off-band entries are
    uniform on (-1, 1); the diagonal is the absolute row sum plus one, which
    makes M strictly diagonally dominant and hence positive definite.
    """
    if bandwidth < 1 or bandwidth % 2 == 0:
        raise ValueError(f"bandwidth must be odd and positive, got {bandwidth}")
    half = (bandwidth - 1) // 2
    if n <= half:
        raise ValueError(f"dimension {n} too small for bandwidth {bandwidth}")
    rng = RngStream(seed).child("banded").generator()
    offs = [rng.uniform(-1.0, 1.0, size=n - d) for d in range(1, half + 1)]
    diag = np.ones(n)
    for d, off in enumerate(offs, start=1):
        diag[: n - d] += np.abs(off)
        diag[d:] += np.abs(off)
    return diag, offs


def random_banded_matrix(n: int, bandwidth: int, seed: int) -> np.ndarray:
    """Dense form of the random symmetric banded matrix used by
    :func:`banded_inverse_oracle` (same seed gives the same matrix)."""
    diag, offs = _banded_arrays(n, bandwidth, seed)
    M = np.diag(diag)
    for d, off in enumerate(offs, start=1):
        M += np.diag(off, d) + np.diag(off, -d)
    return M


def banded_inverse_oracle(n: int, bandwidth: int, seed: int) -> MatvecOracle:
    """Matvec oracle for the inverse of a random symmetric banded matrix.

    The banded matrix is factored once with a banded Cholesky; each product
    is a pair of triangular band solves.  The operator is symmetric, so
    forward and transpose products agree.
    """
    diag, offs = _banded_arrays(n, bandwidth, seed)
    half = len(offs)
    ab = np.zeros((half + 1, n))
    ab[half] = diag
    for d, off in enumerate(offs, start=1):
        ab[half - d, d:] = off
    factor = scipy.linalg.cholesky_banded(ab)

    def solve(x):
        return scipy.linalg.cho_solve_banded((factor, False), x)

    return MatvecOracle(n, solve, solve)


# ---------------------------------------------------------------------------
# Schur complement of a grid-graph Laplacian


_GRID_COLS = 51
_SIDE_WIDTH = 25


class _SideBlock:
    """One 25-column side of the grid, ordered row-major (half-bandwidth 25),
    factored once with a banded Cholesky."""

    def __init__(self, n_rows: int, outer_edge_col: int, separator_col: int):
        self.n_rows = n_rows
        self.separator_col = separator_col
        w = _SIDE_WIDTH
        size = n_rows * w
        degree = np.full((n_rows, w), 4.0)
        degree[0] -= 1.0
        degree[-1] -= 1.0
        degree[:, outer_edge_col] -= 1.0
        diag = degree.reshape(size)
        horiz = -np.ones(size - 1)
        horiz[w - 1 :: w] = 0.0  # no edge across row boundaries
        vert = -np.ones(size - w)
        ab = np.zeros((w + 1, size))
        ab[w] = diag
        ab[w - 1, 1:] = horiz
        ab[0, w:] = vert
        self._factor = scipy.linalg.cholesky_banded(ab)

    def coupling_rows(self) -> np.ndarray:
        """Side indices adjacent to the separator, one per grid row."""
        return np.arange(self.n_rows) * _SIDE_WIDTH + self.separator_col

    def schur_term(self, x: np.ndarray) -> np.ndarray:
        """L_side_sep^T L_side^{-1} L_side_sep x (edges to the separator all
        have weight -1)."""
        rhs = np.zeros((self.n_rows * _SIDE_WIDTH, x.shape[1]))
        rows = self.coupling_rows()
        rhs[rows] = -x
        solved = scipy.linalg.cho_solve_banded((self._factor, False), rhs)
        return -solved[rows]


def grid_schur_oracle(n_rows: int) -> MatvecOracle:
    """Matvec oracle for the Schur complement of the N x 51 grid Laplacian
    onto its middle column (a graph separator); the operator acts on the
    ``n_rows`` separator vertices."""
    if n_rows < 2:
        raise ValueError(f"need at least two grid rows, got {n_rows}")
    left = _SideBlock(n_rows, outer_edge_col=0, separator_col=_SIDE_WIDTH - 1)
    right = _SideBlock(n_rows, outer_edge_col=_SIDE_WIDTH - 1, separator_col=0)
    sep_degree = np.full(n_rows, 4.0)
    sep_degree[0] -= 1.0
    sep_degree[-1] -= 1.0

    def apply(x):
        vec = x.ndim == 1
        xm = x[:, None] if vec else x
        y = sep_degree[:, None] * xm
        y[:-1] -= xm[1:]
        y[1:] -= xm[:-1]
        y -= left.schur_term(xm)
        y -= right.schur_term(xm)
        return y[:, 0] if vec else y

    return MatvecOracle(n_rows, apply, apply)


# ---------------------------------------------------------------------------
# boundary integral equation on a star curve


def bie_star_matrix(n_nodes: int, arm_amplitude: float, arm_count: int) -> np.ndarray:
    """Nystrom matrix of the exterior-normal double-layer Laplace operator on
    the curve r(t) = 1 + a cos(w t), with uniform nodes and trapezoid weights.

    Entries: A[i, j] = delta_ij / 2 - (w_j / 2 pi) n_i . (x_i - x_j) / |x_i - x_j|^2
    with w_j = (2 pi / N) |x'(t_j)|; the diagonal uses the smooth curvature
    limit of the kernel, kappa / 2.
    """
    if n_nodes < 2:
        raise ValueError(f"need at least two nodes, got {n_nodes}")
    t = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    a, w = arm_amplitude, arm_count
    r = 1.0 + a * np.cos(w * t)
    rp = -a * w * np.sin(w * t)
    rpp = -a * w * w * np.cos(w * t)
    cos_t, sin_t = np.cos(t), np.sin(t)
    x = np.stack([r * cos_t, r * sin_t], axis=1)
    xp = np.stack([rp * cos_t - r * sin_t, rp * sin_t + r * cos_t], axis=1)
    xpp = np.stack(
        [rpp * cos_t - 2 * rp * sin_t - r * cos_t, rpp * sin_t + 2 * rp * cos_t - r * sin_t],
        axis=1,
    )
    speed = np.hypot(xp[:, 0], xp[:, 1])
    normal = np.stack([xp[:, 1], -xp[:, 0]], axis=1) / speed[:, None]
    curvature = (xp[:, 0] * xpp[:, 1] - xp[:, 1] * xpp[:, 0]) / speed**3
    weights = (2.0 * np.pi / n_nodes) * speed

    diff = x[:, None, :] - x[None, :, :]
    dist2 = np.einsum("ijd,ijd->ij", diff, diff)
    np.fill_diagonal(dist2, 1.0)  # placeholder; diagonal overwritten below
    kernel = np.einsum("id,ijd->ij", normal, diff) / dist2
    A = 0.5 * np.eye(n_nodes) - (weights[None, :] / (2.0 * np.pi)) * kernel
    np.fill_diagonal(A, 0.5 - weights * curvature / (4.0 * np.pi))
    return A


# ---------------------------------------------------------------------------
# error metric


def frobenius_error(A, approx) -> float:
    """Relative Frobenius error of a factorization (or dense matrix) against A."""
    A = as_matrix(A, "A")
    denom = float(np.linalg.norm(A))
    if denom == 0.0:
        raise ValueError("reference matrix has zero norm")
    if isinstance(approx, TelescopingFactorization):
        B = reconstruct_dense(approx)
    elif isinstance(approx, SSSFactorization):
        B = sss_reconstruct(approx)
    elif isinstance(approx, BLR2Factorization):
        B = blr2_reconstruct(approx)
    else:
        B = as_matrix(approx, "approx")
    return float(np.linalg.norm(A - B)) / denom
