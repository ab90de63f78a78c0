"""Rank-structured matrix containers and the operations on them.

Conventions used throughout the package:

  - A dense matrix is a 2-D C-contiguous float64 ``numpy.ndarray``.
  - A block-diagonal factor with b blocks of shape (r, c) is stored as a 3-D
    array of shape (b, r, c); block index first, entries row-major.
  - Block indices are 0-based everywhere in the Python API.

A telescoping factorization with L levels and rank parameter k represents an
N x N matrix with N = 2**(L+1) * k built by the recursion

    B_next = U B V^T + D

applied from a (2k, 2k) root core outward, where U and V are block-diagonal
with orthonormal (2k, k) blocks and D is block-diagonal with (2k, 2k) blocks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .kernels import as_matrix

__all__ = [
    "BlockPartition",
    "LevelFactors",
    "SSSFactorization",
    "TelescopingFactorization",
    "block_apply",
    "block_apply_t",
    "block_to_dense",
    "hss_apply",
    "hss_apply_transpose",
    "hss_block_col",
    "hss_block_row",
    "reconstruct_dense",
    "sss_apply",
    "sss_reconstruct",
    "validate_hss_ranks",
]

ORTHO_TOL = 1e-12


# ---------------------------------------------------------------------------
# block-diagonal helpers


def block_apply(blocks: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Multiply blockdiag(blocks) @ x, with x of shape (b*cols, :)."""
    b, r, c = blocks.shape
    xb = x.reshape(b, c, -1)
    return np.einsum("bij,bjs->bis", blocks, xb).reshape(b * r, -1)


def block_apply_t(blocks: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Multiply blockdiag(blocks).T @ x, with x of shape (b*rows, :)."""
    b, r, c = blocks.shape
    xb = x.reshape(b, r, -1)
    return np.einsum("bij,bis->bjs", blocks, xb).reshape(b * c, -1)


def block_to_dense(blocks: np.ndarray) -> np.ndarray:
    """Assemble the dense block-diagonal matrix from a (b, r, c) block array."""
    return scipy.linalg.block_diag(*blocks)


def _orthonormal_defect(blocks: np.ndarray) -> float:
    """Max-norm deviation of block columns from orthonormality."""
    k = blocks.shape[2]
    grams = np.einsum("bij,bik->bjk", blocks, blocks)
    return float(np.max(np.abs(grams - np.eye(k))))


# ---------------------------------------------------------------------------
# partitions and slab extraction


@dataclass(frozen=True)
class BlockPartition:
    """Square partition of a 2**(level+1) * rank_param matrix into 2**level
    diagonal blocks of side 2 * rank_param."""

    level: int
    rank_param: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError(f"level must be >= 0, got {self.level}")
        if self.rank_param < 1:
            raise ValueError(f"rank_param must be >= 1, got {self.rank_param}")

    @property
    def block_count(self) -> int:
        return 1 << self.level

    @property
    def block_size(self) -> int:
        return 2 * self.rank_param

    @property
    def dim(self) -> int:
        return self.block_count * self.block_size


def _check_partitioned(A: np.ndarray, part: BlockPartition, i: int):
    n = A.shape[0]
    if A.shape[0] != A.shape[1] or n != part.dim:
        raise ValueError(
            f"matrix of shape {A.shape} does not match partition dimension {part.dim}"
        )
    if not 0 <= i < part.block_count:
        raise IndexError(f"block index {i} out of range [0, {part.block_count})")


def hss_block_row(A, part: BlockPartition, i: int) -> np.ndarray:
    """Block row i of A with the diagonal block removed (0-based index).

    Returns the (block_size, dim - block_size) horizontal concatenation of
    blocks (i, j) for j != i.
    """
    A = as_matrix(A, "A")
    _check_partitioned(A, part, i)
    w = part.block_size
    rows = A[i * w : (i + 1) * w]
    return np.ascontiguousarray(np.hstack([rows[:, : i * w], rows[:, (i + 1) * w :]]))


def hss_block_col(A, part: BlockPartition, i: int) -> np.ndarray:
    """Block column i of A with the diagonal block removed (0-based index)."""
    A = as_matrix(A, "A")
    _check_partitioned(A, part, i)
    w = part.block_size
    cols = A[:, i * w : (i + 1) * w]
    return np.ascontiguousarray(np.vstack([cols[: i * w], cols[(i + 1) * w :]]))


# ---------------------------------------------------------------------------
# factorization containers


@dataclass(frozen=True)
class LevelFactors:
    """One level of a telescoping factorization.

    U, V: (b, 2k, k) blocks with orthonormal columns; D: (b, 2k, 2k) blocks.
    """

    U: np.ndarray
    V: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        U, V, D = (np.asarray(a, dtype=np.float64) for a in (self.U, self.V, self.D))
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "D", D)
        if U.ndim != 3 or V.shape != U.shape:
            raise ValueError("U and V must be (b, 2k, k) block arrays of equal shape")
        b, w, k = U.shape
        if w != 2 * k:
            raise ValueError(f"basis blocks must be (2k, k), got ({w}, {k})")
        if D.shape != (b, w, w):
            raise ValueError(f"D must have shape {(b, w, w)}, got {D.shape}")

    @property
    def block_count(self) -> int:
        return self.U.shape[0]

    @property
    def rank_param(self) -> int:
        return self.U.shape[2]


@dataclass(frozen=True)
class TelescopingFactorization:
    """Telescoping factorization: ``levels[j]`` holds level j+1 (levels[-1] is
    the finest level L) and ``root`` is the (2k, 2k) core."""

    levels: tuple
    root: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        object.__setattr__(self, "root", as_matrix(self.root, "root"))
        if len(self.levels) < 1:
            raise ValueError("a telescoping factorization needs at least one level")
        k = self.rank_param
        if self.root.shape != (2 * k, 2 * k):
            raise ValueError(f"root must be (2k, 2k) = {(2*k, 2*k)}, got {self.root.shape}")
        for j, lf in enumerate(self.levels):
            if lf.rank_param != k:
                raise ValueError("all levels must share one rank parameter")
            if lf.block_count != 1 << (j + 1):
                raise ValueError(
                    f"level {j + 1} must hold {1 << (j + 1)} blocks, got {lf.block_count}"
                )

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def rank_param(self) -> int:
        return self.levels[0].rank_param

    @property
    def dim(self) -> int:
        return (1 << (self.depth + 1)) * self.rank_param

    def validate(self, tol: float = ORTHO_TOL):
        """Raise unless every basis block is orthonormal to within ``tol``."""
        for j, lf in enumerate(self.levels):
            for name, blocks in (("U", lf.U), ("V", lf.V)):
                defect = _orthonormal_defect(blocks)
                if defect > tol:
                    raise ValueError(
                        f"level {j + 1} {name} blocks deviate from orthonormality "
                        f"by {defect:.3e} (tol {tol:.1e})"
                    )


@dataclass(frozen=True)
class SSSFactorization:
    """One-level factorization B = U X V^T + D with block-diagonal U, V, D."""

    U: np.ndarray
    V: np.ndarray
    X: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "X", as_matrix(self.X, "X"))
        b, w, k = self.U.shape
        if self.V.shape != (b, w, k) or self.D.shape != (b, w, w):
            raise ValueError("inconsistent SSS factor shapes")
        if self.X.shape != (b * k, b * k):
            raise ValueError(f"X must be {(b*k, b*k)}, got {self.X.shape}")

    @property
    def dim(self) -> int:
        return self.U.shape[0] * self.U.shape[1]


def sss_reconstruct(f: SSSFactorization) -> np.ndarray:
    """Dense matrix represented by an SSS factorization."""
    core = block_apply(f.U, f.X)
    return block_apply(f.V, core.T).T + block_to_dense(f.D)


def sss_apply(f: SSSFactorization, x) -> np.ndarray:
    """Apply an SSS factorization to a vector or block of vectors."""
    x = np.asarray(x, dtype=np.float64)
    vec = x.ndim == 1
    xm = x[:, None] if vec else x
    if xm.shape[0] != f.dim:
        raise ValueError(f"operand has {xm.shape[0]} rows, expected {f.dim}")
    y = block_apply(f.U, f.X @ block_apply_t(f.V, xm)) + block_apply(f.D, xm)
    return y[:, 0] if vec else y


# ---------------------------------------------------------------------------
# telescoping operations


def reconstruct_dense(T: TelescopingFactorization) -> np.ndarray:
    """Expand the telescoping recursion into the dense represented matrix."""
    B = T.root
    for lf in T.levels:
        B = block_apply(lf.U, B)
        B = block_apply(lf.V, B.T).T + block_to_dense(lf.D)
    return B


def _apply(T: TelescopingFactorization, x, transpose: bool) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    vec = x.ndim == 1
    xm = x[:, None] if vec else x
    if xm.shape[0] != T.dim:
        raise ValueError(f"operand has {xm.shape[0]} rows, expected {T.dim}")
    # Descend: project the operand through the (right) bases level by level.
    down = []
    cur = xm
    for lf in reversed(T.levels):
        down.append(cur)
        cur = block_apply_t(lf.U if transpose else lf.V, cur)
    y = (T.root.T if transpose else T.root) @ cur
    # Ascend: expand through the (left) bases and add the remainders.
    for lf, xs in zip(T.levels, reversed(down)):
        if transpose:
            y = block_apply(lf.V, y) + block_apply_t(lf.D, xs)
        else:
            y = block_apply(lf.U, y) + block_apply(lf.D, xs)
    return y[:, 0] if vec else y


def hss_apply(T: TelescopingFactorization, x) -> np.ndarray:
    """Multiply the represented matrix by x without materializing it.

    Costs O(N k) arithmetic per vector.
    """
    return _apply(T, x, transpose=False)


def hss_apply_transpose(T: TelescopingFactorization, x) -> np.ndarray:
    """Multiply the transpose of the represented matrix by x."""
    return _apply(T, x, transpose=True)


def validate_hss_ranks(A, L: int, k: int, tol: float) -> bool:
    """Check the rank structure of A against an (L, k) hierarchy.

    True iff at every level l = 1..L every off-diagonal block row and block
    column of the level-l repartitioning of A has (k+1)-th singular value at
    most ``tol`` times the largest singular value of A.
    """
    A = as_matrix(A, "A")
    if tol < 0:
        raise ValueError("tol must be non-negative")
    n = A.shape[0]
    if A.shape[0] != A.shape[1] or n != (1 << (L + 1)) * k:
        raise ValueError(f"matrix of shape {A.shape} does not conform to (L={L}, k={k})")
    smax = float(np.linalg.norm(A, 2))
    if smax == 0.0:
        return True
    for level in range(1, L + 1):
        width = n >> (level + 1)  # 2k' with k' = 2**(L-level) * k
        part = BlockPartition(level, width)
        for i in range(part.block_count):
            for slab in (hss_block_row(A, part, i), hss_block_col(A, part, i)):
                svals = np.linalg.svd(slab, compute_uv=False)
                if svals.size > k and svals[k] > tol * smax:
                    return False
    return True
