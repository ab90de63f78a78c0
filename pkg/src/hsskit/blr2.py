"""Uniform block low-rank (BLR2) approximation from matvec queries.

The flat analogue of the telescoping construction: one b x b partition with
block size m, shared rank-k bases per block row/column, and a block-sparse
remainder supported on an inadmissible pattern S.  With a diagonal pattern
and m = 2k this class coincides with the one-level factorization used per
level of the hierarchical drivers, and the build step here reproduces that
step exactly when fed the same sketches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import RngStream, gaussian, nullspace_basis, right_pinv_apply
from .oracle import MatvecOracle
from .sketching import pcps_basis
from .structures import block_apply, block_apply_t, block_to_dense

__all__ = [
    "BLR2Factorization",
    "BLR2Pattern",
    "blr2_apply",
    "blr2_block_nullify",
    "blr2_factors_from_sketches",
    "blr2_from_matvecs",
    "blr2_reconstruct",
]


@dataclass(frozen=True)
class BLR2Pattern:
    """Inadmissible-block pattern of a b x b partition with block size m.

    ``pairs`` lists the (row, col) positions, 0-based, whose blocks live in
    the dense remainder; every other block must be low-rank through the
    shared bases.
    """

    block_count: int
    block_size: int
    pairs: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.block_count < 1 or self.block_size < 1:
            raise ValueError("block_count and block_size must be positive")
        pairs = frozenset((int(i), int(j)) for i, j in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        for i, j in pairs:
            if not (0 <= i < self.block_count and 0 <= j < self.block_count):
                raise ValueError(f"pattern pair {(i, j)} out of range")

    @classmethod
    def diagonal(cls, block_count: int, block_size: int) -> "BLR2Pattern":
        return cls(block_count, block_size, frozenset((i, i) for i in range(block_count)))

    @classmethod
    def tridiagonal(cls, block_count: int, block_size: int) -> "BLR2Pattern":
        pairs = {
            (i, j)
            for i in range(block_count)
            for j in range(block_count)
            if abs(i - j) <= 1
        }
        return cls(block_count, block_size, frozenset(pairs))

    @property
    def dim(self) -> int:
        return self.block_count * self.block_size

    def row_inadmissible(self, i: int) -> tuple:
        """Columns j with (i, j) in the pattern (dense-remainder blocks)."""
        return tuple(j for j in range(self.block_count) if (i, j) in self.pairs)

    def row_admissible(self, i: int) -> tuple:
        return tuple(j for j in range(self.block_count) if (i, j) not in self.pairs)

    def col_inadmissible(self, j: int) -> tuple:
        """Rows i with (i, j) in the pattern."""
        return tuple(i for i in range(self.block_count) if (i, j) in self.pairs)

    def col_admissible(self, j: int) -> tuple:
        return tuple(i for i in range(self.block_count) if (i, j) not in self.pairs)

    @property
    def max_blocks_per_line(self) -> int:
        """Largest number of pattern blocks in any row or column."""
        per_row = [len(self.row_inadmissible(i)) for i in range(self.block_count)]
        per_col = [len(self.col_inadmissible(j)) for j in range(self.block_count)]
        return max(per_row + per_col)

    def width_floor(self, k: int) -> int:
        """Smallest admissible sketch width for rank k."""
        return self.max_blocks_per_line * self.block_size + k + 2


@dataclass(frozen=True)
class BLR2Factorization:
    """B = U X V^T + D with D supported on the pattern.

    U, V: (b, m, k) orthonormal-column blocks; X: (bk, bk) dense core;
    D: dict mapping pattern pairs to (m, m) blocks.
    """

    pattern: BLR2Pattern
    rank_param: int
    U: np.ndarray
    V: np.ndarray
    X: np.ndarray
    D: dict

    def __post_init__(self):
        b, m, k = self.pattern.block_count, self.pattern.block_size, self.rank_param
        if self.U.shape != (b, m, k) or self.V.shape != (b, m, k):
            raise ValueError(f"bases must have shape {(b, m, k)}")
        if self.X.shape != (b * k, b * k):
            raise ValueError(f"X must have shape {(b*k, b*k)}, got {self.X.shape}")
        for key, blk in self.D.items():
            if key not in self.pattern.pairs:
                raise ValueError(f"remainder block {key} lies outside the pattern")
            if blk.shape != (m, m):
                raise ValueError(f"remainder block {key} must be ({m}, {m})")

    @property
    def dim(self) -> int:
        return self.pattern.dim


def _stack_blocks(arr: np.ndarray, indices, m: int) -> np.ndarray:
    if not indices:
        return np.zeros((0, arr.shape[1]))
    return np.vstack([arr[j * m : (j + 1) * m] for j in indices])


def blr2_block_nullify(omega, pattern: BLR2Pattern, i: int, side: str = "row"):
    """Nullspace basis for the pattern blocks of one row (or column).

    Returns ``(P, G)``: P is orthonormal with omega / psi blocks indexed by
    the pattern line mapped to zero, and G stacks the remaining (admissible)
    blocks multiplied by P.  For Y = A omega this gives Y_i @ P equal to the
    admissible part of block row i of A times G, the implicit Gaussian test
    matrix.
    """
    omega = np.asarray(omega, dtype=np.float64)
    m = pattern.block_size
    if omega.shape[0] != pattern.dim:
        raise ValueError(f"test matrix has {omega.shape[0]} rows, expected {pattern.dim}")
    if side == "row":
        hit, kept = pattern.row_inadmissible(i), pattern.row_admissible(i)
    elif side == "col":
        hit, kept = pattern.col_inadmissible(i), pattern.col_admissible(i)
    else:
        raise ValueError("side must be 'row' or 'col'")
    stacked = _stack_blocks(omega, hit, m)
    s = omega.shape[1]
    if stacked.shape[0] == 0:
        P = np.eye(s)
    else:
        P = nullspace_basis(stacked)
        if P.shape[1] != s - stacked.shape[0]:
            raise np.linalg.LinAlgError(
                f"pattern blocks for {side} {i} are rank-deficient"
            )
    return P, _stack_blocks(omega, kept, m) @ P


def blr2_factors_from_sketches(pattern, k, omega, psi, omega_diag, psi_diag, Y, Z, Y_diag, Z_diag):
    """Recover (U, V, D) from one set of sketches and their images."""
    b, m = pattern.block_count, pattern.block_size
    U = np.empty((b, m, k))
    V = np.empty((b, m, k))
    for i in range(b):
        P, _ = blr2_block_nullify(omega, pattern, i, side="row")
        U[i] = pcps_basis(Y[i * m : (i + 1) * m] @ P, k)
    for j in range(b):
        Q, _ = blr2_block_nullify(psi, pattern, j, side="col")
        V[j] = pcps_basis(Z[j * m : (j + 1) * m] @ Q, k)

    # Un-sketch whole pattern lines at once, then slice out each block.
    row_slabs, col_slabs = {}, {}
    D = {}
    for i, j in sorted(pattern.pairs):
        if i not in row_slabs:
            yi = Y_diag[i * m : (i + 1) * m]
            deflated = yi - U[i] @ (U[i].T @ yi)
            row_slabs[i] = right_pinv_apply(
                deflated, _stack_blocks(omega_diag, pattern.row_inadmissible(i), m)
            )
        if j not in col_slabs:
            zj = Z_diag[j * m : (j + 1) * m]
            deflated = zj - V[j] @ (V[j].T @ zj)
            col_slabs[j] = right_pinv_apply(
                deflated, _stack_blocks(psi_diag, pattern.col_inadmissible(j), m)
            )
        jpos = pattern.row_inadmissible(i).index(j)
        ipos = pattern.col_inadmissible(j).index(i)
        row_block = row_slabs[i][:, jpos * m : (jpos + 1) * m]
        col_block = col_slabs[j][:, ipos * m : (ipos + 1) * m]
        D[(i, j)] = row_block + U[i] @ (U[i].T @ col_block.T)
    return U, V, D


def _remainder_matmul(pattern: BLR2Pattern, D: dict, x: np.ndarray) -> np.ndarray:
    m = pattern.block_size
    out = np.zeros((pattern.dim, x.shape[1]))
    for (i, j), blk in D.items():
        out[i * m : (i + 1) * m] += blk @ x[j * m : (j + 1) * m]
    return out


def blr2_from_matvecs(
    oracle: MatvecOracle, pattern: BLR2Pattern, k: int, s: int, seed: int
) -> BLR2Factorization:
    """Build a BLR2 approximation from 4s sketch queries plus b*k core probes.

    The core X = U^T (A - D) V needs access beyond the sketches; it is
    realized by probing A with the b*k columns of the block-diagonal V and
    correcting with the recovered remainder.
    """
    b, m = pattern.block_count, pattern.block_size
    if oracle.dim != pattern.dim:
        raise ValueError(f"oracle dim {oracle.dim} does not match pattern dim {pattern.dim}")
    floor = pattern.width_floor(k)
    if s < floor:
        raise ValueError(f"s={s} below the pattern floor {floor}")
    stream = RngStream(seed)
    draw = lambda role: np.vstack(
        [gaussian(m, s, stream.child(blk, role)) for blk in range(b)]
    )
    omega, psi, omega_diag, psi_diag = (draw(r) for r in ("omega", "psi", "omega-diag", "psi-diag"))
    Y = oracle.apply(omega)
    Z = oracle.apply_transpose(psi)
    Y_diag = oracle.apply(omega_diag)
    Z_diag = oracle.apply_transpose(psi_diag)
    U, V, D = blr2_factors_from_sketches(
        pattern, k, omega, psi, omega_diag, psi_diag, Y, Z, Y_diag, Z_diag
    )
    V_dense = block_to_dense(V)
    AV = oracle.apply(V_dense)  # b*k probe queries
    X = block_apply_t(U, AV - _remainder_matmul(pattern, D, V_dense))
    return BLR2Factorization(pattern, k, U, V, X, D)


def blr2_reconstruct(F: BLR2Factorization) -> np.ndarray:
    """Dense matrix represented by a BLR2 factorization."""
    dense = block_apply(F.V, block_apply(F.U, F.X).T).T
    m = F.pattern.block_size
    for (i, j), blk in F.D.items():
        dense[i * m : (i + 1) * m, j * m : (j + 1) * m] += blk
    return dense


def blr2_apply(F: BLR2Factorization, x) -> np.ndarray:
    """Apply a BLR2 factorization to a vector or block of vectors."""
    x = np.asarray(x, dtype=np.float64)
    vec = x.ndim == 1
    xm = x[:, None] if vec else x
    if xm.shape[0] != F.dim:
        raise ValueError(f"operand has {xm.shape[0]} rows, expected {F.dim}")
    y = block_apply(F.U, F.X @ block_apply_t(F.V, xm)) + _remainder_matmul(F.pattern, F.D, xm)
    return y[:, 0] if vec else y
