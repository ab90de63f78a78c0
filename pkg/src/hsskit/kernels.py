"""Deterministic dense linear-algebra kernels and seeded Gaussian sampling.

This module contains the small set of dense primitives everything else is
built on:

  - ``RngStream``: splittable, path-keyed random streams (counter-based
    Philox underneath) so block-parallel sampling is schedule-independent.
  - ``gaussian``: reproducible i.i.d. standard-normal test matrices.
  - ``truncated_svd_left``: top-k left singular subspace with deterministic
    sign / tie handling.
  - ``nullspace_basis``: orthonormal nullspace basis of a wide matrix.
  - ``pivoted_qr_basis``: leading columns of a column-pivoted QR.
  - ``right_pinv_apply``: Y @ pinv(Omega) for wide Omega via one SVD.

All functions are pure; streams are value types.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "RngStream",
    "as_matrix",
    "gaussian",
    "nullspace_basis",
    "pivoted_qr_basis",
    "right_pinv_apply",
    "truncated_svd_left",
]

# Relative singular-value cutoff used for rank decisions throughout.
RANK_CUTOFF = 1e-12
# Relative gap below which singular values are treated as tied.
TIE_CUTOFF = 1e-14


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array and reject non-finite entries."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _encode_label(label) -> int:
    """Map a stream-path label (small int or short string) to a stable int."""
    if isinstance(label, (bool, float)):
        raise TypeError(f"unsupported stream label type: {type(label)!r}")
    if isinstance(label, (int, np.integer)):
        value = int(label)
        if value < 0:
            raise ValueError("integer stream labels must be non-negative")
        return value
    if isinstance(label, str):
        # Offset by 2**64 so string labels can never collide with int labels.
        return (1 << 64) + int.from_bytes(label.encode("utf-8"), "big")
    raise TypeError(f"unsupported stream label type: {type(label)!r}")


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by (seed, derivation path).

    Identical (seed, path) pairs always produce identical samples; distinct
    paths behave as independent streams.  ``child`` derives a substream and
    never mutates the parent, so streams can be handed to parallel workers
    without coordination.
    """

    seed: int
    path: tuple = ()

    def child(self, *labels) -> "RngStream":
        """Derive the substream identified by appending ``labels`` to the path."""
        return RngStream(self.seed, self.path + tuple(_encode_label(l) for l in labels))

    def generator(self) -> np.random.Generator:
        """Fresh generator for this stream; repeated calls restart the sequence."""
        entropy = [int(self.seed) & 0xFFFFFFFFFFFFFFFF, *self.path]
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def gaussian(rows: int, cols: int, stream: RngStream) -> np.ndarray:
    """Sample a rows-by-cols matrix of i.i.d. standard normals from ``stream``."""
    if rows <= 0 or cols <= 0:
        raise ValueError(f"matrix dimensions must be positive, got {rows}x{cols}")
    return stream.generator().standard_normal((rows, cols))


def _fix_signs(U: np.ndarray) -> np.ndarray:
    """Flip column signs so the largest-magnitude entry of each is positive."""
    U = np.array(U, copy=True)
    for j in range(U.shape[1]):
        col = U[:, j]
        i = int(np.argmax(np.abs(col)))
        if col[i] < 0:
            U[:, j] = -col
    return U


def truncated_svd_left(B, k: int) -> np.ndarray:
    """Top-k left singular vectors of B, as an orthonormal (rows, k) matrix.

    U U^T B is a best rank-k approximation of B in the Frobenius norm.
    Columns are sign-normalized; when retained and discarded singular values
    tie to within ``TIE_CUTOFF`` relative, the lexicographically earlier
    singular vectors are kept so results are deterministic.
    """
    B = as_matrix(B, "B")
    if not 1 <= k <= min(B.shape):
        raise ValueError(f"k={k} out of range for shape {B.shape}")
    U, svals, _ = np.linalg.svd(B, full_matrices=False)
    U = _fix_signs(U)
    if k < svals.size and svals[0] > 0:
        tied = np.abs(svals - svals[k - 1]) <= TIE_CUTOFF * svals[0]
        if tied[k:].any():
            group = np.flatnonzero(tied)
            order = sorted(group, key=lambda j: tuple(U[:, j]))
            columns = np.arange(U.shape[1])
            columns[group] = order
            U = U[:, columns]
    return np.ascontiguousarray(U[:, :k])


def nullspace_basis(omega) -> np.ndarray:
    """Orthonormal basis P of the nullspace of a wide matrix, so omega @ P = 0.

    Uses a full SVD; right singular vectors whose singular values fall below
    ``RANK_CUTOFF`` relative to the largest are taken as the nullspace.  For a
    Gaussian (m, n) input with m < n the result has n - m columns almost surely.
    """
    omega = as_matrix(omega, "omega")
    m, n = omega.shape
    if m >= n:
        raise ValueError(f"expected a wide matrix (rows < cols), got {m}x{n}")
    _, svals, Vt = np.linalg.svd(omega, full_matrices=True)
    smax = svals[0] if svals.size else 0.0
    rank = int(np.count_nonzero(svals > RANK_CUTOFF * smax))
    return np.ascontiguousarray(Vt[rank:].T)


def pivoted_qr_basis(B, k: int) -> np.ndarray:
    """First k orthonormal columns of a column-pivoted QR of B."""
    B = as_matrix(B, "B")
    if not 1 <= k <= min(B.shape):
        raise ValueError(f"k={k} out of range for shape {B.shape}")
    Q, _, _ = scipy.linalg.qr(B, mode="economic", pivoting=True)
    return np.ascontiguousarray(_fix_signs(Q[:, :k]))


def right_pinv_apply(Y, omega) -> np.ndarray:
    """Compute Y @ pinv(omega) for a wide, full-row-rank omega.

    Equivalent to Y Omega^T (Omega Omega^T)^{-1}; computed from one SVD of
    omega.  Raises ``LinAlgError`` when omega is numerically rank-deficient.
    """
    Y = as_matrix(Y, "Y")
    omega = as_matrix(omega, "omega")
    m, n = omega.shape
    if Y.shape[1] != n:
        raise ValueError(f"column mismatch: Y is {Y.shape}, omega is {omega.shape}")
    if m > n:
        raise ValueError(f"omega must be wide (rows <= cols), got {m}x{n}")
    U, svals, Vt = np.linalg.svd(omega, full_matrices=False)
    if svals[0] == 0.0 or svals[-1] <= RANK_CUTOFF * svals[0]:
        raise np.linalg.LinAlgError("omega is numerically rank-deficient")
    return (Y @ Vt.T) @ ((1.0 / svals)[:, None] * U.T)
