"""Black-box matvec access: oracles, query accounting, level recursion.

An oracle exposes products with an N x N operator A and its transpose on
vectors or dense blocks of vectors.  ``CountingOracle`` wraps any oracle and
charges one query per vector (a width-s block costs s).

``level_apply`` simulates products with the compressed operators that arise
while a telescoping factorization is being built: given the factors already
fixed at the outer levels, each column of the operand costs exactly one query
against A.
"""

from __future__ import annotations

import threading

import numpy as np

from .structures import (
    TelescopingFactorization,
    block_apply,
    block_apply_t,
    hss_apply,
    hss_apply_transpose,
)

__all__ = [
    "CountingOracle",
    "MatvecOracle",
    "QueryCounter",
    "dense_from_oracle",
    "level_apply",
    "level_apply_transpose",
    "oracle_from_factorization",
]


class MatvecOracle:
    """Linear operator accessed only through apply / apply_transpose."""

    def __init__(self, dim: int, apply, apply_transpose):
        if dim < 1:
            raise ValueError(f"dim must be positive, got {dim}")
        self.dim = dim
        self._apply = apply
        self._apply_transpose = apply_transpose

    def _coerce(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim not in (1, 2) or x.shape[0] != self.dim:
            raise ValueError(f"operand shape {x.shape} does not match dim {self.dim}")
        return x

    def apply(self, x) -> np.ndarray:
        """A @ x for a vector or a dense block of vectors."""
        return self._apply(self._coerce(x))

    def apply_transpose(self, x) -> np.ndarray:
        """A.T @ x for a vector or a dense block of vectors."""
        return self._apply_transpose(self._coerce(x))

    @classmethod
    def from_dense(cls, A) -> "MatvecOracle":
        A = np.ascontiguousarray(A, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {A.shape}")
        return cls(A.shape[0], A.__matmul__, A.T.__matmul__)


class QueryCounter:
    """Monotone counters of single-vector queries; reset only on request."""

    def __init__(self):
        self._lock = threading.Lock()
        self.forward_count = 0
        self.transpose_count = 0

    def add_forward(self, n: int):
        with self._lock:
            self.forward_count += n

    def add_transpose(self, n: int):
        with self._lock:
            self.transpose_count += n

    def reset(self):
        with self._lock:
            self.forward_count = 0
            self.transpose_count = 0

    @property
    def total(self) -> int:
        return self.forward_count + self.transpose_count


def _width(x: np.ndarray) -> int:
    return 1 if x.ndim == 1 else x.shape[1]


class CountingOracle(MatvecOracle):
    """Wrap an oracle and count the single-vector queries each call costs."""

    def __init__(self, inner: MatvecOracle, counter: QueryCounter | None = None):
        self.counter = counter if counter is not None else QueryCounter()

        def fwd(x):
            self.counter.add_forward(_width(x))
            return inner.apply(x)

        def tr(x):
            self.counter.add_transpose(_width(x))
            return inner.apply_transpose(x)

        super().__init__(inner.dim, fwd, tr)


def level_apply(oracle: MatvecOracle, levels, omega) -> np.ndarray:
    """Product of the compressed operator defined by ``levels`` with omega.

    ``levels`` holds the already-fixed LevelFactors ordered from the finest
    level outward-in (levels[0] is the finest; levels[-1] the innermost fixed
    level).  With j = len(levels) levels fixed, the compressed operator acts
    on dim(A) / 2**j rows and each column of omega costs one forward query.
    """
    omega = np.asarray(omega, dtype=np.float64)
    if not levels:
        return oracle.apply(omega)
    lf = levels[-1]
    hat = block_apply(lf.V, omega)
    return block_apply_t(lf.U, level_apply(oracle, levels[:-1], hat) - block_apply(lf.D, hat))


def level_apply_transpose(oracle: MatvecOracle, levels, psi) -> np.ndarray:
    """Transpose analogue of :func:`level_apply`; costs one transpose query
    per column."""
    psi = np.asarray(psi, dtype=np.float64)
    if not levels:
        return oracle.apply_transpose(psi)
    lf = levels[-1]
    hat = block_apply(lf.U, psi)
    inner = level_apply_transpose(oracle, levels[:-1], hat)
    return block_apply_t(lf.V, inner - block_apply_t(lf.D, hat))


def dense_from_oracle(oracle: MatvecOracle) -> np.ndarray:
    """Extract the dense matrix by probing with the identity (N forward
    queries)."""
    return oracle.apply(np.eye(oracle.dim))


def oracle_from_factorization(T: TelescopingFactorization) -> MatvecOracle:
    """Oracle backed by the fast apply of a telescoping factorization."""
    return MatvecOracle(T.dim, lambda x: hss_apply(T, x), lambda x: hss_apply_transpose(T, x))
