import numpy as np
import pytest

from hsskit import (
    BLR2Factorization,
    BLR2Pattern,
    CountingOracle,
    MatvecOracle,
    RngStream,
    SketchBundle,
    blr2_apply,
    blr2_block_nullify,
    blr2_factors_from_sketches,
    blr2_from_matvecs,
    blr2_reconstruct,
    block_nullify,
    frobenius_error,
    gaussian,
    random_blr2_matrix,
    sss_level_from_sketches,
)


def _rho(A, pattern, i):
    """Admissible part of block row i (brute-force slicer)."""
    m = pattern.block_size
    cols = pattern.row_admissible(i)
    return np.hstack([A[i * m : (i + 1) * m, j * m : (j + 1) * m] for j in cols])


class TestPattern:
    def test_diagonal(self):
        pat = BLR2Pattern.diagonal(4, 3)
        assert pat.max_blocks_per_line == 1
        assert pat.row_inadmissible(2) == (2,)
        assert pat.row_admissible(2) == (0, 1, 3)
        assert pat.width_floor(2) == 3 + 2 + 2

    def test_tridiagonal(self):
        pat = BLR2Pattern.tridiagonal(8, 4)
        assert pat.max_blocks_per_line == 3
        assert pat.row_inadmissible(0) == (0, 1)
        assert pat.row_inadmissible(3) == (2, 3, 4)
        assert pat.col_inadmissible(7) == (6, 7)
        assert pat.width_floor(2) == 3 * 4 + 2 + 2

    def test_out_of_range_pairs_rejected(self):
        with pytest.raises(ValueError):
            BLR2Pattern(3, 2, frozenset({(0, 3)}))


class TestBlr2BlockNullify:
    def test_diagonal_pattern_reduces_to_plain_nullification(self):
        pat = BLR2Pattern.diagonal(4, 4)
        omega = gaussian(16, 10, RngStream(0).child("b2"))
        Y = gaussian(16, 10, RngStream(0).child("b2y"))
        for i in range(4):
            P_pat, _ = blr2_block_nullify(omega, pat, i, side="row")
            P_plain, _ = block_nullify(omega, Y, i, 4)
            assert np.array_equal(P_pat, P_plain)

    def test_tridiagonal_dimensions(self):
        pat = BLR2Pattern.tridiagonal(8, 4)
        s = 16  # 3 * 4 + 2 + 2 with k = 2
        omega = gaussian(pat.dim, s, RngStream(1).child("b2"))
        for i in range(8):
            P, G = blr2_block_nullify(omega, pat, i, side="row")
            hit = len(pat.row_inadmissible(i)) * 4
            assert P.shape == (s, s - hit)
            assert P.shape[1] >= s - pat.max_blocks_per_line * 4
            assert G.shape == (pat.dim - hit, s - hit)

    def test_implicit_sketch_identity(self):
        pat = BLR2Pattern.tridiagonal(8, 4)
        rng = np.random.default_rng(2)
        A = rng.standard_normal((32, 32))
        omega = gaussian(32, 16, RngStream(3).child("b2"))
        Y = A @ omega
        m = pat.block_size
        for i in range(8):
            P, G = blr2_block_nullify(omega, pat, i, side="row")
            got = Y[i * m : (i + 1) * m] @ P
            assert np.abs(got - _rho(A, pat, i) @ G).max() <= 1e-11

    def test_column_side(self):
        pat = BLR2Pattern.tridiagonal(4, 2)
        rng = np.random.default_rng(4)
        A = rng.standard_normal((8, 8))
        psi = gaussian(8, 8, RngStream(5).child("b2"))
        Z = A.T @ psi
        m = 2
        for j in range(4):
            Q, H = blr2_block_nullify(psi, pat, j, side="col")
            rows = pat.col_admissible(j)
            gamma = np.vstack([A[i * m : (i + 1) * m, j * m : (j + 1) * m] for i in rows])
            got = Z[j * m : (j + 1) * m] @ Q
            assert np.abs(got - gamma.T @ H).max() <= 1e-11


class TestBlr2Build:
    def test_exact_recovery_diagonal_pattern(self):
        pat = BLR2Pattern.diagonal(8, 4)
        k = 2
        A = random_blr2_matrix(pat, k, seed=0)
        F = blr2_from_matvecs(MatvecOracle.from_dense(A), pat, k, s=pat.block_size + k + 2, seed=1)
        assert frobenius_error(A, F) <= 1e-9

    def test_exact_recovery_tridiagonal_pattern(self):
        pat = BLR2Pattern.tridiagonal(8, 4)
        k = 2
        A = random_blr2_matrix(pat, k, seed=2)
        F = blr2_from_matvecs(MatvecOracle.from_dense(A), pat, k, s=pat.width_floor(k), seed=3)
        assert frobenius_error(A, F) <= 1e-9

    def test_zero_matrix_gives_zero_factorization(self):
        pat = BLR2Pattern.diagonal(4, 4)
        F = blr2_from_matvecs(MatvecOracle.from_dense(np.zeros((16, 16))), pat, 2, s=8, seed=4)
        assert not blr2_reconstruct(F).any()
        assert not F.X.any()
        assert all(not blk.any() for blk in F.D.values())

    def test_query_count(self):
        pat = BLR2Pattern.diagonal(8, 4)
        k, s = 2, 9
        A = random_blr2_matrix(pat, k, seed=5)
        o = CountingOracle(MatvecOracle.from_dense(A))
        blr2_from_matvecs(o, pat, k, s=s, seed=6)
        assert o.counter.forward_count == 2 * s + pat.block_count * k  # sketches + core probes
        assert o.counter.transpose_count == 2 * s

    def test_width_floor_enforced(self):
        pat = BLR2Pattern.tridiagonal(4, 4)
        A = random_blr2_matrix(pat, 2, seed=7)
        with pytest.raises(ValueError):
            blr2_from_matvecs(MatvecOracle.from_dense(A), pat, 2, s=pat.width_floor(2) - 1, seed=8)

    def test_error_decomposes_blockwise(self):
        # Total squared error splits exactly into pattern-block terms plus
        # low-rank-block terms.
        pat = BLR2Pattern.tridiagonal(4, 4)
        k = 2
        rng = np.random.default_rng(9)
        A = rng.standard_normal((16, 16))
        F = blr2_from_matvecs(MatvecOracle.from_dense(A), pat, k, s=pat.width_floor(k), seed=10)
        B = blr2_reconstruct(F)
        m = pat.block_size
        total = np.linalg.norm(A - B) ** 2
        split = 0.0
        for i in range(4):
            for j in range(4):
                split += np.linalg.norm(
                    (A - B)[i * m : (i + 1) * m, j * m : (j + 1) * m]
                ) ** 2
        assert abs(total - split) <= 1e-8 * total

    def test_bound_compliance_on_noisy_input(self):
        # Exactly structured plus noise: mean squared error over seeds stays
        # under the theorem factor times the noise energy (which bounds the
        # best achievable error).
        pat = BLR2Pattern.diagonal(8, 4)
        k, m, smax = 2, 4, 1
        s = 2 * (smax * m + k)  # 12
        base = random_blr2_matrix(pat, k, seed=11)
        noise = 1e-3 * np.random.default_rng(12).standard_normal(base.shape)
        A = base + noise
        gamma = (1.0 + 2.0 * np.e * (s - smax * m) / np.sqrt((s - smax * m - k) ** 2 - 1)) ** 2
        gamma_diag = smax * m / (s - smax * m - 1)
        factor = 2.0 * gamma * (1.0 + gamma_diag)
        errs2 = []
        for seed in range(10):
            F = blr2_from_matvecs(MatvecOracle.from_dense(A), pat, k, s=s, seed=seed)
            errs2.append((frobenius_error(A, F) * np.linalg.norm(A)) ** 2)
        assert np.mean(errs2) <= factor * np.linalg.norm(noise) ** 2

    def test_theorem_gamma_diag_value(self):
        # gamma_diag = smax * m / (s - smax * m - 1) at s = 2 (smax m + k)
        smax, m, k = 1, 4, 2
        s = 2 * (smax * m + k)
        assert abs(smax * m / (s - smax * m - 1) - 4.0 / 7.0) <= 1e-15


class TestBlr2Containers:
    def test_apply_matches_reconstruct(self):
        pat = BLR2Pattern.tridiagonal(4, 4)
        k = 2
        A = random_blr2_matrix(pat, k, seed=13)
        F = blr2_from_matvecs(MatvecOracle.from_dense(A), pat, k, s=pat.width_floor(k), seed=14)
        dense = blr2_reconstruct(F)
        x = np.random.default_rng(15).standard_normal((16, 3))
        assert np.linalg.norm(blr2_apply(F, x) - dense @ x) <= 1e-12 * np.linalg.norm(dense @ x)

    def test_remainder_outside_pattern_rejected(self):
        pat = BLR2Pattern.diagonal(2, 4)
        k = 2
        U = np.stack([np.eye(4)[:, :2]] * 2)
        X = np.zeros((4, 4))
        with pytest.raises(ValueError):
            BLR2Factorization(pat, k, U, U, X, {(0, 1): np.zeros((4, 4))})


class TestSpecialization:
    def test_diagonal_blr2_step_equals_one_level_step(self):
        # With a diagonal pattern, block size m = 2k and the same sketches,
        # the flat build step and the per-level step of the hierarchical
        # driver produce identical factors.
        k, level = 2, 3
        m = 2 * k
        b = 1 << level
        pat = BLR2Pattern.diagonal(b, m)
        n = pat.dim
        s = 3 * k + 2
        rng = np.random.default_rng(16)
        A = rng.standard_normal((n, n))
        stream = RngStream(17).child("spec")
        omega, psi, od, pd = (gaussian(n, s, stream.child(r)) for r in range(4))
        Y, Yd = A @ omega, A @ od
        Z, Zd = A.T @ psi, A.T @ pd

        U2, V2, D2 = blr2_factors_from_sketches(pat, k, omega, psi, od, pd, Y, Z, Yd, Zd)
        bundle = SketchBundle(omega, psi, od, pd, Y, Z, Yd, Zd, block_rows=m)
        lf = sss_level_from_sketches(bundle, k)

        assert np.abs(U2 - lf.U).max() <= 1e-10
        assert np.abs(V2 - lf.V).max() <= 1e-10
        for i in range(b):
            assert np.abs(D2[(i, i)] - lf.D[i]).max() <= 1e-10
