"""hsskit: rank-structured matrix approximation from entries or matvec queries.

Builds telescoping (hierarchical), one-level, and uniform block low-rank
factorizations of a square matrix accessed either explicitly or only through
black-box products with the matrix and its transpose, with query accounting,
quasi-optimality constants, test-problem generators, and an experiment
harness.
"""

from .blr2 import (
    BLR2Factorization,
    BLR2Pattern,
    blr2_apply,
    blr2_block_nullify,
    blr2_factors_from_sketches,
    blr2_from_matvecs,
    blr2_reconstruct,
)
from .experiment import (
    CSV_HEADER,
    ConfigError,
    ExperimentRecord,
    parse_config,
    records_to_csv,
    run_experiment,
    run_sweep,
)
from .formats import (
    BadMagicError,
    FormatError,
    TruncatedPayloadError,
    VersionMismatchError,
    deserialize,
    read_dense,
    serialize,
    write_dense,
)
from .greedy import greedy_hss_explicit, sss_step_explicit
from .kernels import (
    RngStream,
    gaussian,
    nullspace_basis,
    pivoted_qr_basis,
    right_pinv_apply,
    truncated_svd_left,
)
from .matvec import (
    MatvecConfig,
    TheoremBounds,
    hss_from_matvecs_fresh,
    hss_from_matvecs_reused,
    sss_level_from_sketches,
    theorem_bounds,
)
from .oracle import (
    CountingOracle,
    MatvecOracle,
    QueryCounter,
    dense_from_oracle,
    level_apply,
    level_apply_transpose,
    oracle_from_factorization,
)
from .sketching import SketchBundle, block_nullify, pcps_basis, recover_diagonal
from .structures import (
    BlockPartition,
    LevelFactors,
    SSSFactorization,
    TelescopingFactorization,
    hss_apply,
    hss_apply_transpose,
    hss_block_col,
    hss_block_row,
    reconstruct_dense,
    sss_apply,
    sss_reconstruct,
    validate_hss_ranks,
)
from .testbed import (
    banded_inverse_oracle,
    bie_star_matrix,
    frobenius_error,
    grid_schur_oracle,
    hard_instance,
    random_banded_matrix,
    random_blr2_matrix,
    random_hss_matrix,
    random_telescoping,
)

__version__ = "0.1.0"
