"""Command-line interface.

Subcommands::

    hsskit gen <family> [params] --out FILE        write a test matrix (DMAT)
    hsskit approx <algo> --L --k [--s --seed] --in SRC --out FILE
    hsskit blr2 --pattern P --m M --k K --s S --in SRC
    hsskit sweep --config CFG --csv OUT
    hsskit validate --in FILE.hssf --against FILE.dmat

``approx --in`` accepts either a DMAT file or an oracle spec of the form
"family:key=value,..." (families: banded, grid, bie, hard, hss), so the
matvec drivers can run without ever materializing the operator.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import formats
from .blr2 import BLR2Pattern, blr2_from_matvecs
from .experiment import ConfigError, run_sweep
from .greedy import greedy_hss_explicit
from .matvec import MatvecConfig, hss_from_matvecs_fresh, hss_from_matvecs_reused
from .oracle import CountingOracle, MatvecOracle, dense_from_oracle
from .testbed import (
    banded_inverse_oracle,
    bie_star_matrix,
    frobenius_error,
    grid_schur_oracle,
    hard_instance,
    random_hss_matrix,
)

APPROX_ALGOS = ("explicit", "fresh", "reused-svd", "reused-qr")


def load_pattern(spec: str, block_count: int, block_size: int) -> BLR2Pattern:
    """Parse a pattern argument: "diag", "tridiag", or a path to a pair-list
    file with one 1-based "i j" pair per line."""
    if spec == "diag":
        return BLR2Pattern.diagonal(block_count, block_size)
    if spec == "tridiag":
        return BLR2Pattern.tridiagonal(block_count, block_size)
    pairs = set()
    with open(spec, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{spec}:{lineno}: expected 'i j', got {raw!r}")
            i, j = (int(p) for p in parts)
            if not (1 <= i <= block_count and 1 <= j <= block_count):
                raise ValueError(f"{spec}:{lineno}: pair ({i}, {j}) out of range")
            pairs.add((i - 1, j - 1))
    return BLR2Pattern(block_count, block_size, frozenset(pairs))


def _parse_spec(text: str) -> tuple:
    family, _, rest = text.partition(":")
    params = {}
    if rest:
        for piece in rest.split(","):
            key, eq, value = piece.partition("=")
            if not eq:
                raise ValueError(f"bad oracle spec fragment {piece!r}")
            params[key.strip()] = value.strip()
    return family.strip(), params


def _p_int(params, key, default=None):
    if key in params:
        return int(params[key])
    if default is None:
        raise ValueError(f"oracle spec is missing required parameter {key!r}")
    return default


def _p_float(params, key, default):
    return float(params[key]) if key in params else default


def _oracle_from_source(src: str) -> MatvecOracle:
    if src.endswith(".dmat"):
        return MatvecOracle.from_dense(formats.read_dense(src))
    family, params = _parse_spec(src)
    if family == "banded":
        n = _p_int(params, "n")
        return banded_inverse_oracle(
            n, _p_int(params, "bandwidth", 2 * _p_int(params, "k", 8) + 1), _p_int(params, "seed", 0)
        )
    if family == "grid":
        return grid_schur_oracle(_p_int(params, "n"))
    if family == "bie":
        return MatvecOracle.from_dense(
            bie_star_matrix(_p_int(params, "n"), _p_float(params, "amplitude", 0.3), _p_int(params, "arms", 5))
        )
    if family == "hard":
        n = _p_int(params, "n")
        return MatvecOracle.from_dense(hard_instance(n.bit_length() - 2, _p_float(params, "delta", 0.1)))
    if family == "hss":
        n, k = _p_int(params, "n"), _p_int(params, "k")
        L = (n // k).bit_length() - 2
        return MatvecOracle.from_dense(random_hss_matrix(L, k, _p_int(params, "seed", 0)))
    raise ValueError(f"unknown oracle family {family!r}")


def _cmd_gen(args) -> int:
    if args.family == "hard":
        A = hard_instance(args.L, args.delta)
    elif args.family == "bie":
        A = bie_star_matrix(args.n, args.amplitude, args.arms)
    elif args.family == "hss":
        L = (args.n // args.k).bit_length() - 2
        A = random_hss_matrix(L, args.k, args.seed)
    elif args.family == "banded":
        A = dense_from_oracle(banded_inverse_oracle(args.n, args.bandwidth, args.seed))
    elif args.family == "grid":
        A = dense_from_oracle(grid_schur_oracle(args.n))
    else:
        raise ValueError(f"unknown family {args.family!r}")
    formats.write_dense(A, args.out)
    print(f"wrote {args.family} matrix {A.shape[0]}x{A.shape[1]} to {args.out}")
    return 0


def _cmd_approx(args) -> int:
    oracle = CountingOracle(_oracle_from_source(args.src))
    started = time.perf_counter()
    if args.algo == "explicit":
        T = greedy_hss_explicit(dense_from_oracle(oracle), args.L, args.k)
        sketch_q, probe_q = 0, oracle.dim
    else:
        policy = "fresh" if args.algo == "fresh" else "reused"
        method = "pivoted-qr" if args.algo == "reused-qr" else "svd-pcps"
        cfg = MatvecConfig(args.L, args.k, args.s, args.seed, method, policy)
        build = hss_from_matvecs_fresh if policy == "fresh" else hss_from_matvecs_reused
        T = build(oracle, cfg)
        sketch_q = 4 * args.s * (args.L if policy == "fresh" else 1)
        probe_q = 2 * args.k
    wall = time.perf_counter() - started
    with open(args.out, "wb") as fh:
        fh.write(formats.serialize(T))
    counter = oracle.counter
    print(f"wrote factorization (L={T.depth}, k={T.rank_param}) to {args.out}")
    print(
        f"queries: {counter.forward_count} forward + {counter.transpose_count} transpose "
        f"= {counter.total} total ({sketch_q} sketch + {probe_q} probe)"
    )
    print(f"wall time: {wall * 1e3:.1f} ms")
    return 0


def _cmd_blr2(args) -> int:
    base = _oracle_from_source(args.src)
    if base.dim % args.m:
        raise ValueError(f"operator dim {base.dim} is not a multiple of block size {args.m}")
    pattern = load_pattern(args.pattern, base.dim // args.m, args.m)
    oracle = CountingOracle(base)
    F = blr2_from_matvecs(oracle, pattern, args.k, args.s, args.seed)
    err = frobenius_error(dense_from_oracle(base), F)
    counter = oracle.counter
    probe_q = pattern.block_count * args.k
    print(
        f"pattern: {len(pattern.pairs)} dense blocks, at most "
        f"{pattern.max_blocks_per_line} per row/column"
    )
    print(
        f"queries: {counter.forward_count} forward + {counter.transpose_count} transpose "
        f"= {counter.total} total ({4 * args.s} sketch + {probe_q} core probe)"
    )
    print(f"relative frobenius error: {err:.6e}")
    return 0


def _cmd_sweep(args) -> int:
    records = run_sweep(args.config, args.csv)
    print(f"wrote {len(records)} records to {args.csv}")
    return 0


def _cmd_validate(args) -> int:
    with open(args.src, "rb") as fh:
        T = formats.deserialize(fh.read())
    A = formats.read_dense(args.against)
    err = frobenius_error(A, T)
    print(f"relative frobenius error: {err:.6e}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hsskit", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a test matrix and write it as DMAT")
    gen.add_argument("family", choices=("hard", "bie", "hss", "banded", "grid"))
    gen.add_argument("--n", type=int, help="matrix dimension")
    gen.add_argument("--k", type=int, default=8, help="rank parameter (hss)")
    gen.add_argument("--L", type=int, default=4, help="levels (hard)")
    gen.add_argument("--delta", type=float, default=0.1, help="perturbation (hard)")
    gen.add_argument("--amplitude", type=float, default=0.3, help="arm amplitude (bie)")
    gen.add_argument("--arms", type=int, default=5, help="arm count (bie)")
    gen.add_argument("--bandwidth", type=int, default=17, help="total bandwidth (banded)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_gen)

    approx = sub.add_parser("approx", help="build a factorization")
    approx.add_argument("algo", choices=APPROX_ALGOS)
    approx.add_argument("--L", type=int, required=True)
    approx.add_argument("--k", type=int, required=True)
    approx.add_argument("--s", type=int, default=None, help="sketch width (matvec algos)")
    approx.add_argument("--seed", type=int, default=0)
    approx.add_argument("--in", dest="src", required=True, help="DMAT file or oracle spec")
    approx.add_argument("--out", required=True)
    approx.set_defaults(func=_cmd_approx)

    blr2 = sub.add_parser("blr2", help="build a flat block low-rank approximation and report its error")
    blr2.add_argument("--pattern", required=True, help="'diag', 'tridiag', or a 1-based pair-list file")
    blr2.add_argument("--m", type=int, required=True, help="partition block size")
    blr2.add_argument("--k", type=int, required=True)
    blr2.add_argument("--s", type=int, required=True)
    blr2.add_argument("--seed", type=int, default=0)
    blr2.add_argument("--in", dest="src", required=True, help="DMAT file or oracle spec")
    blr2.set_defaults(func=_cmd_blr2)

    sweep = sub.add_parser("sweep", help="run an experiment sweep to CSV")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--csv", required=True)
    sweep.set_defaults(func=_cmd_sweep)

    validate = sub.add_parser("validate", help="compare a factorization against a matrix")
    validate.add_argument("--in", dest="src", required=True)
    validate.add_argument("--against", required=True)
    validate.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "approx" and args.algo != "explicit" and args.s is None:
        parser.error("matvec algorithms require --s")
    try:
        return args.func(args)
    except (ConfigError, formats.FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
