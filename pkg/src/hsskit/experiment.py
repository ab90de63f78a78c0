"""Experiment harness: flat-text configs, deterministic sweeps, CSV output.

A config is a flat key = value text file; unknown keys and malformed values
are reported with their line numbers.  A sweep runs every (algorithm, sketch
width, trial) cell against one generated problem, recording query counts and
relative Frobenius errors.  With timing off (the default) the whole pipeline
is a pure function of the config, so identical configs produce identical CSV
bytes.

Config keys::

    matrix      banded | grid | bie | hard | hss
    n           operator dimension (must equal 2**(L+1) * k)
    k           approximation rank
    algorithms  comma list of fresh | reused-svd | reused-qr | explicit | bstar
    s           comma list of sketch widths
    trials      number of trials per cell            (default 1)
    seed        base seed; trial t uses seed + t      (default 0)
    matrix_seed generator seed for banded / hss       (default 0)
    bandwidth   banded only                           (default 2k + 1)
    delta       hard only                             (default 0.1)
    amplitude   bie only                              (default 0.3)
    arms        bie only                              (default 5)
    timing      on | off                              (default off)
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

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

__all__ = [
    "ALGORITHMS",
    "CSV_HEADER",
    "ConfigError",
    "ExperimentRecord",
    "MATRIX_FAMILIES",
    "parse_config",
    "records_to_csv",
    "run_experiment",
    "run_sweep",
]

CSV_HEADER = "matrix,algorithm,L,k,s,trial,seed,fwd_q,tr_q,rel_err,wall_ms"

MATRIX_FAMILIES = ("banded", "grid", "bie", "hard", "hss")
ALGORITHMS = ("fresh", "reused-svd", "reused-qr", "explicit", "bstar")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentRecord:
    """One sweep cell: problem identity, query counts, achieved error."""

    matrix_name: str
    algorithm: str
    L: int
    k: int
    s: int
    trial: int
    seed: int
    forward_queries: int
    transpose_queries: int
    rel_error_fro: float
    wall_ms: float


_KEY_PARSERS = {
    "matrix": str,
    "n": int,
    "k": int,
    "algorithms": lambda v: tuple(p.strip() for p in v.split(",") if p.strip()),
    "s": lambda v: tuple(int(p) for p in v.split(",")),
    "trials": int,
    "seed": int,
    "matrix_seed": int,
    "bandwidth": int,
    "delta": float,
    "amplitude": float,
    "arms": int,
    "timing": str,
}

_REQUIRED_KEYS = ("matrix", "n", "k", "algorithms", "s")


def parse_config(text: str) -> dict:
    """Parse flat key = value config text; errors carry line numbers."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KEY_PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _KEY_PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    for key in _REQUIRED_KEYS:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")

    values.setdefault("trials", 1)
    values.setdefault("seed", 0)
    values.setdefault("matrix_seed", 0)
    values.setdefault("bandwidth", 2 * values["k"] + 1)
    values.setdefault("delta", 0.1)
    values.setdefault("amplitude", 0.3)
    values.setdefault("arms", 5)
    values.setdefault("timing", "off")

    if values["matrix"] not in MATRIX_FAMILIES:
        raise ConfigError(f"matrix must be one of {MATRIX_FAMILIES}, got {values['matrix']!r}")
    for algo in values["algorithms"]:
        if algo not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {algo!r}")
    if values["timing"] not in ("on", "off"):
        raise ConfigError(f"timing must be 'on' or 'off', got {values['timing']!r}")
    if "bstar" in values["algorithms"] and values["matrix"] != "hard":
        raise ConfigError("algorithm 'bstar' is defined only for the hard matrix family")
    if values["trials"] < 1:
        raise ConfigError("trials must be >= 1")

    n, k = values["n"], values["k"]
    ratio = n // k
    if n % k or ratio < 4 or ratio & (ratio - 1):
        raise ConfigError(f"n = {n} does not conform to 2**(L+1) * k for k = {k}")
    values["L"] = ratio.bit_length() - 2
    return values


def _build_problem(cfg: dict):
    """Return (base oracle, dense reference) for the configured family."""
    family, n, k = cfg["matrix"], cfg["n"], cfg["k"]
    if family == "banded":
        oracle = banded_inverse_oracle(n, cfg["bandwidth"], cfg["matrix_seed"])
        return oracle, dense_from_oracle(oracle)
    if family == "grid":
        oracle = grid_schur_oracle(n)
        return oracle, dense_from_oracle(oracle)
    if family == "bie":
        A = bie_star_matrix(n, cfg["amplitude"], cfg["arms"])
        return MatvecOracle.from_dense(A), A
    if family == "hard":
        A = hard_instance(n.bit_length() - 2, cfg["delta"])
        return MatvecOracle.from_dense(A), A
    if family == "hss":
        A = random_hss_matrix(cfg["L"], k, cfg["matrix_seed"])
        return MatvecOracle.from_dense(A), A
    raise ConfigError(f"unknown matrix family {family!r}")


def _run_cell(algorithm: str, base: MatvecOracle, A: np.ndarray, L: int, k: int, s: int, seed: int):
    """Run one algorithm; returns (approximation, fwd queries, tr queries)."""
    counting = CountingOracle(base)
    if algorithm == "fresh":
        approx = hss_from_matvecs_fresh(
            counting, MatvecConfig(L, k, s, seed, "svd-pcps", "fresh")
        )
    elif algorithm in ("reused-svd", "reused-qr"):
        method = "svd-pcps" if algorithm == "reused-svd" else "pivoted-qr"
        approx = hss_from_matvecs_reused(
            counting, MatvecConfig(L, k, s, seed, method, "reused")
        )
    elif algorithm == "explicit":
        approx = greedy_hss_explicit(dense_from_oracle(counting), L, k)
    elif algorithm == "bstar":
        approx = np.full_like(A, 0.5)
    else:
        raise ConfigError(f"unknown algorithm {algorithm!r}")
    return approx, counting.counter.forward_count, counting.counter.transpose_count


def run_experiment(config) -> list:
    """Run the sweep described by a config dict (see :func:`parse_config`).

    Returns canonically sorted ExperimentRecords, one per
    (algorithm, s, trial) cell; deterministic given the config when timing is
    off.
    """
    cfg = dict(config)
    base, A = _build_problem(cfg)
    L, k = cfg["L"], cfg["k"]
    timing = cfg.get("timing", "off") == "on"
    records = []
    for algorithm in cfg["algorithms"]:
        for s in cfg["s"]:
            for trial in range(cfg["trials"]):
                seed = cfg["seed"] + trial
                start = time.perf_counter()
                approx, fwd, tr = _run_cell(algorithm, base, A, L, k, s, seed)
                wall_ms = (time.perf_counter() - start) * 1e3 if timing else 0.0
                records.append(
                    ExperimentRecord(
                        matrix_name=cfg["matrix"],
                        algorithm=algorithm,
                        L=L,
                        k=k,
                        s=s,
                        trial=trial,
                        seed=seed,
                        forward_queries=fwd,
                        transpose_queries=tr,
                        rel_error_fro=frobenius_error(A, approx),
                        wall_ms=wall_ms,
                    )
                )
    records.sort(key=lambda r: (r.matrix_name, r.algorithm, r.L, r.k, r.s, r.trial))
    return records


def records_to_csv(records) -> str:
    """Render records as CSV text with the stable header."""
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.matrix_name},{r.algorithm},{r.L},{r.k},{r.s},{r.trial},{r.seed},"
            f"{r.forward_queries},{r.transpose_queries},{r.rel_error_fro:.17g},{r.wall_ms:.3f}"
        )
    return "\n".join(lines) + "\n"


def run_sweep(config_path, csv_path) -> list:
    """Load a config file, run the sweep, and write the CSV."""
    with open(config_path, "r", encoding="utf-8") as fh:
        cfg = parse_config(fh.read())
    records = run_experiment(cfg)
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(records_to_csv(records))
    return records
