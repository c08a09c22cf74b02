"""Reader for the replication CSV contract.

The file is the one the estimation harness writes: a fixed six-column
header, one row per successful replication, LF line endings, floats in
repr precision.  This module owns its own copy of the contract so the
figure can be produced on a machine that has only the CSV.
"""

from dataclasses import dataclass

HEADER = "rep,seed,theta_hat,std_error,loglik,millis"


@dataclass(frozen=True)
class RepRow:
    rep: int
    seed: int
    theta_hat: float
    std_error: float
    loglik: float
    millis: int


def read_reps(path) -> list[RepRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != HEADER:
        raise ValueError(f"{path}: expected header {HEADER!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ValueError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
        try:
            rows.append(
                RepRow(
                    rep=int(parts[0]),
                    seed=int(parts[1]),
                    theta_hat=float(parts[2]),
                    std_error=float(parts[3]),
                    loglik=float(parts[4]),
                    millis=int(parts[5]),
                )
            )
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no replication rows")
    return rows
