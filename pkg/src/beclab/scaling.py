"""Admissible-limit geometry: the exponent v(beta) and the (N, omega) constraints.

v(beta) is the pointwise maximum of four rational branches; the double limit
(N, omega) -> infinity is taken inside the region N >= omega^(v(beta)+eps).
Three further constraints tie (N, omega) to the hierarchy depth n:

    (N sqrt(omega))^{(5/2) beta - 1} omega^{5/12}  <<  n^-2
    (N sqrt(omega))^{beta - 1}       omega^{4/3}   <<  n^-1
    (N sqrt(omega))^{2 beta - 1}     omega^{5/6}   <<  n^-1
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

__all__ = [
    "BETA_OPEN_INTERVAL",
    "ScalingParams",
    "branch_values",
    "v_of_beta",
    "admissible",
    "constraint_ledger",
    "region_table",
    "write_region_csv",
    "DEFAULT_EPSILON",
]

BETA_OPEN_INTERVAL = (0, Fraction(2, 5))
DEFAULT_EPSILON = 0.1

Number = "int | float | Fraction"


def _check_beta(beta):
    lo, hi = BETA_OPEN_INTERVAL
    if not (lo < beta < hi):
        raise ValueError(f"beta must lie in the open interval (0, 2/5), got {beta}")


def branch_values(beta):
    """The four rational branches of v(beta), in a fixed order.

    Exact Fractions when beta is a Fraction or an int-ratio float is not
    assumed; floats fall through to float arithmetic.
    """
    _check_beta(beta)
    if isinstance(beta, (Fraction, int)):
        b = Fraction(beta)
        one = Fraction(1)
        return (
            (one - b) / (2 * b),
            (Fraction(5, 4) * b - Fraction(1, 12)) / (one - Fraction(5, 2) * b),
            (Fraction(1, 2) * b + Fraction(5, 6)) / (one - b),
            (b + Fraction(1, 3)) / (one - 2 * b),
        )
    b = float(beta)
    return (
        (1 - b) / (2 * b),
        (1.25 * b - 1 / 12) / (1 - 2.5 * b),
        (0.5 * b + 5 / 6) / (1 - b),
        (b + 1 / 3) / (1 - 2 * b),
    )


def v_of_beta(beta):
    """Pointwise max of the four branches; exact on rational input."""
    return max(branch_values(beta))


def conjectured_bound(beta):
    """The weaker reference exponent (1-beta)/(2 beta); reported, never enforced."""
    if isinstance(beta, (Fraction, int)):
        b = Fraction(beta)
        return (1 - b) / (2 * b)
    return (1 - float(beta)) / (2 * float(beta))


@dataclass(frozen=True)
class ScalingParams:
    """(beta, eps, N, omega) with the admissibility predicate."""

    beta: float
    N: int
    omega: float
    eps: float = DEFAULT_EPSILON

    def __post_init__(self):
        _check_beta(self.beta)
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        if self.omega < 1:
            raise ValueError("omega must be >= 1")

    def admissible(self) -> bool:
        return admissible(self.beta, self.eps, self.N, self.omega)


def admissible(beta, eps, N, omega) -> bool:
    """N >= omega^(v(beta) + eps)."""
    _check_beta(beta)
    if eps <= 0:
        raise ValueError("eps must be positive")
    return math.log(N) >= (float(v_of_beta(beta)) + float(eps)) * math.log(omega)


def constraint_ledger(s: ScalingParams, depth: int) -> dict:
    """Evaluate the three depth-n energy-estimate constraints.

    Returns, per constraint, the left side, the right side n^-p, their ratio
    (left/right; satisfied iff < 1) and the boolean flag.  depth = 0 makes the
    right sides infinite, so every constraint holds vacuously.
    """
    if depth < 0:
        raise ValueError("hierarchy depth must be >= 0")
    nsw = s.N * math.sqrt(s.omega)
    lefts = (
        nsw ** (2.5 * s.beta - 1) * s.omega ** (5 / 12),
        nsw ** (s.beta - 1) * s.omega ** (4 / 3),
        nsw ** (2 * s.beta - 1) * s.omega ** (5 / 6),
    )
    powers = (2, 1, 1)
    report = {"params": s, "depth": depth, "constraints": []}
    for i, (left, p) in enumerate(zip(lefts, powers), start=1):
        right = math.inf if depth == 0 else depth**-p
        ratio = 0.0 if depth == 0 else left / right
        report["constraints"].append(
            {"index": i, "left": left, "right": right, "ratio": ratio, "satisfied": ratio < 1}
        )
    report["all_satisfied"] = all(c["satisfied"] for c in report["constraints"])
    return report


def region_table(beta_grid: Iterable, eps: float = DEFAULT_EPSILON, N: int | None = None, omega: float | None = None) -> list[dict]:
    """Rows (beta, branch1..4, v, conjecture[, admissible]) over a beta grid."""
    rows = []
    for beta in beta_grid:
        br = branch_values(beta)
        row = {
            "beta": beta,
            "branch1": br[0],
            "branch2": br[1],
            "branch3": br[2],
            "branch4": br[3],
            "v": max(br),
            "conjecture": conjectured_bound(beta),
        }
        if N is not None and omega is not None:
            row["admissible"] = admissible(beta, eps, N, omega)
        rows.append(row)
    return rows


def write_region_csv(path, rows: Sequence[dict]) -> None:
    fields = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in rows:
            writer.writerow(
                [format(float(row[f]), ".17g") if f != "admissible" else row[f] for f in fields]
            )
