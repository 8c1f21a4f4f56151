"""Unary profile: mean node counts per De Bruijn level for bounded-levels terms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .asymptotics import classify_bound
from .series import Family, FamilySpec, Mark, exact_moments

KINDS = ("leaf", "unary", "binary")
_MARK_KIND = {"leaf": "leaves", "unary": "unary", "binary": "binary"}

CONSTANT, SQRT_N, LINEAR_N = "constant", "sqrt_n", "linear_n"


class NotBoundary(ValueError):
    pass


class LevelOutOfRange(ValueError):
    pass


def lambda_sequence(m: int) -> list[float]:
    """``lambda_0 .. lambda_m`` with ``lambda_0 = 0`` and ``lambda_{i+1} = i + 1 + sqrt(lambda_i)``."""
    if m < 0:
        raise ValueError("m must be >= 0")
    lam = [0.0]
    for i in range(m):
        lam.append(i + 1 + math.sqrt(lam[-1]))
    return lam


def limit_constant_D(k: int, l: int) -> float:
    """Limit of the mean leaf count in level ``k - l`` when ``k = N_j`` and ``l > j``.

    At the boundary the outer radicands sit at ``4 rho^2 lambda_m`` and the
    limit is the finite sum

        (k-l)/(2 lam_{l-j}) * (1 + sum_{p=1}^{k-l} sqrt(lam_{l-j}) / (2^p lam_{l-j+p} prod_{q<p} sqrt(lam_{l-j+q})))
    """
    j, kind = classify_bound(k)
    if kind != "boundary":
        raise NotBoundary(f"k={k} is not of the form N_j")
    if not j < l <= k:
        raise LevelOutOfRange(f"need {j} < l <= {k}, got l={l}")
    lam = lambda_sequence(k - j)
    base = lam[l - j]
    total = 1.0
    denom_roots = 1.0
    for p in range(1, k - l + 1):
        term = math.sqrt(base) / (2 ** p * lam[l - j + p] * denom_roots)
        total += term
        if term < 1e-15:
            break
        denom_roots *= math.sqrt(lam[l - j + p])
    return (k - l) / (2 * base) * total


def large_k_level_constant(k: int, level: int) -> float:
    """Large-``k`` approximation ``L / (2 (k - j - 1 - L))`` of the boundary constant at level ``L``."""
    j, _ = classify_bound(k)
    if not 0 <= level <= k - j - 2:
        raise LevelOutOfRange(f"level {level} outside 0..{k - j - 2}")
    return level / (2 * (k - j - 1 - level))


def predicted_regime(k: int, level: int) -> str:
    j, kind = classify_bound(k)
    if level < k - j:
        return CONSTANT
    if level == k - j and kind == "boundary":
        return SQRT_N
    return LINEAR_N


@dataclass(frozen=True)
class ProfileRow:
    level: int
    kind: str
    n: int
    mean: Fraction
    regime: str
    limit_constant: Optional[float] = None

    def csv_fields(self) -> list:
        lc = "" if self.limit_constant is None else f"{self.limit_constant:.10g}"
        return [self.level, self.kind, self.n, self.mean.numerator, self.mean.denominator, self.regime, lc]


@dataclass(frozen=True)
class ProfileReport:
    k: int
    j: int
    boundary: bool
    n: int
    rows: tuple[ProfileRow, ...]

    def mean(self, level: int, kind: str) -> Fraction:
        for row in self.rows:
            if row.level == level and row.kind == kind:
                return row.mean
        raise KeyError((level, kind))


def level_mean(k: int, level: int, kind: str, n: int, max_size: Optional[int] = None) -> Fraction:
    spec = FamilySpec(Family.LEVELS, k)
    return exact_moments(spec, Mark(_MARK_KIND[kind], level), n, max_size).mean


def profile_report(k: int, n: int, kinds: Iterable[str] = KINDS,
                   levels: Optional[Iterable[int]] = None) -> ProfileReport:
    j, kind_ = classify_bound(k)
    boundary = kind_ == "boundary"
    rows = []
    for level in (range(k + 1) if levels is None else levels):
        for kind in kinds:
            constant = None
            if boundary and kind == "leaf" and level < k - j:
                constant = limit_constant_D(k, k - level)
            rows.append(ProfileRow(level, kind, n, level_mean(k, level, kind, n),
                                   predicted_regime(k, level), constant))
    return ProfileReport(k, j, boundary, n, tuple(rows))


def plot_data(k: int, sizes: Iterable[int], kinds: Iterable[str] = KINDS):
    """``(level, kind, n, mean)`` tuples for external plotting."""
    sizes = list(sizes)
    top = max(sizes)
    for level in range(k + 1):
        for kind in kinds:
            for n in sizes:
                yield level, kind, n, float(level_mean(k, level, kind, n, max_size=top))
