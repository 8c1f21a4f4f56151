"""Exact counting of closed terms with bounded De Bruijn indices or levels.

Both families are described by a chain of classes ``P_0 .. P_k``; class ``i``
holds unary-binary trees whose leaves may take ``i`` labels at the top::

    P_i = i*Z + A x P_i x P_i + U x P_child(i)

where ``child(i) = i + 1`` below the bound.  At ``i = k`` the bounded-index
family keeps its unary production as a self-loop (``child(k) = k``) while the
bounded-levels family drops it.  Closed terms are class 0.

With ``y_i = z * P_i(z)`` every class solves a quadratic
``a*y^2 - c*y + g = 0`` (``c = 1``, or ``1 - z`` for the self-loop), so

    y_i = (c - sqrt(c^2 - 4*a*g)) / (2*a)

is computed by Newton iteration on exact integer power series.  Moments of a
marked statistic come from differentiating the quadratic in the mark variable;
every moment series is ``numerator / sqrt(c^2 - 4g)``, so the inverse square
root computed for the counts is reused.  Full distributions substitute the
mark variable ``u = 2**W`` (Kronecker packing) into the same solver.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from pathlib import Path
from typing import Optional

from flint import fmpz_poly

DISTRIBUTION_CAP = 300
CACHE_ENV = "DEBRUIJN_CENSUS_CACHE"
CACHE_MAGIC = b"DBCT"
CACHE_VERSION = 1


class Family(str, Enum):
    INDEX = "index"
    LEVELS = "levels"


@dataclass(frozen=True)
class FamilySpec:
    family: Family
    k: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family(self.family))
        if self.k < 1:
            raise ValueError(f"bound k must be >= 1, got {self.k}")

    def child(self, i: int) -> Optional[int]:
        """Class reached through a unary node from class ``i`` (None if no unary production)."""
        if i < self.k:
            return i + 1
        return self.k if self.family is Family.INDEX else None

    def __str__(self) -> str:
        return f"{self.family.value}:{self.k}"


class InvalidMark(ValueError):
    pass


class EmptySize(ValueError):
    pass


class CapExceeded(ValueError):
    pass


MARK_KINDS = ("none", "total", "leaves", "unary", "binary")


@dataclass(frozen=True)
class Mark:
    """Marked statistic: ``none``, ``total`` leaves, or ``leaves``/``unary``/``binary`` at a level."""

    kind: str = "none"
    level: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in MARK_KINDS:
            raise InvalidMark(f"unknown mark kind {self.kind!r}")
        if self.kind in ("none", "total"):
            if self.level is not None:
                raise InvalidMark(f"mark {self.kind!r} takes no level")
        elif self.level is None or self.level < 0:
            raise InvalidMark(f"mark {self.kind!r} needs a level >= 0")

    @classmethod
    def parse(cls, text: str) -> "Mark":
        """Parse ``none``, ``total``, ``leaves@L``, ``unary@L`` or ``binary@L``."""
        if "@" in text:
            kind, _, level = text.partition("@")
            try:
                return cls(kind, int(level))
            except ValueError as exc:
                raise InvalidMark(f"bad mark {text!r}: {exc}") from None
        return cls(text)

    @property
    def is_level(self) -> bool:
        return self.level is not None

    def flags(self, i: int) -> tuple[int, int, int]:
        """(leaf, unary, binary) mark indicators for productions of class ``i``."""
        if self.kind == "total":
            return 1, 0, 0
        if self.level != i:
            return 0, 0, 0
        return (int(self.kind == "leaves"), int(self.kind == "unary"), int(self.kind == "binary"))

    def value(self, stats, hist) -> int:
        """Statistic of one term from its TermStats and LevelHistogram."""
        if self.kind == "none":
            return 0
        if self.kind == "total":
            return stats.leaf_count
        return getattr(hist, self.kind)(self.level)

    def __str__(self) -> str:
        return self.kind if self.level is None else f"{self.kind}@{self.level}"


NO_MARK = Mark()
TOTAL_LEAVES = Mark("total")


def check_mark(spec: FamilySpec, mark: Mark) -> None:
    if mark.is_level:
        if spec.family is not Family.LEVELS:
            raise InvalidMark("level marks are only defined for the bounded-levels family")
        if mark.level > spec.k:
            raise InvalidMark(f"level {mark.level} exceeds bound k={spec.k}")


# ---------------------------------------------------------------------------
# power series helpers (all truncated mod z**prec)

_ONE = fmpz_poly([1])
_Z = fmpz_poly([0, 1])


def _rsqrt(h: fmpz_poly, prec: int) -> fmpz_poly:
    """``h**(-1/2) mod z**prec`` for ``h(0) == 1`` with integral result."""
    r = _ONE
    m = 1
    while m < prec:
        m = min(2 * m, prec)
        e = (_ONE - h.mul_low(r.mul_low(r, m), m)).truncate(m)
        # error term is even once truncated to the doubled precision
        r = (r + r.mul_low(e, m) / 2).truncate(m)
    return r


def _solve(g: fmpz_poly, self_loop: bool, a: int, prec: int) -> tuple[fmpz_poly, fmpz_poly]:
    """Root of ``a*y^2 - c*y + g`` vanishing at 0; returns ``(y, 1/sqrt(c^2 - 4*a*g))``."""
    c = _ONE - _Z if self_loop else _ONE
    h = (c * c - 4 * a * g).truncate(prec)
    r = _rsqrt(h, prec)
    y = (c - h.mul_low(r, prec)) / (2 * a)
    return y.truncate(prec), r


def _class_order(spec: FamilySpec) -> range:
    return range(spec.k, -1, -1)


@lru_cache(maxsize=4)
def _base_series(spec: FamilySpec, max_size: int) -> tuple[tuple[fmpz_poly, ...], tuple[fmpz_poly, ...]]:
    """Unmarked ``y_i`` and ``1/sqrt(c^2 - 4 g_i)`` for every class."""
    prec = max_size + 2
    ys: list[Optional[fmpz_poly]] = [None] * (spec.k + 1)
    rs: list[Optional[fmpz_poly]] = [None] * (spec.k + 1)
    for i in _class_order(spec):
        child = spec.child(i)
        g = fmpz_poly([0, 0, i])
        if child is not None and child != i:
            g = g + _Z * ys[child]
        ys[i], rs[i] = _solve(g.truncate(prec), child == i, 1, prec)
    return tuple(ys), tuple(rs)  # type: ignore[arg-type]


def _row(series: fmpz_poly, max_size: int) -> list[int]:
    """Coefficients ``[z^(n+1)]`` for ``n = 0..max_size``: from ``y = zP`` back to ``P``."""
    coeffs = series.coeffs()
    return [int(coeffs[n + 1]) if n + 1 < len(coeffs) else 0 for n in range(max_size + 1)]


# ---------------------------------------------------------------------------
# moment tables


@dataclass
class MomentTable:
    """Per-class, per-size sums ``A = #terms``, ``B = sum m(t)``, ``C = sum m(t)^2``."""

    spec: FamilySpec
    mark: Mark
    max_size: int
    A: list[list[int]]
    B: Optional[list[list[int]]] = None
    C: Optional[list[list[int]]] = None


def _moment_series(spec: FamilySpec, mark: Mark, max_size: int):
    ys, rs = _base_series(spec, max_size)
    prec = max_size + 2
    zero = fmpz_poly([])
    th1: list[fmpz_poly] = [zero] * (spec.k + 1)
    th2: list[fmpz_poly] = [zero] * (spec.k + 1)
    for i in _class_order(spec):
        eL, eU, eB = mark.flags(i)
        child = spec.child(i)
        self_loop = child == i
        inner = child is not None and not self_loop
        if not (eL or eU or eB) and not (inner and (th1[child] != 0 or th2[child] != 0)):
            continue
        y, r = ys[i], rs[i]
        leaf = fmpz_poly([0, 0, i]) if eL else zero
        n1 = leaf
        n2 = leaf
        if inner:
            yc, t1c, t2c = ys[child], th1[child], th2[child]
            n1 = n1 + _Z * (eU * yc + t1c)
            n2 = n2 + _Z * (eU * yc + 2 * eU * t1c + t2c)
        if eB:
            # y^2 = c*y - g, exact from the defining quadratic
            g = fmpz_poly([0, 0, i]) + (_Z * ys[child] if inner else zero)
            c = _ONE - _Z if self_loop else _ONE
            ysq = (c * y - g).truncate(prec)
            n1 = n1 + ysq
        t1 = n1.truncate(prec).mul_low(r, prec)
        n2 = n2 + 2 * t1.mul_low(t1, prec)
        if eB:
            n2 = n2 + ysq + 4 * y.mul_low(t1, prec)
        th1[i] = t1
        th2[i] = n2.truncate(prec).mul_low(r, prec)
    return ys, th1, th2


def build_moment_tables(spec: FamilySpec, mark: Mark, max_size: int,
                        cache_dir: Optional[str] = None) -> MomentTable:
    """Exact tables for sizes ``0..max_size``; honours ``DEBRUIJN_CENSUS_CACHE``."""
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    check_mark(spec, mark)
    cache_dir = cache_dir if cache_dir is not None else os.environ.get(CACHE_ENV)
    if cache_dir:
        cached = load_table(cache_path(cache_dir, spec, mark))
        if cached is not None and cached.max_size >= max_size:
            return truncate_table(cached, max_size)
    if mark.kind == "none":
        ys, _ = _base_series(spec, max_size)
        table = MomentTable(spec, mark, max_size, [_row(y, max_size) for y in ys])
    else:
        ys, th1, th2 = _moment_series(spec, mark, max_size)
        table = MomentTable(spec, mark, max_size,
                            [_row(y, max_size) for y in ys],
                            [_row(t, max_size) for t in th1],
                            [_row(t, max_size) for t in th2])
    if cache_dir:
        save_table(table, cache_path(cache_dir, spec, mark))
    return table


def truncate_table(table: MomentTable, max_size: int) -> MomentTable:
    cut = lambda rows: None if rows is None else [row[: max_size + 1] for row in rows]  # noqa: E731
    return MomentTable(table.spec, table.mark, max_size, cut(table.A), cut(table.B), cut(table.C))


@lru_cache(maxsize=16)
def _count_row(spec: FamilySpec, max_size: int) -> tuple[int, ...]:
    ys, _ = _base_series(spec, max_size)
    return tuple(_row(ys[0], max_size))


def _round_up(n: int) -> int:
    return max(64, 1 << (n - 1).bit_length())


def count_closed(spec: FamilySpec, n: int) -> int:
    """Number of closed terms of size ``n`` in the family."""
    if n < 0:
        raise ValueError("size must be >= 0")
    return _count_row(spec, _round_up(n))[n] if n > 0 else 0


def count_row(spec: FamilySpec, max_size: int) -> list[int]:
    return list(_count_row(spec, _round_up(max_size))[: max_size + 1])


@dataclass(frozen=True)
class ExactMoments:
    n: int
    count: int
    mean: Fraction
    variance: Fraction


@lru_cache(maxsize=8)
def _moment_rows(spec: FamilySpec, mark: Mark, max_size: int):
    table = build_moment_tables(spec, mark, max_size)
    if mark.kind == "none":
        zeros = [0] * (max_size + 1)
        return table.A[0], zeros, zeros
    return table.A[0], table.B[0], table.C[0]


def moments_from_sums(n: int, a: int, b: int, c: int) -> ExactMoments:
    if a == 0:
        raise EmptySize(f"no closed terms of size {n}")
    mean = Fraction(b, a)
    return ExactMoments(n, a, mean, Fraction(c, a) - mean * mean)


def exact_moments(spec: FamilySpec, mark: Mark, n: int, max_size: Optional[int] = None) -> ExactMoments:
    """Exact mean and variance of the marked statistic over closed terms of size ``n``.

    ``max_size`` lets callers share one table between several sizes.
    """
    check_mark(spec, mark)
    a, b, c = _moment_rows(spec, mark, max(n, max_size or 0))
    return moments_from_sums(n, a[n], b[n], c[n])


# ---------------------------------------------------------------------------
# third and fourth moments
#
# Series in z whose coefficients are polynomials in eps = u - 1 truncated after
# eps**4; [eps^e] of the class-0 coefficient is sum_t binom(m(t), e), which
# gives factorial moments up to order four.

_EPS_ORDER = 5


def _eps_mul(a: list, b: list, prec: int) -> list:
    out = [fmpz_poly([]) for _ in range(_EPS_ORDER)]
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j in range(_EPS_ORDER - i):
            if b[j] != 0:
                out[i + j] += x.mul_low(b[j], prec)
    return out


def _eps_power(e: int) -> list:
    """``(1 + eps)**e`` as constant series, ``e`` may be -1."""
    if e >= 0:
        coeffs = [comb(e, j) for j in range(_EPS_ORDER)]
    else:
        coeffs = [(-1) ** j for j in range(_EPS_ORDER)]
    return [fmpz_poly([c]) for c in coeffs]


def _eps_solve(g: list, self_loop: bool, eB: int, prec: int) -> list:
    c = _ONE - _Z if self_loop else _ONE
    a = _eps_power(eB)
    h = [-4 * t for t in _eps_mul(a, g, prec)]
    h[0] = (h[0] + c * c).truncate(prec)
    r = [_ONE] + [fmpz_poly([]) for _ in range(_EPS_ORDER - 1)]
    m = 1
    while m < prec:
        m = min(2 * m, prec)
        hm = [t.truncate(m) for t in h]
        e = [-t for t in _eps_mul(hm, _eps_mul(r, r, m), m)]
        e[0] = (e[0] + _ONE).truncate(m)
        r = [(x + d / 2).truncate(m) for x, d in zip(r, _eps_mul(r, e, m))]
    root = _eps_mul(h, r, prec)
    y = [((c - root[0]) / 2).truncate(prec)] + [(-t) / 2 for t in root[1:]]
    return _eps_mul(_eps_power(-1), y, prec) if eB else y


@lru_cache(maxsize=4)
def _eps_coefficients(spec: FamilySpec, mark: Mark, max_size: int) -> tuple:
    prec = max_size + 2
    ys: list = [None] * (spec.k + 1)
    for i in _class_order(spec):
        eL, eU, eB = mark.flags(i)
        child = spec.child(i)
        leaf = fmpz_poly([0, 0, i])
        g = [leaf, leaf if eL else fmpz_poly([])] + [fmpz_poly([]) for _ in range(_EPS_ORDER - 2)]
        if child is not None and child != i:
            zc = [(_Z * t).truncate(prec) for t in ys[child]]
            g = [x + t for x, t in zip(g, _eps_mul(_eps_power(eU), zc, prec))]
        ys[i] = _eps_solve(g, child == i, eB, prec)
    return tuple(tuple(_row(t, max_size)) for t in ys[0])


@dataclass(frozen=True)
class ExactShape:
    """Exact central moments up to order four of a mark over size-``n`` terms."""

    n: int
    count: int
    mean: Fraction
    variance: Fraction
    third: Fraction
    fourth: Fraction

    @property
    def skewness(self) -> float:
        return float(self.third) / float(self.variance) ** 1.5 if self.variance else 0.0

    @property
    def excess_kurtosis(self) -> float:
        return float(self.fourth / self.variance ** 2) - 3.0 if self.variance else 0.0


def exact_shape(spec: FamilySpec, mark: Mark, n: int, max_size: Optional[int] = None) -> ExactShape:
    """Exact mean, variance, third and fourth central moments of ``mark`` at size ``n``."""
    check_mark(spec, mark)
    if mark.kind == "none":
        raise InvalidMark("exact_shape needs a mark")
    rows = _eps_coefficients(spec, mark, max(n, max_size or 0))
    c = [row[n] for row in rows]
    if c[0] == 0:
        raise EmptySize(f"no closed terms of size {n}")
    # factorial moments E[(X)_e] = e! c_e / c_0, then raw moments via Stirling numbers
    f1, f2, f3, f4 = (Fraction(factorial(e) * c[e], c[0]) for e in range(1, 5))
    m1 = f1
    m2 = f2 + f1
    m3 = f3 + 3 * f2 + f1
    m4 = f4 + 6 * f3 + 7 * f2 + f1
    var = m2 - m1 ** 2
    third = m3 - 3 * m1 * m2 + 2 * m1 ** 3
    fourth = m4 - 4 * m1 * m3 + 6 * m1 ** 2 * m2 - 3 * m1 ** 4
    return ExactShape(n, c[0], m1, var, third, fourth)


# ---------------------------------------------------------------------------
# distributions


def distribution(spec: FamilySpec, mark: Mark, n: int, cap: int = DISTRIBUTION_CAP) -> dict[int, int]:
    """Exact histogram ``{m: #terms with statistic m}`` over closed terms of size ``n``."""
    check_mark(spec, mark)
    if n > cap:
        raise CapExceeded(f"size {n} exceeds distribution cap {cap}")
    total = count_closed(spec, n)
    if total == 0:
        raise EmptySize(f"no closed terms of size {n}")
    if mark.kind == "none":
        return {0: total}
    width = total.bit_length() + 1
    packed = _packed_series(spec, mark, n, width)
    value = int(packed.coeffs()[n + 1])
    mask = (1 << width) - 1
    hist: dict[int, int] = {}
    m = 0
    while value:
        digit = value & mask
        if digit:
            hist[m] = digit
        value >>= width
        m += 1
    return hist


def _packed_series(spec: FamilySpec, mark: Mark, max_size: int, width: int) -> fmpz_poly:
    """Class-0 series with the mark variable evaluated at ``u = 2**width``."""
    u = 1 << width
    prec = max_size + 2
    ys: list[Optional[fmpz_poly]] = [None] * (spec.k + 1)
    for i in _class_order(spec):
        eL, eU, eB = mark.flags(i)
        child = spec.child(i)
        g = fmpz_poly([0, 0, i * (u if eL else 1)])
        if child is not None and child != i:
            g = g + (u if eU else 1) * _Z * ys[child]
        ys[i], _ = _solve(g.truncate(prec), child == i, u if eB else 1, prec)
    return ys[0]


# ---------------------------------------------------------------------------
# cache files


def cache_path(cache_dir: str, spec: FamilySpec, mark: Mark) -> Path:
    tag = str(mark).replace("@", "_at_")
    return Path(cache_dir) / f"{spec.family.value}_k{spec.k}_{tag}.dbct"


def save_table(table: MomentTable, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    header = json.dumps({
        "version": CACHE_VERSION,
        "family": table.spec.family.value,
        "k": table.spec.k,
        "mark": str(table.mark),
        "N": table.max_size,
    }).encode()
    rows = [table.A] if table.B is None else [table.A, table.B, table.C]
    tmp = path.with_suffix(".tmp")
    with open(tmp, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for i in range(table.spec.k + 1):
            for n in range(table.max_size + 1):
                for rows_ in rows:
                    value = rows_[i][n]
                    raw = value.to_bytes((value.bit_length() + 7) // 8, "little")
                    fh.write(struct.pack("<I", len(raw)))
                    fh.write(raw)
    os.replace(tmp, path)


def load_table(path: Path) -> Optional[MomentTable]:
    """Read a cache file; returns None when absent, damaged or written by another version."""
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError:
        return None
    try:
        return _decode_table(data)
    except (struct.error, ValueError, KeyError, TypeError):
        return None


def _decode_table(data: bytes) -> Optional[MomentTable]:
    if data[:4] != CACHE_MAGIC:
        return None
    (hlen,) = struct.unpack_from("<I", data, 4)
    header = json.loads(data[8:8 + hlen])
    if header.get("version") != CACHE_VERSION:
        return None
    spec = FamilySpec(Family(header["family"]), header["k"])
    mark = Mark.parse(header["mark"])
    N = header["N"]
    nrows = 1 if mark.kind == "none" else 3
    tables = [[[0] * (N + 1) for _ in range(spec.k + 1)] for _ in range(nrows)]
    pos = 8 + hlen
    for i in range(spec.k + 1):
        for n in range(N + 1):
            for t in tables:
                (length,) = struct.unpack_from("<I", data, pos)
                pos += 4
                if pos + length > len(data):
                    raise ValueError("truncated cache file")
                t[i][n] = int.from_bytes(data[pos:pos + length], "little")
                pos += length
    if pos != len(data):
        raise ValueError("trailing bytes in cache file")
    if nrows == 1:
        return MomentTable(spec, mark, N, tables[0])
    return MomentTable(spec, mark, N, *tables)
