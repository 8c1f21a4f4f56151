"""Brute-force enumeration of closed terms, used as ground truth at small sizes."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

from .series import CapExceeded, Family, FamilySpec, Mark, check_mark
from .terms import Abs, App, Term, Var, level_histogram, term_stats

ORACLE_CAP = 12


@lru_cache(maxsize=None)
def _skeletons(n: int) -> tuple:
    """All Motzkin trees with ``n`` nodes as nested tuples.

    Order: leaf < unary < binary, binary splits by ascending left size.
    """
    if n <= 0:
        return ()
    out: list = []
    if n == 1:
        out.append(("leaf",))
    if n >= 2:
        out.extend(("abs", body) for body in _skeletons(n - 1))
    for left in range(1, n - 1):
        for lt in _skeletons(left):
            for rt in _skeletons(n - 1 - left):
                out.append(("app", lt, rt))
    return tuple(out)


def _labelings(skel, depth: int, spec: FamilySpec):
    """Yield every admissible labelled term for one skeleton."""
    kind = skel[0]
    if kind == "leaf":
        top = min(depth, spec.k) if spec.family is Family.INDEX else depth
        for index in range(1, top + 1):
            yield Var(index)
    elif kind == "abs":
        if spec.family is Family.LEVELS and depth + 1 > spec.k:
            return
        for body in _labelings(skel[1], depth + 1, spec):
            yield Abs(body)
    else:
        lefts = list(_labelings(skel[1], depth, spec))
        if not lefts:
            return
        rights = list(_labelings(skel[2], depth, spec))
        for left, right in product(lefts, rights):
            yield App(left, right)


@dataclass(frozen=True)
class OracleResult:
    spec: FamilySpec
    n: int
    terms: tuple[Term, ...]


def enumerate_terms(spec: FamilySpec, n: int, cap: int = ORACLE_CAP) -> OracleResult:
    """Every closed term of size ``n`` in the family, without duplicates."""
    if n > cap:
        raise CapExceeded(f"oracle size {n} exceeds cap {cap}")
    terms: list[Term] = []
    for skel in _skeletons(n):
        terms.extend(_labelings(skel, 0, spec))
    return OracleResult(spec, n, tuple(terms))


def in_family(term: Term, spec: FamilySpec) -> bool:
    stats = term_stats(term)
    if not stats.closed:
        return False
    if spec.family is Family.INDEX:
        return stats.max_index <= spec.k
    return stats.level_count <= spec.k


def oracle_histogram(spec: FamilySpec, mark: Mark, n: int, cap: int = ORACLE_CAP) -> dict[int, int]:
    check_mark(spec, mark)
    return dict(oracle_histograms(spec, [mark], n, cap)[mark])


def oracle_histograms(spec: FamilySpec, marks, n: int, cap: int = ORACLE_CAP) -> dict[Mark, Counter]:
    """Histograms for several marks from a single enumeration."""
    hists = {mark: Counter() for mark in marks}
    for term in enumerate_terms(spec, n, cap).terms:
        stats = term_stats(term)
        hist = level_histogram(term)
        for mark, counter in hists.items():
            counter[mark.value(stats, hist)] += 1
    return hists
