"""Exact-size uniform sampling by the recursive method.

At class ``i`` and size ``n`` a single uniform integer below ``A_i[n]`` picks
the production: a leaf label, the unary production, or one binary split.
Splits are scanned from both ends (left size 1, n-2, 2, n-3, ...) because most
of the weight sits on lopsided splits; any fixed scan order keeps the draw
exactly uniform.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .series import (EmptySize, FamilySpec, Mark, NO_MARK, build_moment_tables,
                     check_mark, exact_shape)
from .terms import Abs, App, LevelHistogram, Term, Var, level_histogram, term_stats


class Sampler:
    """Uniform sampler over closed terms of sizes up to ``max_size``."""

    def __init__(self, spec: FamilySpec, max_size: int):
        self.spec = spec
        self.max_size = max_size
        self.A = build_moment_tables(spec, NO_MARK, max_size).A

    def _split_order(self, n: int):
        lo, hi = 1, n - 2
        while lo <= hi:
            yield lo
            if hi != lo:
                yield hi
            lo += 1
            hi -= 1

    def sample(self, n: int, rng: random.Random) -> Term:
        return self._draw(n, rng, True)

    def sample_histogram(self, n: int, rng: random.Random) -> LevelHistogram:
        """Level histogram of a sample, drawn with the same choices as ``sample`` without building it."""
        return self._draw(n, rng, False)

    def _draw(self, n: int, rng: random.Random, build: bool):
        if n > self.max_size:
            raise ValueError(f"size {n} beyond table size {self.max_size}")
        if n < 1 or self.A[0][n] == 0:
            raise EmptySize(f"no closed terms of size {n} in {self.spec}")
        A = self.A
        # tasks: ("build", class, size, depth) or combinator markers
        tasks: list[tuple] = [("build", 0, n, 0)]
        built: list[Term] = []
        counts: list[list[int]] = []
        while tasks:
            task = tasks.pop()
            if task[0] == "abs":
                built.append(Abs(built.pop()))
                continue
            if task[0] == "app":
                right = built.pop()
                built.append(App(built.pop(), right))
                continue
            _, cls, size, depth = task
            if not build:
                while len(counts) <= depth:
                    counts.append([0, 0, 0])
            r = rng.randrange(A[cls][size])
            if size == 1:
                if build:
                    built.append(Var(r + 1))
                else:
                    counts[depth][0] += 1
                continue
            child = self.spec.child(cls)
            if child is not None:
                w = A[child][size - 1]
                if r < w:
                    if build:
                        tasks.append(("abs",))
                    else:
                        counts[depth][1] += 1
                    tasks.append(("build", child, size - 1, depth + 1))
                    continue
                r -= w
            row = A[cls]
            for left in self._split_order(size):
                w = row[left] * row[size - 1 - left]
                if r < w:
                    if build:
                        tasks.append(("app",))
                    else:
                        counts[depth][2] += 1
                    tasks.append(("build", cls, size - 1 - left, depth))
                    tasks.append(("build", cls, left, depth))
                    break
                r -= w
            else:  # pragma: no cover - weights always sum to A[cls][size]
                raise AssertionError("production weights do not sum to the class count")
        if build:
            return built[0]
        return LevelHistogram(tuple(tuple(row) for row in counts))


def substream_seeds(seed: int, count: int) -> list[int]:
    """Independent 128-bit seeds derived from ``seed``, one per sample."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int.from_bytes(c.generate_state(4, dtype=np.uint32).tobytes(), "little") for c in children]


def sample_term(spec: FamilySpec, n: int, seed: int) -> Term:
    return Sampler(spec, n).sample(n, random.Random(substream_seeds(seed, 1)[0]))


def _run(spec: FamilySpec, n: int, seeds: list[int], workers: int, fn):
    if workers <= 1 or len(seeds) < 2 * workers:
        return fn((spec, n, seeds))
    chunks = [seeds[w::workers] for w in range(workers)]
    with ProcessPoolExecutor(workers) as pool:
        parts = list(pool.map(fn, [(spec, n, c) for c in chunks]))
    out: list = [None] * len(seeds)
    for w, part in enumerate(parts):
        out[w::workers] = part
    return out


def _term_chunk(args) -> list[Term]:
    spec, n, seeds = args
    sampler = Sampler(spec, n)
    return [sampler.sample(n, random.Random(s)) for s in seeds]


def _histogram_chunk(args) -> list[LevelHistogram]:
    spec, n, seeds = args
    sampler = Sampler(spec, n)
    return [sampler.sample_histogram(n, random.Random(s)) for s in seeds]


def sample_terms(spec: FamilySpec, n: int, m: int, seed: int, workers: int = 1) -> list[Term]:
    """``m`` samples; sample ``i`` uses substream ``i`` so output is independent of ``workers``."""
    return _run(spec, n, substream_seeds(seed, m), workers, _term_chunk)


def sample_histograms(spec: FamilySpec, n: int, m: int, seed: int, workers: int = 1) -> list[LevelHistogram]:
    """Level histograms of exactly the terms ``sample_terms`` would return."""
    return _run(spec, n, substream_seeds(seed, m), workers, _histogram_chunk)


# ---------------------------------------------------------------------------
# batch statistics


@dataclass
class SampleBatchStats:
    spec: str
    mark: str
    n: int
    sample_count: int
    seed: int
    empirical_mean: float
    empirical_variance: float
    skewness: float
    excess_kurtosis: float
    level_means: list[list[float]] = field(default_factory=list)  # [level][leaf, unary, binary]
    exact_mean: Optional[float] = None
    mean_consistent: Optional[bool] = None
    exact_skewness: Optional[float] = None
    exact_excess_kurtosis: Optional[float] = None


def _standardized(values: list[int]) -> tuple[float, float, float, float]:
    """Mean, variance, skewness, excess kurtosis; power sums accumulate exactly in ints."""
    m = len(values)
    s1 = s2 = s3 = s4 = 0
    for x in values:
        x2 = x * x
        s1 += x
        s2 += x2
        s3 += x2 * x
        s4 += x2 * x2
    mean = Fraction(s1, m)
    c2 = Fraction(s2, m) - mean ** 2
    c3 = Fraction(s3, m) - 3 * mean * Fraction(s2, m) + 2 * mean ** 3
    c4 = Fraction(s4, m) - 4 * mean * Fraction(s3, m) + 6 * mean ** 2 * Fraction(s2, m) - 3 * mean ** 4
    if c2 == 0:
        return float(mean), 0.0, 0.0, 0.0
    return float(mean), float(c2), float(c3) / float(c2) ** 1.5, float(c4 / c2 ** 2) - 3.0


def sample_batch_stats(spec: FamilySpec, mark: Mark, n: int, m: int, seed: int,
                       workers: int = 1, check: bool = False) -> SampleBatchStats:
    """Statistics of ``mark`` over ``m`` uniform samples of size ``n``.

    ``check`` asserts closedness, size and family membership of every sample.
    """
    check_mark(spec, mark)
    if m < 1:
        raise ValueError("need at least one sample")
    if check:
        from .oracle import in_family

        hists = []
        for term in sample_terms(spec, n, m, seed, workers):
            stats = term_stats(term)
            assert stats.size == n and in_family(term, spec), term
            hists.append(level_histogram(term))
    else:
        hists = sample_histograms(spec, n, m, seed, workers)
    values: list[int] = []
    level_sums: list[list[int]] = []
    for hist in hists:
        values.append(sum(row[0] for row in hist.rows) if mark.kind == "total" else mark.value(None, hist))
        for d, row in enumerate(hist.rows):
            if d == len(level_sums):
                level_sums.append([0, 0, 0])
            for c in range(3):
                level_sums[d][c] += row[c]
    mean, var, skew, kurt = _standardized(values)
    out = SampleBatchStats(str(spec), str(mark), n, m, seed, mean, var, skew, kurt,
                           [[s / m for s in row] for row in level_sums])
    if mark.kind != "none":
        shape = exact_shape(spec, mark, n)
        exact = float(shape.mean)
        out.exact_mean = exact
        out.mean_consistent = abs(mean - exact) <= 4 * math.sqrt(var / m) or var == 0 and mean == exact
        out.exact_skewness = shape.skewness
        out.exact_excess_kurtosis = shape.excess_kurtosis
    return out
