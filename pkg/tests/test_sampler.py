import random
from collections import Counter

import pytest
from scipy.stats import chisquare

from debruijn_census.oracle import enumerate_terms, in_family
from debruijn_census.sampler import (Sampler, sample_batch_stats, sample_histograms, sample_term,
                                     sample_terms, substream_seeds)
from debruijn_census.series import (EmptySize, Family, FamilySpec, Mark, TOTAL_LEAVES, count_closed,
                                    distribution)
from debruijn_census.terms import Abs, Var, level_histogram, render_debruijn, term_stats

ALPHA = 1e-3


def test_unique_term():
    for seed in range(5):
        assert sample_term(FamilySpec(Family.LEVELS, 1), 2, seed) == Abs(Var(1))


def test_deterministic():
    spec = FamilySpec(Family.INDEX, 3)
    assert sample_term(spec, 200, 11) == sample_term(spec, 200, 11)
    a = [render_debruijn(t) for t in sample_terms(spec, 60, 20, 5)]
    assert a == [render_debruijn(t) for t in sample_terms(spec, 60, 20, 5)]
    assert len(set(a)) > 1


def test_workers_do_not_change_output():
    spec = FamilySpec(Family.LEVELS, 3)
    assert sample_terms(spec, 40, 12, 3, workers=1) == sample_terms(spec, 40, 12, 3, workers=3)


def test_substreams_distinct():
    seeds = substream_seeds(0, 1000)
    assert len(set(seeds)) == 1000
    assert substream_seeds(0, 10) == seeds[:10]


def test_empty_size():
    with pytest.raises(EmptySize):
        sample_term(FamilySpec(Family.LEVELS, 1), 3, 0)
    with pytest.raises(EmptySize):
        sample_term(FamilySpec(Family.INDEX, 2), 1, 0)


@pytest.mark.parametrize("family", list(Family))
@pytest.mark.parametrize("k", [1, 2, 5])
def test_samples_are_valid(family, k):
    spec = FamilySpec(family, k)
    sampler = Sampler(spec, 300)
    rng = random.Random(k)
    for n in (2, 17, 300):
        if count_closed(spec, n) == 0:
            continue
        for _ in range(5):
            t = sampler.sample(n, rng)
            s = term_stats(t)
            assert s.size == n and s.closed and in_family(t, spec)
            assert level_histogram(t).totals() == (s.leaf_count, s.unary_count, s.binary_count)


def test_histogram_path_matches_term_path():
    spec = FamilySpec(Family.INDEX, 2)
    terms = sample_terms(spec, 150, 30, 9)
    assert [level_histogram(t) for t in terms] == sample_histograms(spec, 150, 30, 9)


def test_five_terms_uniform():
    spec = FamilySpec(Family.INDEX, 1)
    m = 100_000
    counts = Counter(sample_terms(spec, 5, m, 2024))
    assert set(counts) == set(enumerate_terms(spec, 5).terms)
    for c in counts.values():
        assert abs(c / m - 0.2) < 0.01
    assert chisquare(list(counts.values())).pvalue > ALPHA


SMALL = [(family, k, n) for family in Family for k in (1, 2) for n in range(2, 9)
         if count_closed(FamilySpec(family, k), n) > 1]


@pytest.mark.parametrize("family,k,n", SMALL)
def test_chi_square_small_sizes(family, k, n):
    spec = FamilySpec(family, k)
    m = 100_000
    terms = sample_terms(spec, n, m, 1000 * k + n)
    population = enumerate_terms(spec, n).terms
    counts = Counter(terms)
    assert set(counts) <= set(population)
    observed = [counts[t] for t in population]
    assert chisquare(observed).pvalue > ALPHA
    # the leaf-count histogram against the exact distribution
    exact = distribution(spec, TOTAL_LEAVES, n)
    leaves = Counter(term_stats(t).leaf_count for t in terms)
    values = sorted(exact)
    if len(values) > 1:
        total = sum(exact.values())
        expected = [m * exact[v] / total for v in values]
        assert chisquare([leaves[v] for v in values], expected).pvalue > ALPHA


def test_batch_stats_single_term():
    stats = sample_batch_stats(FamilySpec(Family.LEVELS, 1), Mark("leaves", 1), 2, 10, 0)
    assert stats.empirical_variance == 0
    assert stats.empirical_mean == 1 == stats.exact_mean
    assert stats.mean_consistent
    assert stats.level_means == [[0, 1, 0], [1, 0, 0]]


def test_batch_stats_checked_mode():
    spec = FamilySpec(Family.LEVELS, 3)
    a = sample_batch_stats(spec, Mark("unary", 1), 120, 200, 4, check=True)
    b = sample_batch_stats(spec, Mark("unary", 1), 120, 200, 4)
    assert a == b
    assert a.mean_consistent
    assert sum(sum(row) for row in a.level_means) == pytest.approx(120)


def test_batch_stats_rejects_zero_samples():
    with pytest.raises(ValueError):
        sample_batch_stats(FamilySpec(Family.INDEX, 1), TOTAL_LEAVES, 10, 0, 0)
