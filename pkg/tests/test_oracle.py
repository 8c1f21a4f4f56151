import pytest

from debruijn_census.oracle import (ORACLE_CAP, enumerate_terms, in_family, oracle_histogram,
                                    oracle_histograms)
from debruijn_census.series import (CapExceeded, Family, FamilySpec, Mark, TOTAL_LEAVES,
                                    count_row, distribution)
from debruijn_census.terms import parse_debruijn, term_stats

INDEX1 = FamilySpec(Family.INDEX, 1)
LEVELS1 = FamilySpec(Family.LEVELS, 1)


def term_set(spec, n):
    return set(enumerate_terms(spec, n).terms)


def test_enumeration_examples():
    assert term_set(INDEX1, 4) == {parse_debruijn("λλλ1"), parse_debruijn("λ(1 1)")}
    assert term_set(LEVELS1, 6) == {parse_debruijn("λ(1(1 1))"), parse_debruijn("λ((1 1)1)")}
    assert term_set(INDEX1, 5) == {parse_debruijn(s) for s in
                                ["λλλλ1", "λλ(1 1)", "λ(1(λ1))", "λ((λ1)1)", "(λ1)(λ1)"]}
    for family in Family:
        assert enumerate_terms(FamilySpec(family, 2), 1).terms == ()


def test_enumeration_is_deterministic_and_duplicate_free():
    spec = FamilySpec(Family.INDEX, 2)
    a = enumerate_terms(spec, 8).terms
    assert a == enumerate_terms(spec, 8).terms
    assert len(set(a)) == len(a)


@pytest.mark.parametrize("family", list(Family))
@pytest.mark.parametrize("k", [1, 2, 3])
def test_counts_and_validity(family, k):
    spec = FamilySpec(family, k)
    counts = count_row(spec, 10)
    for n in range(11):
        terms = enumerate_terms(spec, n).terms
        assert len(terms) == counts[n]
        for t in terms:
            assert term_stats(t).size == n
            assert in_family(t, spec)


def test_in_family_rejects():
    assert not in_family(parse_debruijn("λλ(2 1)"), INDEX1)
    assert not in_family(parse_debruijn("λλ1"), LEVELS1)
    assert not in_family(parse_debruijn("1"), INDEX1)


def test_histogram_examples():
    assert oracle_histogram(INDEX1, TOTAL_LEAVES, 5) == {1: 1, 2: 4}
    assert oracle_histogram(LEVELS1, Mark("leaves", 1), 4) == {2: 1}
    assert oracle_histogram(FamilySpec(Family.LEVELS, 2), Mark("unary", 0), 2) == {1: 1}


def test_histograms_match_distribution_small():
    spec = FamilySpec(Family.LEVELS, 2)
    marks = [TOTAL_LEAVES, Mark("binary", 1), Mark("unary", 2)]
    hists = oracle_histograms(spec, marks, 9)
    for mark in marks:
        assert dict(hists[mark]) == distribution(spec, mark, 9)


def test_cap():
    with pytest.raises(CapExceeded):
        enumerate_terms(INDEX1, ORACLE_CAP + 1)
