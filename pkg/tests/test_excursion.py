from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from raagkit import z2_free_z
from raagkit.errors import InputError, UsageError
from raagkit.excursion import (
    SpecialSubgroup,
    coset_distance,
    coset_distance_search,
    covered_fraction,
    excursion_of_element,
    excursion_of_path,
    longest_run,
    loglaw_experiment,
    strong_independence_probe,
    verify_excursion,
)
from raagkit.group import Element, length
from raagkit.metric import canonical_geodesic, enumerate_ball, enumerate_geodesics, iter_sphere_codes

G = z2_free_z()
H_AB = SpecialSubgroup(G, "ab")
H_A = SpecialSubgroup(G, ["a"])
words = st.lists(st.integers(0, 5), max_size=6).map(G.from_codes)


def test_subgroup_basics():
    assert H_AB.names == ("a", "b")
    assert H_AB.contains(G.parse("a^2 b^-1")) and not H_AB.contains(G.parse("a c"))
    with pytest.raises(UsageError):
        SpecialSubgroup(G, [])
    with pytest.raises(InputError):
        SpecialSubgroup(G, ["z"])


def test_prefix_and_representative():
    x = G.parse("a b c a")
    assert H_AB.prefix(x) == G.parse("a b")
    assert H_AB.coset_representative(x) == G.parse("a b c")
    assert H_AB.distance_to(G.parse("b c a")) == 2
    # commuting Λ-letters slide out from behind other Λ-letters only
    assert H_A.coset_representative(G.parse("c b a")) == G.parse("c b")


@given(words, words)
def test_coset_representative_classes(x, y):
    same = H_AB.contains(~x * y)
    assert (H_AB.coset_representative(x) == H_AB.coset_representative(y)) == same
    z = H_AB.coset_representative(x)
    assert H_AB.contains(~z * x)


def test_coset_distance_examples():
    x = G.parse("c a^4")
    assert coset_distance(x, G.identity, H_A, 5) == 5
    assert coset_distance(x, G.identity, H_A, 4) is None
    assert coset_distance_search(x, G.identity, H_A, 5) == 5


def test_coset_distance_matches_search():
    zs = list(enumerate_ball(G, 1))
    for n in range(5):
        for codes in iter_sphere_codes(G, n):
            x = Element(G, codes)
            for z in zs:
                for H in (H_A, H_AB):
                    for K in range(4):
                        assert coset_distance(x, z, H, K) == coset_distance_search(x, z, H, K), (x, z, H, K)


@given(st.lists(st.integers(0, 5), max_size=5).map(G.from_codes), st.integers(0, 3))
def test_coset_distance_matches_search_random(x, K):
    z = G.parse("c a")
    assert coset_distance(x, z, H_AB, K) == coset_distance_search(x, z, H_AB, K, early_exit=False)


@pytest.mark.parametrize(
    "word,H,expected",
    [("a^5 b^3", H_AB, 8), ("c^4", H_AB, 0), ("c a^2 c", H_AB, 2), ("a^2 c b^3", H_AB, 3)],
)
def test_excursion_examples(word, H, expected):
    rep = excursion_of_element(G.parse(word), H)
    assert rep.excursion == expected
    assert verify_excursion(rep, H)


def test_longest_run():
    assert longest_run(G.parse("a c a^2 b c").codes, H_AB) == (3, 2)
    assert longest_run([], H_AB) == (0, 0)


@given(words)
def test_k0_fast_path_matches_general(g):
    rep = excursion_of_element(g, H_AB, 0)
    general = max(excursion_of_path(p, H_AB, 0)[0] for p in enumerate_geodesics(G.identity, g, cap=200).paths)
    assert general == rep.excursion


@given(words, st.integers(0, 2))
def test_excursion_monotone_and_bounded(g, K):
    a = excursion_of_element(g, H_A, K)
    b = excursion_of_element(g, H_A, K + 1)
    assert a.excursion <= b.excursion <= length(g)
    assert verify_excursion(b, H_A)
    small = excursion_of_element(g, H_A, K, cap=1)
    assert small.excursion <= a.excursion


@given(words, st.integers(0, 2), st.lists(st.integers(0, 5), max_size=2).map(G.from_codes))
def test_path_excursion_left_invariant(g, K, u):
    path = canonical_geodesic(G.identity, g)
    assert excursion_of_path(path, H_AB, K)[0] == excursion_of_path(path.translate(u), H_AB, K)[0]


@given(st.lists(st.integers(0, 3), max_size=6).map(G.from_codes))
def test_subgroup_elements_are_full_excursions(h):
    assert excursion_of_element(h, H_AB).excursion == length(h)


def test_truncation_flag():
    rep = excursion_of_element(G.parse("a^3 b^3"), H_A, cap=5)
    assert rep.truncated and rep.geodesics_examined == 5
    assert rep.excursion == 3
    with pytest.raises(UsageError):
        excursion_of_element(G.parse("a"), H_A, cap=0)


def test_probe_examples(Z2):
    c = G.parse("c")
    for r in (3, 4, 5):
        assert strong_independence_probe(c, H_AB, r, 5).value == 0
    ha = SpecialSubgroup(Z2, ["a"])
    assert [strong_independence_probe(Z2.parse("a"), ha, r, 5).value for r in (3, 4, 5)] == [6, 8, 10]
    with pytest.raises(UsageError):
        strong_independence_probe(G.identity, H_AB, 2, 3)


def test_loglaw_small_sphere():
    res = loglaw_experiment(G, H_AB, [1], samples=30, seed=3)
    assert {r.excursion for r in res.rows} <= {0, 1}
    assert res.per_n[1]["covered_fraction"] is None


def test_loglaw_band_and_determinism():
    a = loglaw_experiment(G, H_AB, [4, 8], samples=40, seed=9)
    b = loglaw_experiment(G, H_AB, [4, 8], samples=40, seed=9)
    assert a.as_dict() == b.as_dict() and [r.csv_row() for r in a.rows] == [r.csv_row() for r in b.rows]
    assert a.fitted and a.per_n[8]["covered_fraction"] == 1.0
    assert len(a.rows) == 80
    fixed = loglaw_experiment(G, H_AB, [8], samples=40, seed=9, C1=0.0, C2=100.0)
    assert not fixed.fitted and fixed.per_n[8]["covered_fraction"] == 1.0
    with pytest.raises(UsageError):
        loglaw_experiment(G, H_AB, [4], samples=0, seed=1)


def test_covered_fraction():
    assert covered_fraction([1, 2, 3], 1, 0, 1) is None
    ln = math.log(8)
    assert covered_fraction([1, 2, 6], 8, 1 / ln, 2 / ln) == pytest.approx(2 / 3)
