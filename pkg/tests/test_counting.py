from __future__ import annotations

import itertools
import random
from collections import Counter
from fractions import Fraction

import pytest

from raagkit import free_abelian, free_group
from raagkit.counting import (
    build_automaton,
    growth_rate,
    random_normal_form,
    sample_ball_uniform,
    sample_sphere_uniform,
    sphere_count,
    sphere_counts,
    split_seed,
)
from raagkit.errors import UsageError
from raagkit.group import STANDARD_GROUPS
from raagkit.metric import bfs_spheres

from oracles import free_product_z2_z_spheres

GROUPS = {name: make() for name, make in STANDARD_GROUPS.items()}


def test_automaton_examples(F2, Z2, G3):
    assert sphere_counts(build_automaton(F2), 3) == [1, 4, 12, 36]
    assert sphere_counts(build_automaton(Z2), 3) == [1, 4, 8, 12]
    # BFS, the rewriting oracle and the free-product block count all give 110 at n = 3
    assert sphere_counts(build_automaton(G3), 3) == [1, 6, 26, 110]


def test_free_product_block_oracle(G3):
    assert sphere_counts(build_automaton(G3), 14) == free_product_z2_z_spheres(14)


@pytest.mark.parametrize("name", sorted(GROUPS))
def test_counts_match_bfs(name):
    G = GROUPS[name]
    A = build_automaton(G)
    assert sphere_counts(A, 8) == [len(s) for s in bfs_spheres(G, 8)]


@pytest.mark.parametrize("name", sorted(GROUPS))
def test_accepts_exactly_normal_forms(name):
    G = GROUPS[name]
    A = build_automaton(G)
    for n in range(7):
        for w in itertools.product(range(2 * G.rank_count), repeat=n):
            assert A.accepts(w) == (G.from_codes(w).codes == w), w


def test_state_bound():
    for G in [*GROUPS.values(), free_group(4), free_abelian(4)]:
        assert build_automaton(G).state_count <= 3 ** G.rank_count


def test_words_are_lexicographic(G3):
    A = build_automaton(G3)
    ws = list(A.words(4))
    assert ws == sorted(ws) and len(ws) == 466


def test_big_integers():
    A = build_automaton(free_group(3))
    assert sphere_count(A, 60) == 6 * 5**59


def test_negative_radius(F2):
    with pytest.raises(UsageError):
        sphere_count(build_automaton(F2), -1)


# --- growth ---------------------------------------------------------------------------------


def test_growth_free_group(F2):
    est = growth_rate(build_automaton(F2), 12)
    assert est.sphere_ratio == 3.0
    assert abs(est.lambda_hat - 3) < 0.01
    assert not est.polynomial


def test_growth_flat_flagged(Z2):
    est = growth_rate(build_automaton(Z2), 12)
    assert est.polynomial and est.lambda_hat == 1.0
    assert est.sphere_ratio == pytest.approx(48 / 44)


def test_growth_free_product(G3):
    A = build_automaton(G3)
    for n in range(4, 15):
        est = growth_rate(A, n)
        assert 3.5 < est.sphere_ratio < 4.5


def test_growth_needs_range(F2):
    with pytest.raises(UsageError):
        growth_rate(build_automaton(F2), 3)


# --- sampling --------------------------------------------------------------------------------


def _word_probabilities(A, n: int) -> dict:
    """Exact probability of every output of the sampler, by walking its decision tree."""
    out = {}

    def rec(state, remaining, prefix, p):
        if remaining == 0:
            out[tuple(prefix)] = p
            return
        weights = A.counts_from(remaining - 1)
        row = A.transitions[state]
        total = sum(weights[t] for t in row if t >= 0)
        for c, t in enumerate(row):
            if t >= 0 and weights[t]:
                rec(t, remaining - 1, prefix + [c], p * Fraction(weights[t], total))

    rec(A.start, n, [], Fraction(1))
    return out


@pytest.mark.parametrize("name", sorted(GROUPS))
def test_sampler_exactly_uniform(name):
    A = build_automaton(GROUPS[name])
    for n in range(5):
        probs = _word_probabilities(A, n)
        size = sphere_count(A, n)
        assert len(probs) == size
        assert set(probs.values()) == {Fraction(1, size)}
        assert all(A.accepts(w) for w in probs)


def test_sample_radius_zero(G3):
    A = build_automaton(G3)
    assert all(g.is_identity() for g in sample_sphere_uniform(A, 0, 5, seed=3))


def test_samples_have_requested_length(G3):
    A = build_automaton(G3)
    assert all(len(g) == 9 for g in sample_sphere_uniform(A, 9, 50, seed=1))


def test_chi_square_free_group_sphere_two(F2):
    A = build_automaton(F2)
    counts = Counter(g.codes for g in sample_sphere_uniform(A, 2, 10_000, seed=2024))
    assert len(counts) == 12
    expected = 10_000 / 12
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    # 11 degrees of freedom; the 0.999 quantile is 31.26
    assert chi2 < 31.26
    sigma = (10_000 * (1 / 12) * (11 / 12)) ** 0.5
    assert all(abs(c - expected) < 3 * sigma for c in counts.values())


def test_sampling_reproducible_and_prefix_stable(G3):
    A = build_automaton(G3)
    a = sample_sphere_uniform(A, 7, 20, seed=11)
    b = sample_sphere_uniform(A, 7, 20, seed=11)
    c = sample_sphere_uniform(A, 7, 5, seed=11)
    assert a == b and a[:5] == c
    assert a != sample_sphere_uniform(A, 7, 20, seed=12)


def test_split_seed_is_order_free():
    assert split_seed(1, 2, 3) == split_seed(1, 2, 3)
    assert len({split_seed(1, 2, i) for i in range(100)}) == 100


def test_ball_sampling_weights(F2):
    A = build_automaton(F2)
    pts = sample_ball_uniform(A, 3, 4000, seed=5)
    assert all(len(g) <= 3 for g in pts)
    share = sum(1 for g in pts if len(g) == 3) / len(pts)
    assert abs(share - 36 / 53) < 0.05


def test_random_normal_form_accepted(G3):
    A = build_automaton(G3)
    rng = random.Random(0)
    for n in range(12):
        assert A.accepts(random_normal_form(A, n, rng))
