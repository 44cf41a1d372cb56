"""Subgroup cores, basis lengths, and fixed-point expectations."""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from coverlab import fixpoints as fx
from coverlab.errors import ConfigError, DomainError
from coverlab.halfplane import parse_word, word_concat, word_inverse

AB = (1, 2)
BA = (2, 1)


def test_core_of_ab_ba():
    # wedge of two 2-letter loops needs no folds: 3 vertices, 4 edges
    core = fx.fold_core([AB, BA])
    assert (core.n_vertices, core.n_edges) == (3, 4)
    assert core.rank() == 2
    assert fx.basis_length(core) == 4
    assert core.edges == [(0, 1, 1), (0, 2, 2), (1, 0, 2), (2, 0, 1)]


def test_fold_collapses_shared_prefix():
    # <a, ab> = <a, b>: folds to the one-vertex wedge
    core = fx.fold_core([(1,), (1, 2)])
    assert (core.n_vertices, core.n_edges, core.rank()) == (1, 2, 2)


def test_core_of_square_and_conjugate():
    core = fx.fold_core([(1, 1)])
    assert (core.n_vertices, core.n_edges, core.rank()) == (2, 2, 1)
    assert fx.basis_length(core) == 2
    # a b a^-1: two parallel a-edges fold, leaving a loop on a stalk
    core = fx.fold_core([(1, 2, -1)])
    assert (core.n_vertices, core.n_edges, core.rank()) == (2, 2, 1)
    assert fx.basis_length(core) == 3


def test_trivial_subgroups():
    assert fx.fold_core([]).rank() == 0
    assert fx.fold_core([(1, -1)]).rank() == 0
    assert fx.basis_length(fx.fold_core([])) == 0


def test_rank_is_conjugation_invariant():
    rng = np.random.default_rng(2)
    letters = [1, -1, 2, -2]
    for _ in range(10):
        c = tuple(int(g) for g in rng.choice(letters, size=3))
        gens = [AB, (2, 2)]
        conj = [word_concat(word_concat(c, w), word_inverse(c)) for w in gens]
        assert fx.fold_core(conj).rank() == fx.fold_core(gens).rank()


def test_basis_length_matches_exhaustive_tree_search():
    for gens in [[AB, BA], [(1, 1), (2, 2)], [(1, 2, -1), (2,)], [AB, (2, 2), (1, 1)]]:
        core = fx.fold_core(gens)
        if core.n_edges <= 12:
            assert fx.basis_length(core) == fx.basis_length_all_trees(core)


def test_fix_count_against_naive_walk():
    rng = np.random.default_rng(3)
    words = [AB, (2, -1, 2)]
    for _ in range(10):
        sa, sb = rng.permutation(6), rng.permutation(6)
        ia, ib = np.argsort(sa), np.argsort(sb)
        tab = {1: sa, -1: ia, 2: sb, -2: ib}
        count = 0
        for v in range(6):
            good = True
            for w in words:
                x = v
                for g in w:
                    x = int(tab[g][x])
                good = good and x == v
            count += int(good)
        assert fx.fix_count(sa, sb, words) == count


def test_exact_expectations_closed_forms():
    # E[#fixed points of a uniform permutation] = 1 at every degree
    for n in range(2, 7):
        assert fx.expected_fix_exact([(1,)], n) == 1
        # common fixed points of two independent permutations: n * (1/n)^2
        assert fx.expected_fix_exact([(1,), (2,)], n) == Fraction(1, n)
        # fixed points of sigma^2 = fixed points + 2-cycles: 1 + 2*(1/2)
        assert fx.expected_fix_exact([(1, 1)], n) == 2
        # sigma_a sigma_b is again uniform
        assert fx.expected_fix_exact([AB], n) == 1


def test_exact_expectation_frozen_pair_subgroup():
    # full enumeration over (6!)^2 pairs, frozen once
    assert fx.expected_fix_exact([AB, BA], 6) == Fraction(1, 3)


def test_exact_matches_tiny_brute_force():
    n = 3
    words = [AB, BA]
    perms = list(itertools.permutations(range(n)))
    total = 0
    for sa in perms:
        for sb in perms:
            total += fx.fix_count(np.array(sa), np.array(sb), words)
    assert fx.expected_fix_exact(words, n) == Fraction(total, len(perms) ** 2)
    with pytest.raises(DomainError):
        fx.expected_fix_exact(words, 7)


def test_mc_consistent_with_exact():
    words = [AB, BA]
    exact = float(fx.expected_fix_exact(words, 5))
    mean, se = fx.expected_fix_mc(words, 5, 40000, seed=17)
    assert abs(mean - exact) < 4 * se


def test_fix_distribution_conjugation_invariant():
    # exact distribution over all degree-4 pairs, three conjugators
    n = 4
    perms = [np.array(p) for p in itertools.permutations(range(n))]
    base = [AB, (2, 2)]
    for c in [(1,), (2,), (2, 1)]:
        conj = [word_concat(word_concat(c, w), word_inverse(c)) for w in base]
        d0, d1 = [], []
        for sa in perms:
            for sb in perms:
                d0.append(fx.fix_count(sa, sb, base))
                d1.append(fx.fix_count(sa, sb, conj))
        assert sorted(d0) == sorted(d1)


def test_expectation_ratio_preconditions_and_value():
    with pytest.raises(DomainError):
        fx.expectation_ratio([(1,)], 64, 100, 0)  # rank 1
    with pytest.raises(DomainError):
        fx.expectation_ratio([AB, BA], 32, 100, 0)  # n < ell^3 = 64
    rep = fx.expectation_ratio([AB, BA], 64, 4000, 5)
    assert rep["rank"] == 2 and rep["ell"] == 4
    assert np.isfinite(rep["ratio"]) and rep["ratio"] >= 0.0


def test_pochhammer_values_and_bounds():
    assert fx.pochhammer_falling(5, 0) == 1
    assert fx.pochhammer_falling(5, 3) == 60
    assert fx.pochhammer_falling(50, 50) > 0
    for n in range(2, 51):
        for a in range(0, n // 2 + 1):
            p = fx.pochhammer_falling(n, a)
            assert p <= n**a
            assert n**a - a * a * n ** max(a - 1, 0) <= p


def test_pochhammer_check():
    # (5)_2 = 20 sits between 25 (1 - 4/5) = 5 and 25
    assert fx.pochhammer_falling(5, 2) == 20
    assert fx.pochhammer_check(50, 25)
    assert fx.pochhammer_check(1, 0)
    with pytest.raises(DomainError):
        fx.pochhammer_check(50, 26)
    with pytest.raises(DomainError):
        fx.pochhammer_check(0, 0)


def test_core_text_roundtrip():
    core = fx.fold_core([AB, BA])
    txt = fx.core_to_text(core)
    back = fx.core_from_text(txt)
    assert back.n_vertices == core.n_vertices and back.edges == core.edges
    with pytest.raises(ConfigError):
        fx.core_from_text("nonsense\n")
    with pytest.raises(ConfigError):
        fx.core_from_text(txt.replace("vertices 3", "vertices 1"))
    with pytest.raises(ConfigError):
        fx.core_from_text(txt + "edge 0 1 q\n")


def test_describe_core_mentions_rank():
    s = fx.describe_core(fx.fold_core([AB, BA]))
    assert "rank 2" in s and "basis length 4" in s


def test_parse_word_helper_available_for_cli():
    assert parse_word("abA") == (1, 2, -1)
