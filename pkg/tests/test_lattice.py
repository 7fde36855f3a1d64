import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from infoattrib.errors import CapacityError, InvalidElementError, ValidationError
from infoattrib.lattice import (
    Automorphism,
    DownSet,
    LinearExtension,
    all_automorphisms,
    apply_automorphism,
    boolean_algebra,
    count_extensions_of_subposet,
    count_linear_extensions,
    down_closure,
    enumerate_down_sets,
    enumerate_linear_extensions,
    extensions_equal,
    get_lattice,
    is_antichain,
    maximal_elements,
    parse_downset_key,
    sample_extensions,
    sample_linear_extension,
)

# Figure labels at rank 3: d = a∨b, e = a∨c, f = b∨c
A, B, C, D, E, F = 1, 2, 4, 3, 5, 6


def brute_down_sets(alg):
    """Every down-set by filtering all subsets of P (feasible for rank ≤ 3)."""
    out = []
    for mask in range(1 << alg.size):
        members = [i for i in range(alg.size) if mask >> i & 1]
        if all(mask >> j & 1 for i in members for j in range(alg.size) if alg.leq(j, i)):
            out.append(mask)
    return out


def brute_extensions(alg):
    out = []
    for perm in itertools.permutations(range(alg.size)):
        pos = {x: k for k, x in enumerate(perm)}
        if all(pos[i] <= pos[j] for i in range(alg.size) for j in range(alg.size) if alg.leq(i, j)):
            out.append(perm)
    return out


class TestBooleanAlgebra:
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_elements_order_and_rank(self, n):
        alg = boolean_algebra(n)
        assert len(alg.elements) == 2**n
        assert alg.rho(alg.bottom) == 0 and alg.rho(alg.top) == n
        for i in alg.elements:
            assert alg.rho(i) == bin(i).count("1")
            assert alg.leq(alg.bottom, i) and alg.leq(i, alg.top)

    def test_keys_round_trip(self):
        alg = boolean_algebra(3)
        assert [alg.key(i) for i in alg.elements] == ["0", "a", "b", "ab", "c", "ac", "bc", "abc"]
        for i in alg.elements:
            assert alg.parse(alg.key(i)) == i
        assert alg.parse("⊥") == 0 and alg.parse("⊤") == 7

    @pytest.mark.parametrize("bad", ["d", "aa", "", "x"])
    def test_bad_keys(self, bad):
        with pytest.raises(InvalidElementError):
            boolean_algebra(3).parse(bad)

    def test_check_rejects_outside(self):
        with pytest.raises(InvalidElementError):
            boolean_algebra(2).check(4)


class TestDownSets:
    def test_closure_rank2_pair(self):
        s = down_closure(boolean_algebra(2), [1, 2])
        assert set(s.members) == {0, 1, 2} and set(s.maximal) == {1, 2}

    def test_closure_empty(self):
        s = down_closure(boolean_algebra(3), [])
        assert s.members == () and s.maximal == () and len(s) == 0

    def test_closure_rank3_d_and_a(self):
        s = down_closure(boolean_algebra(3), [D, A])
        assert set(s.members) == {0, A, B, D}
        assert s.maximal == (D,)

    def test_closure_idempotent(self):
        alg = boolean_algebra(3)
        s = down_closure(alg, [E, B])
        assert down_closure(alg, s.members) == s

    def test_closure_invalid(self):
        with pytest.raises(InvalidElementError):
            down_closure(boolean_algebra(2), [9])

    def test_maximal_elements(self):
        alg = boolean_algebra(3)
        assert set(maximal_elements(alg, [0, A, B, C])) == {A, B, C}
        assert maximal_elements(alg, alg.elements) == (alg.top,)
        assert maximal_elements(alg, [0, A, B, D]) == (D,)
        assert maximal_elements(alg, []) == ()

    @pytest.mark.parametrize("n,count", [(1, 3), (2, 6), (3, 20), (4, 168), (5, 7581)])
    def test_counts(self, n, count):
        assert len(enumerate_down_sets(boolean_algebra(n))) == count

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_enumeration_matches_brute_force(self, n):
        alg = boolean_algebra(n)
        got = sorted(s.mask for s in enumerate_down_sets(alg))
        assert got == sorted(brute_down_sets(alg))

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_canonical_order(self, n):
        ds = enumerate_down_sets(boolean_algebra(n))
        assert len(ds[0]) == 0 and len(ds[-1]) == 2**n
        keys = [s.sort_key for s in ds]
        assert keys == sorted(keys)
        assert len({s.mask for s in ds}) == len(ds)

    def test_rank3_order_is_stable(self):
        keys = [s.key for s in enumerate_down_sets(boolean_algebra(3))]
        assert keys[:9] == ["<>", "<0>", "<a>", "<b>", "<c>", "<a,b>", "<a,c>", "<b,c>", "<a,b,c>"]
        assert keys[-1] == "<abc>"

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_antichain_keys_and_removal(self, n):
        alg = boolean_algebra(n)
        for s in enumerate_down_sets(alg):
            assert is_antichain(alg, s.maximal)
            assert down_closure(alg, s.maximal) == s
            for i in s.maximal:
                rest = s.without(i)
                assert down_closure(alg, rest.members).mask == rest.mask

    def test_capacity(self):
        with pytest.raises(CapacityError, match="Dedekind"):
            get_lattice(6)
        with pytest.raises(CapacityError):
            get_lattice(4, max_rank=3)

    def test_parse_keys(self):
        alg = boolean_algebra(3)
        assert parse_downset_key(alg, "<c,ab>") == parse_downset_key(alg, "⟨ab,c⟩")
        assert parse_downset_key(alg, "<>") == DownSet(3, 0)
        for bad in ["", "ab", "<a,ab>", "<q>"]:
            with pytest.raises(ValidationError):
                parse_downset_key(alg, bad)

    def test_lattice_index_and_tables(self):
        lat = get_lattice(3)
        for k, s in enumerate(lat.downsets):
            assert lat.index(s) == k == lat.index(s.key) == lat.index(s.mask)
            for i in range(lat.n_players):
                if lat.maximal_matrix[k, i]:
                    assert lat.downsets[lat.remove_index[k, i]] == s.without(i)
                else:
                    assert lat.remove_index[k, i] == -1
        s, t = lat.downsets[7], lat.downsets[9]
        assert lat.downsets[lat.union(7, 9)] == s | t
        assert lat.downsets[lat.intersection(7, 9)] == s & t


class TestExtensions:
    @pytest.mark.parametrize("n,count", [(1, 1), (2, 2), (3, 48)])
    def test_counts(self, n, count):
        exts = enumerate_linear_extensions(n)
        assert len(exts) == count == count_linear_extensions(n)

    @pytest.mark.parametrize("n", [2, 3])
    def test_matches_permutation_filter(self, n):
        got = sorted(f.order for f in enumerate_linear_extensions(n))
        assert got == sorted(brute_extensions(boolean_algebra(n)))

    def test_bottom_first_top_last(self):
        for f in enumerate_linear_extensions(3):
            assert f(0) == 1 and f(7) == 8

    def test_equality_criterion_distinguishes_all(self):
        exts = enumerate_linear_extensions(3)
        for f1, f2 in itertools.combinations(exts, 2):
            assert not extensions_equal(f1, f2)
            r1, r2 = f1.rank_of, f2.rank_of
            assert any(r1[i] > r1[j] and r2[i] < r2[j] for i in range(8) for j in range(8))
        assert all(extensions_equal(f, f) for f in exts)

    def test_rank4_dp_count(self):
        n = count_linear_extensions(4)
        assert n == 1680384 and n >= 1.5e6

    def test_rank5_count_is_exact_integer(self):
        assert count_linear_extensions(5) == 14807804035657359360

    def test_stream_cap(self):
        with pytest.raises(CapacityError):
            count_linear_extensions(5, method="stream")
        with pytest.raises(CapacityError):
            enumerate_linear_extensions(4)

    def test_invalid_extension_rejected(self):
        with pytest.raises(Exception):
            LinearExtension(2, (1, 0, 2, 3))
        with pytest.raises(Exception):
            LinearExtension(2, (0, 1, 1, 3))

    def test_subposet_counts(self):
        alg = boolean_algebra(3)
        assert count_extensions_of_subposet(alg, [0]) == 1
        assert count_extensions_of_subposet(alg, []) == 1
        assert count_extensions_of_subposet(boolean_algebra(2), range(4)) == 2
        assert count_extensions_of_subposet(alg, [0, A, B]) == 2
        assert count_extensions_of_subposet(alg, alg.elements) == 48

    @pytest.mark.parametrize("subset", [[0, 1, 2, 4], [1, 2, 3, 6], [0, 3, 5, 6, 7], [2, 4, 5]])
    def test_subposet_against_permutations(self, subset):
        alg = boolean_algebra(3)
        brute = sum(
            1 for perm in itertools.permutations(subset)
            if all(perm.index(i) <= perm.index(j) for i in subset for j in subset if alg.leq(i, j))
        )
        assert count_extensions_of_subposet(alg, subset) == brute

    def test_subposet_cap(self):
        with pytest.raises(CapacityError):
            count_extensions_of_subposet(boolean_algebra(5), range(20))


class TestSampling:
    def test_rank1_and_rank2(self):
        f, w = sample_linear_extension(1, seed=3)
        assert f.order == (0, 1) and w == 1.0
        valid = {g.order for g in enumerate_linear_extensions(2)}
        for seed in range(10):
            assert sample_linear_extension(2, seed)[0].order in valid

    def test_reproducible(self):
        a = sample_extensions(3, 50, seed=9)
        b = sample_extensions(3, 50, seed=9)
        assert np.array_equal(a.orders, b.orders)

    def test_exact_sampler_uniform_chi_square(self):
        # oracle: 48 equiprobable cells; chi-square with 47 dof
        from scipy.stats import chi2

        n = 100_000
        batch = sample_extensions(3, n, seed=2024)
        index = {f.order: k for k, f in enumerate(enumerate_linear_extensions(3))}
        counts = np.zeros(48)
        for row in batch.orders:
            counts[index[tuple(int(x) for x in row)]] += 1
        expected = n / 48
        sigma = math.sqrt(n * (1 / 48) * (47 / 48))
        assert np.all(np.abs(counts - expected) < 4 * sigma)
        stat = ((counts - expected) ** 2 / expected).sum()
        assert chi2.sf(stat, 47) > 1e-4

    def test_greedy_weights_correct_bias(self):
        batch = sample_extensions(3, 40_000, seed=5, method="greedy")
        # E_q[w] = 1 for importance weights relative to the uniform law
        assert abs(batch.weights.mean() - 1.0) < 0.02
        assert batch.weights.min() > 0


class TestAutomorphisms:
    def test_identity(self):
        lat = get_lattice(3)
        ident = Automorphism.identity(3)
        assert all(apply_automorphism(ident, s) == s for s in lat.downsets)

    def test_swap_rank2(self):
        sigma = Automorphism(2, (1, 0))
        s = parse_downset_key(boolean_algebra(2), "<a>")
        assert apply_automorphism(sigma, s).key == "<b>"

    def test_cycle_rank3(self):
        sigma = Automorphism(3, (1, 2, 0))  # a→b→c→a
        s = parse_downset_key(boolean_algebra(3), "<ab>")
        assert apply_automorphism(sigma, s).key == "<bc>"

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_lift_preserves_structure(self, n):
        alg = boolean_algebra(n)
        lat = get_lattice(n)
        for sigma in all_automorphisms(n):
            inv = sigma.inverse()
            for i in alg.elements:
                assert alg.rho(sigma(i)) == alg.rho(i)
                for j in alg.elements:
                    assert alg.leq(i, j) == alg.leq(sigma(i), sigma(j))
                    assert sigma(i | j) == sigma(i) | sigma(j)
                    assert sigma(i & j) == sigma(i) & sigma(j)
            for s in lat.downsets:
                img = apply_automorphism(sigma, s)
                assert lat.index(img) >= 0
                assert apply_automorphism(inv, img) == s

    @given(st.permutations(range(3)), st.integers(0, 19))
    def test_inverse_round_trip(self, perm, k):
        sigma = Automorphism(3, tuple(perm))
        s = get_lattice(3).downsets[k]
        assert sigma.inverse().apply(sigma.apply(s)) == s
