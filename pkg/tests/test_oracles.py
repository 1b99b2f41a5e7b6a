"""Input families: ordered strings, permutations, cycle composition."""

import math

import pytest

from querylab.oracles import (
    AnnotatedPermutation,
    OrderedOracle,
    Permutation,
    all_annotated,
    all_inputs,
    all_permutations,
    annotate,
    comparison_matrix,
    comparison_oracle_apply,
    diff_entries,
    f_of,
    from_target,
    oracle_from_json,
    oracle_to_json,
    perm_from_json,
    perm_to_json,
    phase_oracle_apply,
    sigma_kd,
)
from querylab.states import COMPARISON, GENERIC, DomainError, PureState, make_basis_state


# -- ordered oracles ---------------------------------------------------------


def test_f_values():
    assert f_of(OrderedOracle(4, (0, 0, 1, 1))) == 2
    assert f_of(OrderedOracle(4, (1, 1, 1, 1))) == 0
    assert f_of(OrderedOracle(4, (0, 0, 0, 1))) == 3


def test_all_zero_rejected():
    with pytest.raises(ValueError):
        OrderedOracle(3, (0, 0, 0))


def test_non_monotone_rejected():
    with pytest.raises(ValueError):
        OrderedOracle(3, (1, 0, 1))


def test_all_inputs_small():
    assert [x.bits for x in all_inputs(1)] == [(1,)]
    assert [x.bits for x in all_inputs(2)] == [(1, 1), (0, 1)]


@pytest.mark.parametrize("n", [1, 2, 5, 16])
def test_all_inputs_one_per_answer(n):
    xs = all_inputs(n)
    assert len(xs) == n
    assert [x.f for x in xs] == list(range(n))


def test_monotone_bit_property():
    for x in all_inputs(9):
        for i in range(9):
            assert x.bits[i] == (1 if i >= x.f else 0)


def test_phase_oracle_flips_one_bits_only():
    x = OrderedOracle(2, (0, 1))
    s = PureState(GENERIC, {(0, 0): 0.6, (0, 1): 0.8})
    out = phase_oracle_apply(x, s)
    assert out.amp[(0, 0)] == pytest.approx(0.6)
    assert out.amp[(0, 1)] == pytest.approx(-0.8)


def test_phase_oracle_identity_past_the_input():
    x = OrderedOracle(2, (0, 1))
    s = make_basis_state(GENERIC, (0, 7))
    assert phase_oracle_apply(x, s).amp == s.amp


def test_phase_oracle_involution():
    x = OrderedOracle(3, (0, 1, 1))
    s = PureState(GENERIC, {(z, i): 1 / math.sqrt(6) for z in range(2) for i in range(3)})
    out = phase_oracle_apply(x, phase_oracle_apply(x, s))
    for l, a in s.amp.items():
        assert out.amp[l] == pytest.approx(a)


# -- permutations and comparisons --------------------------------------------


def test_permutation_validation():
    with pytest.raises(ValueError):
        Permutation((0, 0, 1))


def test_comparison_matrix_identity():
    m = comparison_matrix(Permutation((0, 1)))
    assert m.entries[0][1] == 1
    assert m.entries[1][0] == 0


def test_comparison_matrix_swap():
    m = comparison_matrix(Permutation((1, 0)))
    assert m.entries[0][1] == 0
    assert m.entries[1][0] == 1


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_comparison_matrix_antisymmetric_exhaustive(n):
    for sigma in all_permutations(n):
        m = comparison_matrix(sigma)
        for i in range(n):
            assert m.entries[i][i] == 0
            for j in range(n):
                if i != j:
                    assert m.entries[i][j] + m.entries[j][i] == 1


def test_comparison_oracle_phases():
    ident = Permutation((0, 1))
    minus = comparison_oracle_apply(ident, make_basis_state(COMPARISON, (0, 0, 1)))
    assert minus.amp[(0, 0, 1)] == pytest.approx(-1.0)  # m_01 = 1
    plus = comparison_oracle_apply(ident, make_basis_state(COMPARISON, (0, 1, 0)))
    assert plus.amp[(0, 1, 0)] == pytest.approx(1.0)  # m_10 = 0


def test_comparison_oracle_involution():
    sigma = Permutation((2, 0, 1))
    s = PureState(COMPARISON, {(0, i, j): 1 / math.sqrt(6)
                               for i in range(3) for j in range(3) if i != j})
    out = comparison_oracle_apply(sigma, comparison_oracle_apply(sigma, s))
    for l, a in s.amp.items():
        assert out.amp[l] == pytest.approx(a)


def test_comparison_oracle_rejects_out_of_range_index():
    sigma = Permutation((0, 1))
    with pytest.raises(DomainError):
        comparison_oracle_apply(sigma, make_basis_state(COMPARISON, (0, 0, 5)))


# -- sigma^(k,d) --------------------------------------------------------------


def test_sigma_kd_transposition():
    # cycle (0,1) composed with the identity
    tau = sigma_kd(Permutation((0, 1)), 0, 1)
    assert tau.images == (1, 0)


def test_sigma_kd_three_cycle():
    # cycle (0,1,2) applied pointwise to the identity
    tau = sigma_kd(Permutation((0, 1, 2)), 0, 2)
    assert tau.images == (1, 2, 0)


def test_sigma_kd_range_errors():
    sigma = Permutation((0, 1, 2))
    with pytest.raises(ValueError):
        sigma_kd(sigma, 2, 1)
    with pytest.raises(ValueError):
        sigma_kd(sigma, 0, 3)
    with pytest.raises(ValueError):
        sigma_kd(sigma, 0, 0)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_inverse_relation_exhaustive(n):
    # tau = sigma^(k,d) pins down the inverse pointwise
    for sigma in all_permutations(n):
        inv_s = sigma.inverse()
        for k in range(n - 1):
            for d in range(1, n - k):
                inv_t = sigma_kd(sigma, k, d).inverse()
                for i in range(n):
                    if i == k + d:
                        assert inv_s[i] == inv_t[k]
                    elif k <= i < k + d:
                        assert inv_s[i] == inv_t[i + 1]
                    else:
                        assert inv_s[i] == inv_t[i]


def test_diff_entries_transposition():
    assert diff_entries(Permutation((0, 1)), 0, 1) == {frozenset((0, 1))}


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_diff_entries_match_matrix_difference_exhaustive(n):
    for sigma in all_permutations(n):
        m_s = comparison_matrix(sigma)
        for k in range(n - 1):
            for d in range(1, n - k):
                m_t = comparison_matrix(sigma_kd(sigma, k, d))
                actual = {
                    frozenset((i, j))
                    for i in range(n)
                    for j in range(n)
                    if m_s.entries[i][j] != m_t.entries[i][j]
                }
                claimed = diff_entries(sigma, k, d)
                assert actual == claimed
                assert len(claimed) == d


# -- annotated permutations ----------------------------------------------------


def test_annotate_accepts_valid_marker():
    assert annotate(Permutation((0, 1, 2)), 0).marker == 0


def test_annotate_rejects_top_rank():
    with pytest.raises(ValueError):
        annotate(Permutation((0, 1, 2)), 2)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_annotated_count(n):
    assert len(all_annotated(n)) == math.factorial(n) * (n - 1)


# -- serialization --------------------------------------------------------------


def test_oracle_json_round_trip():
    x = from_target(6, 4)
    assert oracle_from_json(oracle_to_json(x)) == x


def test_perm_json_round_trip():
    sigma = Permutation((2, 0, 3, 1))
    assert perm_from_json(perm_to_json(sigma)) == sigma
