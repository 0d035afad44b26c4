#!/usr/bin/env python3

"""
Fast DHT - Derivation Pass Tests
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from models import OpCount, PassNotApplicableError  # noqa: E402
from utils.factorization import count_ops, reconstruct_dense, verify  # noqa: E402
from utils.hartley import hartley_matrix  # noqa: E402
from utils.kernels import (  # noqa: E402
    A3,
    ROOT2,
    ROOT2_HALF,
    dht3_factorization,
    dht6_factorization,
    dht12_factorization,
    dht24_factorization,
    odd12_factorization,
    odd24_tail_factorization,
)
from utils.passes import (  # noqa: E402
    derive_odd_tail,
    derive_odd_twelve,
    derive_six_point,
    derive_three_point,
    derive_twelve_point,
    derive_twenty_four_point,
    pass_column_combine,
    pass_diagonal_split,
    pass_hadamard_split,
    pass_integer_peel,
    pass_row_combine,
    pass_row_scale,
    snap,
)

a = A3
s = 1.0 + A3


def assert_same_factorization(derived, built_in):
    assert len(derived.stages) == len(built_in.stages)
    for mine, theirs in zip(derived.stages, built_in.stages):
        assert [m.shape for m in mine.chain] == [m.shape for m in theirs.chain]
        for m, t in zip(mine.chain, theirs.chain):
            np.testing.assert_allclose(m.to_dense(), t.to_dense(), rtol=0, atol=1e-12)
        assert (mine.layer is None) == (theirs.layer is None)
        if mine.layer is not None:
            np.testing.assert_array_equal(mine.layer.to_dense(), theirs.layer.to_dense())


class TestSnap:
    """Test integer snapping"""

    def test_snaps_near_integers_only(self):
        """Test only near-integer entries are snapped"""
        snapped = snap([[1 - 1e-15, 0.5], [1e-17, -2 + 1e-14]])
        np.testing.assert_array_equal(snapped, [[1.0, 0.5], [0.0, -2.0]])

    def test_no_negative_zero(self):
        """Test snapping leaves no negative zeros"""
        assert not np.signbit(snap([[-1e-17]])[0, 0])


class TestHadamardSplit:
    """Test the first pre-addition stage for even lengths"""

    @pytest.mark.parametrize("n", range(2, 65, 2))
    def test_pre_addition_is_kronecker_block(self, n):
        """Test the pre-addition is Had2 (x) I for every even length"""
        reduced, pre = pass_hadamard_split(hartley_matrix(n))
        half = n // 2
        identity = np.eye(half)
        np.testing.assert_array_equal(pre.to_dense(), np.block([[identity, identity], [identity, -identity]]))
        np.testing.assert_allclose(reduced @ pre.to_dense(), hartley_matrix(n), rtol=0, atol=1e-12)

    def test_six_point_shape(self):
        """Test the 6-point split separates sums and differences"""
        h = hartley_matrix(6)
        reduced, _ = pass_hadamard_split(h)
        np.testing.assert_array_equal(reduced[0::2, 3:], np.zeros((3, 3)))
        np.testing.assert_array_equal(reduced[1::2, :3], np.zeros((3, 3)))
        np.testing.assert_allclose(reduced[0::2, :3], h[0::2, :3], atol=1e-15)
        np.testing.assert_allclose(reduced[1::2, 3:], h[1::2, :3], atol=1e-15)

    def test_two_point_base_case(self):
        """Test the 2-point split"""
        reduced, pre = pass_hadamard_split([[1, 1], [1, -1]])
        np.testing.assert_array_equal(reduced, np.eye(2))
        np.testing.assert_array_equal(pre.to_dense(), [[1, 1], [1, -1]])

    def test_rejects_odd_length(self):
        """Test an odd length is rejected"""
        with pytest.raises(PassNotApplicableError):
            pass_hadamard_split(hartley_matrix(5))

    def test_rejects_non_hartley_matrix(self):
        """Test a matrix without the split structure is rejected"""
        with pytest.raises(PassNotApplicableError):
            pass_hadamard_split(np.arange(16.0).reshape(4, 4))


class TestIntegerPeel:
    """Test peeling integer parts into a layer matrix"""

    def test_three_point(self):
        """Test peeling the 3-point matrix"""
        balanced, layer = pass_integer_peel(hartley_matrix(3))
        assert layer.entries == ((1, 2, -1.0), (2, 1, -1.0))
        np.testing.assert_allclose(balanced, [[1, 1, 1], [1, a, -a], [1, -a, a]], rtol=0, atol=1e-15)
        np.testing.assert_allclose(balanced + layer.to_dense(), hartley_matrix(3), rtol=0, atol=1e-15)

    def test_six_point(self):
        """Test peeling the 6-point split"""
        reduced, _ = pass_hadamard_split(hartley_matrix(6))
        balanced, layer = pass_integer_peel(reduced)
        assert layer.entries == ((1, 4, 1.0), (2, 2, -1.0), (4, 1, -1.0), (5, 5, -1.0))
        assert np.max(np.abs(balanced)) <= 1.0
        np.testing.assert_allclose(balanced + layer.to_dense(), reduced, rtol=0, atol=1e-15)

    def test_negative_entry_peels_toward_zero(self):
        """Test a negative entry peels toward zero"""
        balanced, layer = pass_integer_peel([[a, -s]])
        assert layer.entries == ((0, 1, -1.0),)
        assert balanced[0, 1] == pytest.approx(-a, abs=1e-15)

    def test_remainder_matches_existing_class(self):
        """2 - a peels by 2 to -a rather than by its integer part to 1 - a"""
        balanced, layer = pass_integer_peel([[a, 2 - a]])
        assert layer.entries == ((0, 1, 2.0),)
        assert balanced[0, 1] == pytest.approx(-a, abs=1e-15)

    def test_falls_back_to_integer_part(self):
        """Test peeling by the integer part when no remainder matches"""
        balanced, layer = pass_integer_peel([[math.pi, 0.5]])
        assert layer.entries == ((0, 0, 3.0),)
        assert balanced[0, 0] == pytest.approx(math.pi - 3)

    def test_small_entries_pass_through(self):
        """Test entries inside [-1, 1] are left alone"""
        m = np.array([[1.0, -0.5], [0.25, -1.0]])
        balanced, layer = pass_integer_peel(m)
        np.testing.assert_array_equal(balanced, m)
        assert layer.is_zero

    def test_integer_entries_keep_their_sign(self):
        """2 peels to 1 plus a layer entry of 1, -2 to -1 plus -1"""
        balanced, layer = pass_integer_peel([[2, -2, 1]])
        assert layer.entries == ((0, 0, 1.0), (0, 1, -1.0))
        np.testing.assert_array_equal(balanced, [[1, -1, 1]])

    @pytest.mark.parametrize("n", [12, 24])
    def test_sound_on_longer_lengths(self, n):
        """Test balanced plus layer gives back the input"""
        reduced, _ = pass_hadamard_split(hartley_matrix(n))
        balanced, layer = pass_integer_peel(reduced)
        np.testing.assert_allclose(balanced + layer.to_dense(), reduced, rtol=0, atol=1e-12)


class TestColumnCombine:
    """Test combining agreeing columns through butterflies"""

    def test_three_point(self):
        """Test combining the 3-point columns"""
        reduced, pre = pass_column_combine([[1, 1, 1], [1, a, -a], [1, -a, a]])
        np.testing.assert_array_equal(pre.to_dense(), [[1, 0, 0], [0, 1, 1], [0, 1, -1]])
        np.testing.assert_allclose(reduced, [[1, 1, 0], [1, 0, a], [1, 0, -a]], rtol=0, atol=1e-15)

    def test_six_point_pairs(self):
        """Test the 6-point column pairs"""
        reduced, _ = pass_hadamard_split(hartley_matrix(6))
        balanced, _ = pass_integer_peel(reduced)
        combined, pre = pass_column_combine(balanced)
        expected_pre = [
            [1, 0, 0, 0, 0, 0],
            [0, 1, 1, 0, 0, 0],
            [0, 1, -1, 0, 0, 0],
            [0, 0, 0, 1, 0, 0],
            [0, 0, 0, 0, 1, 1],
            [0, 0, 0, 0, 1, -1],
        ]
        np.testing.assert_array_equal(pre.to_dense(), expected_pre)
        np.testing.assert_allclose(combined @ pre.to_dense(), balanced, rtol=0, atol=1e-12)
        assert np.count_nonzero(combined) == 12

    def test_identical_columns(self):
        """Test combining identical columns"""
        reduced, pre = pass_column_combine([[1, 1], [2, 2]])
        np.testing.assert_array_equal(reduced, [[1, 0], [2, 0]])
        np.testing.assert_array_equal(reduced @ pre.to_dense(), [[1, 1], [2, 2]])

    def test_rejects_matrix_without_pairs(self):
        """Test a matrix without agreeing columns is rejected"""
        with pytest.raises(PassNotApplicableError):
            pass_column_combine([[1, 2], [3, 4]])

    def test_explicit_pairs(self):
        """Caller-chosen pairs give the same butterfly as the greedy choice"""
        m = [[1, 1, 1], [1, a, -a], [1, -a, a]]
        greedy, greedy_pre = pass_column_combine(m)
        chosen, chosen_pre = pass_column_combine(m, pairs=((1, 2),))
        np.testing.assert_array_equal(chosen, greedy)
        np.testing.assert_array_equal(chosen_pre.to_dense(), greedy_pre.to_dense())

    @pytest.mark.parametrize("pairs", [((0, 1),), ((1, 1),), ((1, 3),), ((1, 2), (2, 0))])
    def test_rejects_invalid_pairs(self, pairs):
        """Pairs must be in range, distinct and agree in magnitude"""
        with pytest.raises(PassNotApplicableError):
            pass_column_combine([[1, 1, 1], [1, a, -a], [1, -a, a]], pairs=pairs)


class TestRowCombine:
    """Test combining agreeing rows through post-addition butterflies"""

    def test_two_rows(self):
        """Rows (1, 2) and (1, -2) become a butterfly after a diagonal"""
        reduced, post = pass_row_combine([[1, 2], [1, -2]])
        np.testing.assert_array_equal(reduced, [[1, 0], [0, 2]])
        np.testing.assert_array_equal(post.to_dense(), [[1, 1], [1, -1]])

    def test_explicit_pairs_reconstruct(self):
        """The butterfly times the reduced matrix gives back the input"""
        m = np.array([[1.0, a, 0.0], [0.0, 1.0, 1.0], [1.0, -a, 0.0]])
        reduced, post = pass_row_combine(m, pairs=((0, 2),))
        np.testing.assert_allclose(post.to_dense() @ reduced, m, rtol=0, atol=1e-15)
        assert np.count_nonzero(reduced[:, 0]) == 1

    def test_rejects_matrix_without_pairs(self):
        """No pair of rows agrees"""
        with pytest.raises(PassNotApplicableError, match="Row combine"):
            pass_row_combine([[1, 2], [3, 4]])


class TestRowScale:
    """Test scaling rows by their smallest magnitude"""

    def test_integral_remainder(self):
        """sqrt(2) is twice sqrt(2)/2, so the row scales to (2, 1)"""
        multipliers, integral = pass_row_scale([[ROOT2, ROOT2_HALF], [2, 4], [0, 0]])
        np.testing.assert_allclose(multipliers.to_dense(), np.diag([ROOT2_HALF, 2, 1]), rtol=0, atol=1e-15)
        np.testing.assert_array_equal(integral, [[2, 1], [1, 2], [0, 0]])
        assert not np.any(np.signbit(integral[2]))

    def test_rejects_non_integral_ratio(self):
        """1.5 is not an integer multiple of 1"""
        with pytest.raises(PassNotApplicableError, match="Row 0"):
            pass_row_scale([[1, 1.5]])


class TestDiagonalSplit:
    """Test scaling column magnitudes into a diagonal factor"""

    def test_three_point(self):
        """Test splitting the 3-point columns"""
        combiner, multipliers = pass_diagonal_split([[1, 1, 0], [1, 0, a], [1, 0, -a]])
        np.testing.assert_array_equal(combiner.to_dense(), [[1, 1, 0], [1, 0, 1], [1, 0, -1]])
        np.testing.assert_allclose(multipliers.to_dense(), np.diag([1, 1, a]), rtol=0, atol=1e-15)

    def test_empty_column_scale_is_one(self):
        """Test an empty column scales by one"""
        _, multipliers = pass_diagonal_split([[2, 0], [-2, 0]])
        np.testing.assert_array_equal(multipliers.to_dense(), np.diag([2, 1]))

    def test_rejects_mixed_magnitudes(self):
        """Test a column with mixed magnitudes is rejected"""
        with pytest.raises(PassNotApplicableError):
            pass_diagonal_split([[1, 0], [2, 0]])


class TestPipelines:
    """Test the complete derivations against the built-in kernels"""

    def test_three_point(self):
        """Test the 3-point derivation"""
        derived = derive_three_point()
        assert_same_factorization(derived, dht3_factorization())
        assert count_ops(derived) == OpCount(1, 7)
        assert verify(derived, 3, tol=1e-12).passed

    def test_six_point(self):
        """Test the 6-point derivation"""
        derived = derive_six_point()
        assert_same_factorization(derived, dht6_factorization())
        assert count_ops(derived) == OpCount(2, 20)
        assert verify(derived, 6, tol=1e-12).passed

    def test_odd_twelve_block(self):
        """The 12-point odd rows derive to the built-in odd block"""
        reduced, _ = pass_hadamard_split(hartley_matrix(12))
        derived = derive_odd_twelve(reduced[1::2, 6:])
        assert_same_factorization(derived, odd12_factorization())
        assert count_ops(derived) == OpCount(2, 20)

    def test_odd_twenty_four_tail(self):
        """The odd-indexed half of the 24-point odd rows derives to the built-in tail"""
        derived = derive_odd_tail(hartley_matrix(24)[1:12:2, 1:12:2])
        assert_same_factorization(derived, odd24_tail_factorization())
        assert count_ops(derived) == OpCount(6, 14)

    def test_twelve_point(self):
        """Hadamard split, 6-point sums and the odd block give the built-in 12-point kernel"""
        derived = derive_twelve_point()
        assert_same_factorization(derived, dht12_factorization())
        assert count_ops(derived) == OpCount(4, 52)
        assert verify(derived, 12, tol=1e-12).passed

    def test_twenty_four_point(self):
        """The 24-point pipeline reproduces the built-in kernel matrix for matrix"""
        derived = derive_twenty_four_point()
        assert_same_factorization(derived, dht24_factorization())
        assert count_ops(derived) == OpCount(12, 122)
        assert verify(derived, 24, tol=1e-12).passed

    def test_derived_operators_match_hartley(self):
        """Test the derived 6-point operator equals the Hartley matrix"""
        np.testing.assert_allclose(reconstruct_dense(derive_six_point()), hartley_matrix(6), rtol=0, atol=1e-12)
