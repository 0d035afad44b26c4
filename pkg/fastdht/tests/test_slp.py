#!/usr/bin/env python3

"""
Fast DHT - Straight-Line Program Tests
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from models import DimensionMismatchError, LayeredFactorization, Opcode, SparseRealMatrix, Stage  # noqa: E402
from utils.factorization import count_ops, evaluate, identity_factorization  # noqa: E402
from utils.hartley import naive_dht  # noqa: E402
from utils.kernels import FACTORIZATIONS, dht3_factorization, dht5_factorization, dht6_factorization  # noqa: E402
from utils.slp import emit_slp, format_program, run_slp  # noqa: E402


class TestEmission:
    """Test program emission and its tallies"""

    def test_three_point_tally(self):
        """Test the instruction tally of the 3-point program"""
        tally = emit_slp(dht3_factorization()).tally()
        assert tally["MUL_CONST"] == 1
        assert tally["ADD"] + tally["SUB"] == 7
        assert tally["LOAD"] == 3

    def test_identity_is_loads_only(self):
        """Test the identity emits only loads"""
        program = emit_slp(identity_factorization(4))
        assert [i.op for i in program.instructions] == [Opcode.LOAD] * 4
        assert program.output_map == (0, 1, 2, 3)

    @pytest.mark.parametrize("n", sorted(FACTORIZATIONS))
    def test_tally_equals_count_ops(self, n):
        """Test the emitted tally matches the operation count"""
        f = FACTORIZATIONS[n]()
        counts = count_ops(f)
        tally = emit_slp(f).tally()
        assert tally["ADD"] + tally["SUB"] == counts.additions
        assert tally["MUL_CONST"] == counts.multiplications + counts.rational_multiplications

    @pytest.mark.parametrize("n", sorted(FACTORIZATIONS))
    def test_single_assignment(self, n):
        """Test every register is assigned once"""
        program = emit_slp(FACTORIZATIONS[n]())
        for register, instruction in enumerate(program.instructions):
            assert all(operand < register for operand in instruction.operands)

    def test_constants_are_positive(self):
        """Test MUL_CONST constants are positive"""
        program = emit_slp(dht5_factorization())
        constants = [i.constant for i in program.instructions if i.op is Opcode.MUL_CONST]
        assert len(constants) == 5
        assert all(c > 0 for c in constants)

    def test_shared_scaled_terms(self):
        """Rows a*x + b*y and a*x - b*y scale x and y once each"""
        chain = SparseRealMatrix.from_dense([[math.sqrt(2.0), math.sqrt(3.0)], [math.sqrt(2.0), -math.sqrt(3.0)]])
        f = LayeredFactorization(2, 2, (Stage((chain,)),))
        program = emit_slp(f)
        assert program.tally() == {"LOAD": 2, "ADD": 1, "SUB": 1, "MUL_CONST": 2, "NEG": 0}
        assert count_ops(f).multiplications == 2
        np.testing.assert_allclose(run_slp(program, [2.0, 5.0]), chain.to_dense() @ [2.0, 5.0], rtol=0, atol=1e-12)

    def test_shared_scaled_terms_in_layer(self):
        """The layer matrix shares its own products"""
        layer = SparseRealMatrix.from_dense([[0.5, 0], [-0.5, 1]])
        f = LayeredFactorization(2, 2, (Stage((SparseRealMatrix.identity(2),), layer),))
        program = emit_slp(f)
        assert program.tally()["MUL_CONST"] == 1
        assert count_ops(f).rational_multiplications == 1
        np.testing.assert_allclose(run_slp(program, [4.0, 1.0]), [6.0, 0.0], rtol=0, atol=1e-15)

    def test_zero_rows_have_no_register(self):
        """Test zero rows read as zero without a register"""
        chain = SparseRealMatrix.from_dense([[1, 1], [0, 0]])
        f = LayeredFactorization(2, 2, (Stage((chain,)),))
        program = emit_slp(f)
        assert program.output_map[1] is None
        np.testing.assert_array_equal(run_slp(program, [2.0, 3.0]), [5.0, 0.0])

    def test_all_negative_row(self):
        """Test a row of negative terms ends in one NEG"""
        chain = SparseRealMatrix.from_dense([[-1, -1]])
        f = LayeredFactorization(2, 1, (Stage((chain,)),))
        program = emit_slp(f)
        assert program.tally() == {"LOAD": 2, "ADD": 1, "SUB": 0, "MUL_CONST": 0, "NEG": 1}
        np.testing.assert_array_equal(run_slp(program, [2.0, 3.0]), [-5.0])


class TestExecution:
    """Test running programs"""

    def test_three_point_example(self):
        """Test the 3-point program on a worked example"""
        program = emit_slp(dht3_factorization())
        np.testing.assert_allclose(run_slp(program, [1, 2, 3]), [6, -2.3660254, -0.6339746], atol=1e-7)

    def test_zero_vector(self):
        """Test the zero vector maps to zero"""
        program = emit_slp(dht6_factorization())
        np.testing.assert_array_equal(run_slp(program, np.zeros(6)), np.zeros(6))

    def test_six_point_involution(self, rng):
        """Test running the 6-point program twice scales by 6"""
        program = emit_slp(dht6_factorization())
        for _ in range(100):
            v = rng.uniform(-1, 1, 6)
            np.testing.assert_allclose(run_slp(program, run_slp(program, v)), 6 * v, rtol=0, atol=1e-11)

    def test_five_point_against_oracle(self, rng):
        """Test the 5-point program against the direct sum"""
        program = emit_slp(dht5_factorization())
        for _ in range(100):
            v = rng.uniform(-1, 1, 5)
            np.testing.assert_allclose(run_slp(program, v), naive_dht(v), rtol=0, atol=1e-12)

    @pytest.mark.parametrize("n", sorted(FACTORIZATIONS))
    def test_matches_evaluation(self, random_batches, n):
        """Test programs agree with staged evaluation"""
        f = FACTORIZATIONS[n]()
        program = emit_slp(f)
        batch = random_batches[n].T
        np.testing.assert_allclose(run_slp(program, batch), evaluate(f, batch), rtol=0, atol=1e-13)

    def test_batch_matches_single_calls(self, rng):
        """Test batch execution matches one call per signal"""
        program = emit_slp(dht6_factorization())
        batch = rng.uniform(-1, 1, (6, 8))
        out = run_slp(program, batch)
        for j in range(8):
            np.testing.assert_array_equal(out[:, j], run_slp(program, batch[:, j]))

    def test_dimension_mismatch(self):
        """Test a wrong input length is rejected"""
        with pytest.raises(DimensionMismatchError):
            run_slp(emit_slp(dht3_factorization()), [1.0, 2.0])


class TestFormatting:
    """Test program listings"""

    def test_listing(self):
        """Test the program listing format"""
        program = emit_slp(dht3_factorization())
        listing = format_program(program)
        lines = listing.splitlines()
        assert lines[0] == "# 3 inputs, 3 outputs, 11 instructions"
        assert lines[1] == "r0 = LOAD x0"
        assert "r3 = ADD r1, r2" in lines
        assert "r4 = SUB r1, r2" in lines
        assert any(line.startswith("r5 = MUL_CONST r4, 0.366025403784438") for line in lines)
        assert lines[-3] == "y0 = r6"
        assert len(lines) == 1 + 11 + 3

    def test_zero_output(self):
        """Test listing an output that is always zero"""
        chain = SparseRealMatrix.from_dense([[1, 0], [0, 0]])
        listing = format_program(emit_slp(LayeredFactorization(2, 2, (Stage((chain,)),))))
        assert listing.splitlines()[-1] == "y1 = 0"
