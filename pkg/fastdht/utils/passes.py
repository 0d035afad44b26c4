#!/usr/bin/env python3

"""
Fast DHT - Derivation Passes

Mechanical rewrites that turn a dense Hartley matrix into layered sparse
factors:

  pass_hadamard_split   even N: H = R . (Had2 (x) I_{N/2})
  pass_integer_peel     M = balanced + L, L holding integer parts
  pass_column_combine   M = R . A, A a butterfly on agreeing column pairs
  pass_row_combine      M = P . R, P a butterfly on agreeing row pairs
  pass_diagonal_split   M = C . B, C in {-1, 0, 1}, B diagonal
  pass_row_scale        M = B . Z, B diagonal, Z integral

The order in which passes run for a given length, and the column and row
pairs for 12 and 24, are chosen by the pipelines at the end of this module.
"""

import logging
import math
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from models import (
    DenseMatrix,
    LayeredFactorization,
    PassNotApplicableError,
    SparseRealMatrix,
    Stage,
)
from utils.factorization import (
    block_diagonal,
    concatenate,
    direct_sum,
    hadamard_pre_addition,
    permute_rows,
    with_input_order,
    with_output_order,
)
from utils.hartley import hartley_matrix

logger = logging.getLogger(__name__)

PASS_TOLERANCE = 1e-12

Pairs = Sequence[Tuple[int, int]]

# Pairings for the odd rows of the 12-point split
ODD12_COLUMN_PAIRS = ((0, 3), (1, 2), (4, 5))
ODD12_STAGE_PAIRS = ((1, 5), (2, 4))

# Pairings for the odd-indexed half of the 24-point odd rows
TAIL_COLUMN_PAIRS = ((0, 2), (3, 5))
TAIL_ROW_PAIRS = ((0, 2), (3, 5))

# Output k and k + 12 of the 24-point odd rows share their even-indexed part
ODD24_ROW_PAIRS = tuple((r, r + 6) for r in range(6))


def snap(matrix: Any, tol: float = PASS_TOLERANCE) -> DenseMatrix:
    """Round entries lying within tol of an integer onto that integer"""
    dense = np.array(matrix, dtype=np.float64)
    if dense.ndim != 2:
        raise PassNotApplicableError(f"Expected a 2-D matrix, got shape {dense.shape}")
    nearest = np.round(dense)
    close = np.abs(dense - nearest) <= tol
    dense[close] = nearest[close]
    dense[dense == 0.0] = 0.0  # drop negative zeros
    return dense


def interleave_order(n: int) -> List[int]:
    """Output order putting the first n/2 results on even and the rest on odd positions"""
    return [k // 2 if k % 2 == 0 else n // 2 + (k - 1) // 2 for k in range(n)]


def pass_hadamard_split(h: Any) -> Tuple[DenseMatrix, SparseRealMatrix]:
    """
    Split an even-length Hartley-like matrix through the first pre-addition stage.

    Even rows of the reduced matrix act on the sums x_i + x_{i+N/2} (first
    half of the columns), odd rows on the differences (second half).
    """
    matrix = snap(h)
    rows, cols = matrix.shape
    if rows != cols:
        raise PassNotApplicableError(f"Hadamard split needs a square matrix, got {rows}x{cols}")
    if cols % 2:
        raise PassNotApplicableError(f"Hadamard split needs an even blocklength, got {cols}")

    half = cols // 2
    signs = np.where(np.arange(rows) % 2 == 0, 1.0, -1.0)[:, None]
    deviation = float(np.max(np.abs(matrix[:, half:] - signs * matrix[:, :half])))
    if deviation > PASS_TOLERANCE:
        raise PassNotApplicableError(
            f"Matrix violates h[k, i + N/2] = (-1)^k h[k, i] (deviation {deviation:.3e}); "
            f"not a Hartley matrix"
        )

    reduced = np.zeros_like(matrix)
    reduced[0::2, :half] = matrix[0::2, :half]
    reduced[1::2, half:] = matrix[1::2, :half]

    logger.debug(f"Hadamard split of {cols}x{cols} matrix")
    return reduced, hadamard_pre_addition(cols)


def remainder_classes(matrix: DenseMatrix, tol: float) -> List[float]:
    """Distinct magnitudes of the non-integer entries already inside [-1, 1]"""
    classes: List[float] = []
    for value in np.abs(matrix.ravel()):
        if value > 1.0 or abs(value - round(value)) <= tol:
            continue
        if not any(abs(value - c) <= tol for c in classes):
            classes.append(float(value))
    return classes


def peel_amount(value: float, classes: List[float], tol: float) -> int:
    """Smallest same-signed integer whose removal leaves a known remainder magnitude"""
    sign = 1 if value > 0 else -1
    if abs(value - round(value)) <= tol:
        return int(round(value)) - sign
    for k in range(1, int(math.floor(abs(value))) + 2):
        remainder = abs(value - sign * k)
        if any(abs(remainder - c) <= tol for c in classes):
            return sign * k
    return int(math.trunc(value))


def pass_integer_peel(m: Any, tol: float = PASS_TOLERANCE) -> Tuple[DenseMatrix, SparseRealMatrix]:
    """
    Move integer parts of entries above one in magnitude into a layer matrix.

    Integer entries keep their sign in the balanced matrix (2 becomes 1 + 1),
    so the balanced matrix stays inside [-1, 1] wherever it can.
    """
    matrix = snap(m, tol)
    classes = remainder_classes(matrix, tol)

    balanced = matrix.copy()
    layer_entries = []
    for (r, c), value in np.ndenumerate(matrix):
        if abs(value) <= 1.0:
            continue
        s = peel_amount(float(value), classes, tol)
        if s == 0:
            continue
        balanced[r, c] = value - s
        layer_entries.append((r, c, float(s)))

    logger.debug(f"Integer peel moved {len(layer_entries)} entries into the layer matrix")
    return balanced, SparseRealMatrix(matrix.shape[0], matrix.shape[1], tuple(layer_entries))


def columns_agree(matrix: DenseMatrix, i: int, j: int, tol: float) -> bool:
    if not np.any(matrix[:, i]):
        return False
    return bool(np.all(np.abs(np.abs(matrix[:, i]) - np.abs(matrix[:, j])) <= tol))


def choose_pairs(matrix: DenseMatrix, pairs: Optional[Pairs], tol: float) -> List[Tuple[int, int]]:
    """Check caller-chosen column pairs, or pick agreeing pairs greedily in column order"""
    cols = matrix.shape[1]
    partner: List[Optional[int]] = [None] * cols

    if pairs is not None:
        chosen = [(int(i), int(j)) for i, j in pairs]
        for i, j in chosen:
            if not (0 <= i < cols and 0 <= j < cols) or i == j:
                raise PassNotApplicableError(f"Invalid column pair ({i}, {j}) for {cols} columns")
            if partner[i] is not None or partner[j] is not None:
                raise PassNotApplicableError(f"Column pair ({i}, {j}) reuses a paired column")
            if not columns_agree(matrix, i, j, tol):
                raise PassNotApplicableError(f"Columns {i} and {j} do not agree in magnitude")
            partner[i], partner[j] = j, i
        return chosen

    chosen = []
    for i in range(cols):
        if partner[i] is not None:
            continue
        for j in range(i + 1, cols):
            if partner[j] is None and columns_agree(matrix, i, j, tol):
                partner[i], partner[j] = j, i
                chosen.append((i, j))
                break
    return chosen


def pass_column_combine(
    m: Any, tol: float = PASS_TOLERANCE, pairs: Optional[Pairs] = None
) -> Tuple[DenseMatrix, SparseRealMatrix]:
    """
    Pair columns whose entries agree in magnitude row by row.

    For a pair (i, j) the butterfly writes x_i + x_j to position i and
    x_i - x_j to position j. Without explicit pairs they are chosen greedily
    in column order.
    """
    matrix = snap(m, tol)
    cols = matrix.shape[1]

    chosen = choose_pairs(matrix, pairs, tol)
    if not chosen:
        raise PassNotApplicableError("No pair of columns agrees in magnitude; column combine not applicable")

    paired = {k for pair in chosen for k in pair}
    reduced = matrix.copy()
    entries = [(k, k, 1.0) for k in range(cols) if k not in paired]
    for i, j in chosen:
        entries.extend([(i, i, 1.0), (i, j, 1.0), (j, i, 1.0), (j, j, -1.0)])
        for r in range(matrix.shape[0]):
            p, q = matrix[r, i], matrix[r, j]
            reduced[r, i] = 0.0
            reduced[r, j] = 0.0
            if p == 0.0 and q == 0.0:
                continue
            if abs(p - q) <= tol:
                reduced[r, i] = p
            else:
                reduced[r, j] = p

    logger.debug(f"Column combine paired {chosen}")
    return reduced, SparseRealMatrix(cols, cols, tuple(entries))


def pass_row_combine(
    m: Any, tol: float = PASS_TOLERANCE, pairs: Optional[Pairs] = None
) -> Tuple[DenseMatrix, SparseRealMatrix]:
    """
    Pair rows whose entries agree in magnitude column by column.

    Column combine on the transpose: for a pair (i, j) the post-addition
    butterfly produces output i as r_i + r_j and output j as r_i - r_j.
    """
    try:
        reduced, butterfly = pass_column_combine(snap(m, tol).T, tol, pairs)
    except PassNotApplicableError as e:
        raise PassNotApplicableError(f"Row combine not applicable: {e}")
    return reduced.T.copy(), butterfly.transpose()


def pass_diagonal_split(m: Any, tol: float = PASS_TOLERANCE) -> Tuple[SparseRealMatrix, SparseRealMatrix]:
    """Scale each column's common magnitude out into a diagonal factor"""
    matrix = snap(m, tol)
    scales = []
    for j in range(matrix.shape[1]):
        magnitudes = np.abs(matrix[:, j][matrix[:, j] != 0.0])
        if magnitudes.size == 0:
            scales.append(1.0)
            continue
        if np.any(np.abs(magnitudes - magnitudes[0]) > tol):
            raise PassNotApplicableError(
                f"Column {j} mixes magnitudes {sorted(set(np.round(magnitudes, 12)))}; "
                f"diagonal split not applicable"
            )
        scales.append(float(magnitudes[0]))

    combiner = SparseRealMatrix.from_dense(np.sign(matrix))
    return combiner, SparseRealMatrix.diagonal(scales)


def pass_row_scale(m: Any, tol: float = PASS_TOLERANCE) -> Tuple[SparseRealMatrix, DenseMatrix]:
    """
    Scale each row by its smallest magnitude: M = B . Z.

    Every other entry of the row must be an integer multiple of that
    magnitude, so Z is integral and B diagonal.
    """
    matrix = snap(m, tol)
    integral = np.zeros_like(matrix)
    scales = []
    for r in range(matrix.shape[0]):
        row = matrix[r]
        magnitudes = np.abs(row[row != 0.0])
        if magnitudes.size == 0:
            scales.append(1.0)
            continue
        scale = float(np.min(magnitudes))
        ratios = row / scale
        if np.any(np.abs(ratios - np.round(ratios)) > tol):
            raise PassNotApplicableError(
                f"Row {r} is not an integer multiple of {scale:.12g}; row scale not applicable"
            )
        scales.append(scale)
        integral[r] = np.round(ratios)

    integral[integral == 0.0] = 0.0
    return SparseRealMatrix.diagonal(scales), integral


# =============================================================================
# COMPLETE PIPELINES
# =============================================================================


def derive_layered_stage(m: Any, pairs: Optional[Pairs] = None) -> Stage:
    """Peel, combine and diagonal split: M = C B A + L as one stage"""
    balanced, layer = pass_integer_peel(m)
    reduced, pre_addition = pass_column_combine(balanced, pairs=pairs)
    post_addition, multipliers = pass_diagonal_split(reduced)
    return Stage((post_addition, multipliers, pre_addition), None if layer.is_zero else layer)


def derive_three_point() -> LayeredFactorization:
    stage = derive_layered_stage(hartley_matrix(3))
    logger.info("Derived 3-point factorization through peel, combine and diagonal split")
    return LayeredFactorization(3, 3, (stage,), name="DHT3 (derived)")


def derive_six_point(h: Optional[Any] = None) -> LayeredFactorization:
    reduced, pre_addition = pass_hadamard_split(hartley_matrix(6) if h is None else h)
    stage = derive_layered_stage(reduced)
    logger.info("Derived 6-point factorization through Hadamard split, peel, combine and diagonal split")
    return LayeredFactorization(6, 6, (Stage((pre_addition,)), stage), name="DHT6 (derived)")


def derive_odd_twelve(m: Any) -> LayeredFactorization:
    """
    Odd rows of the 12-point split, acting on the differences.

    Pairing w0/w3, w1/w2 and w4/w5 leaves a matrix of 0, +-1, +-a and
    +-(1 + a), which peel, combine and diagonal split finish with two
    multiplications by a.
    """
    reduced, pre_addition = pass_column_combine(m, pairs=ODD12_COLUMN_PAIRS)
    stage = derive_layered_stage(reduced, pairs=ODD12_STAGE_PAIRS)
    return LayeredFactorization(6, 6, (Stage((pre_addition,)), stage), name="ODD12 (derived)")


def derive_odd_tail(m: Any) -> LayeredFactorization:
    """
    Odd rows of the 24-point split restricted to the odd-indexed differences.

    After the column and row butterflies each row holds one constant up to a
    factor of two (sqrt(2) = 2 * sqrt(2)/2); row scaling leaves entries of
    +-2, which the peel turns into an addition.
    """
    combined, pre_addition = pass_column_combine(m, pairs=TAIL_COLUMN_PAIRS)
    reduced, post_addition = pass_row_combine(combined, pairs=TAIL_ROW_PAIRS)
    multipliers, integral = pass_row_scale(reduced)
    balanced, layer = pass_integer_peel(integral)
    stages = (
        Stage((pre_addition,)),
        Stage((SparseRealMatrix.from_dense(balanced),), None if layer.is_zero else layer),
        Stage((post_addition, multipliers)),
    )
    return LayeredFactorization(6, 6, stages, name="ODD24TAIL (derived)")


def derive_twelve_point(h: Optional[Any] = None) -> LayeredFactorization:
    reduced, pre_addition = pass_hadamard_split(hartley_matrix(12) if h is None else h)
    even = derive_six_point(reduced[0::2, :6])
    odd = derive_odd_twelve(reduced[1::2, 6:])

    split = LayeredFactorization(12, 12, (Stage((pre_addition,)),), name="HAD12")
    halves = with_output_order(direct_sum(even, odd), interleave_order(12))
    logger.info("Derived 12-point factorization: Hadamard split, 6-point sums, paired odd block")
    return concatenate(split, halves, name="DHT12 (derived)")


def derive_twenty_four_point(h: Optional[Any] = None) -> LayeredFactorization:
    """
    Hadamard split, the 12-point pipeline on the sums, and a row combine on
    the differences that separates even-indexed from odd-indexed inputs.
    """
    reduced, pre_addition = pass_hadamard_split(hartley_matrix(24) if h is None else h)
    even = derive_twelve_point(reduced[0::2, :12])

    parity = list(range(0, 12, 2)) + list(range(1, 12, 2))
    halves, post_addition = pass_row_combine(reduced[1::2, 12:][:, parity], pairs=ODD24_ROW_PAIRS)
    if np.any(halves[:6, 6:]) or np.any(halves[6:, :6]):
        raise PassNotApplicableError("Row combine left the odd rows coupled across input parities")
    odd = with_input_order(
        direct_sum(derive_odd_twelve(halves[:6, :6]), derive_odd_tail(halves[6:, 6:])), parity, name="ODD24"
    )

    split = LayeredFactorization(24, 24, (Stage((pre_addition,)),), name="HAD24")
    combine = permute_rows(block_diagonal(SparseRealMatrix.identity(12), post_addition), interleave_order(24))
    logger.info("Derived 24-point factorization: Hadamard split, 12-point sums, row-combined odd block")
    return concatenate(
        split,
        direct_sum(even, odd),
        LayeredFactorization(24, 24, (Stage((combine,)),), name="COMBINE24"),
        name="DHT24 (derived)",
    )
