#!/usr/bin/env python3

"""
Fast DHT - Layered Factorization IR

Evaluation, dense reconstruction, operation counting and verification of
layered sparse factorizations, plus the structural combinators used to build
the longer kernels out of shorter ones.

A stage computes  out = C_k ... C_2 C_1 in + L in  and stages are applied
innermost first. Operation counting and program emission share one row plan
(plan_matrix), so their tallies always agree.
"""

import json
import logging
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from models import (
    DenseMatrix,
    DimensionMismatchError,
    LayeredFactorization,
    OpCount,
    SparseRealMatrix,
    Stage,
    VerificationReport,
)
from utils.hartley import hartley_matrix, naive_dht

logger = logging.getLogger(__name__)

# Largest denominator for a constant to be tallied as a rational multiplication
RATIONAL_MAX_DENOMINATOR = 64
RATIONAL_TOLERANCE = 1e-12

DEFAULT_TOLERANCE = float(os.environ.get("FASTDHT_TOLERANCE", "1e-12"))
DEFAULT_TRIALS = int(os.environ.get("FASTDHT_VERIFY_TRIALS", "100"))
DEFAULT_SEED = int(os.environ.get("FASTDHT_SEED", "2024"))


# =============================================================================
# EVALUATION
# =============================================================================


def apply(matrix: SparseRealMatrix, x: Any) -> np.ndarray:
    """
    Sparse matrix-vector product.

    x may be a vector of length cols or a (cols, batch) array. Each row is
    accumulated in ascending column order.
    """
    values = np.asarray(x, dtype=np.float64)
    if values.shape[0] != matrix.cols:
        raise DimensionMismatchError(
            f"Cannot apply {matrix.rows}x{matrix.cols} matrix to input of length {values.shape[0]}"
        )

    out = np.zeros((matrix.rows,) + values.shape[1:], dtype=np.float64)
    for r in range(matrix.rows):
        row = matrix.row(r)
        if not row:
            continue
        col, value = row[0]
        acc = value * values[col]
        for col, value in row[1:]:
            acc = acc + value * values[col]
        out[r] = acc
    return out


def apply_stage(stage: Stage, x: np.ndarray) -> np.ndarray:
    out = x
    for matrix in reversed(stage.chain):
        out = apply(matrix, out)
    if stage.layer is not None:
        out = out + apply(stage.layer, x)
    return out


def evaluate(f: LayeredFactorization, v: Any) -> np.ndarray:
    """Apply every stage in order, each stage's layer acting on that stage's input"""
    values = np.asarray(v, dtype=np.float64)
    if values.shape[0] != f.n_input:
        raise DimensionMismatchError(
            f"Factorization {f.name or '<unnamed>'} takes {f.n_input} inputs, got {values.shape[0]}"
        )
    for stage in f.stages:
        values = apply_stage(stage, values)
    return values


def stage_dense(stage: Stage) -> DenseMatrix:
    dense = stage.chain[-1].to_dense()
    for matrix in reversed(stage.chain[:-1]):
        dense = matrix.to_dense() @ dense
    if stage.layer is not None:
        dense = dense + stage.layer.to_dense()
    return dense


def reconstruct_dense(f: LayeredFactorization) -> DenseMatrix:
    """Dense n_output x n_input operator the factorization computes"""
    dense = np.eye(f.n_input)
    for stage in f.stages:
        dense = stage_dense(stage) @ dense
    return dense


# =============================================================================
# ROW PLANS AND OPERATION COUNTS
# =============================================================================


def classify_constant(value: float) -> str:
    """'trivial' for +-1, 'rational' for small-denominator rationals, else 'irrational'"""
    magnitude = abs(value)
    if magnitude == 1.0:
        return "trivial"
    approx = Fraction(magnitude).limit_denominator(RATIONAL_MAX_DENOMINATOR)
    if abs(float(approx) - magnitude) <= RATIONAL_TOLERANCE:
        return "rational"
    return "irrational"


@dataclass(frozen=True)
class RowPlan:
    """
    How one output coordinate of a sparse matrix is produced.

    kind is one of:
      zero    - every surviving input is a structural zero
      compute - sum of terms, each a (column, constant) pair
      reuse   - identical to an earlier row (source)
      negate  - negation of an earlier row (source)
    """

    kind: str
    terms: Tuple[Tuple[int, float], ...] = ()
    source: Optional[int] = None


@dataclass(frozen=True)
class MatrixPlan:
    rows: Tuple[RowPlan, ...]
    cost: OpCount

    @property
    def zero_mask(self) -> Tuple[bool, ...]:
        return tuple(plan.kind == "zero" for plan in self.rows)


def row_cost(terms: Sequence[Tuple[int, float]], scaled: Optional[Set[Tuple[int, float]]] = None) -> OpCount:
    """
    Cost of one computed row.

    scaled holds the (column, |constant|) products already formed in the same
    matrix; those are reused for free and new ones are added to it.
    """
    scaled = set() if scaled is None else scaled
    multiplications = 0
    rationals = 0
    for col, value in terms:
        kind = classify_constant(value)
        if kind == "trivial" or (col, abs(value)) in scaled:
            continue
        scaled.add((col, abs(value)))
        if kind == "irrational":
            multiplications += 1
        else:
            rationals += 1
    return OpCount(multiplications, len(terms) - 1, rationals)


def plan_matrix(matrix: SparseRealMatrix, zero_in: Sequence[bool]) -> MatrixPlan:
    """
    Row plan for one sparse matrix given which inputs are structural zeros.

    Within the matrix a row equal to an earlier row is reused, a row equal to
    the negation of an earlier row is a free negation, and each product of a
    column with a constant magnitude is formed once.
    """
    if len(zero_in) != matrix.cols:
        raise DimensionMismatchError(
            f"Zero mask of length {len(zero_in)} does not match {matrix.cols} columns"
        )

    seen: Dict[Tuple[Tuple[int, float], ...], int] = {}
    scaled: Set[Tuple[int, float]] = set()
    rows: List[RowPlan] = []
    cost = OpCount()

    for r in range(matrix.rows):
        terms = tuple((c, v) for c, v in matrix.row(r) if not zero_in[c])
        if not terms:
            rows.append(RowPlan("zero"))
            continue

        negated = tuple((c, -v) for c, v in terms)
        if terms in seen:
            rows.append(RowPlan("reuse", terms, seen[terms]))
        elif negated in seen:
            rows.append(RowPlan("negate", terms, seen[negated]))
        else:
            seen[terms] = r
            rows.append(RowPlan("compute", terms))
            cost = cost + row_cost(terms, scaled)

    return MatrixPlan(tuple(rows), cost)


def merge_cost(chain_zero: Sequence[bool], layer_zero: Sequence[bool]) -> int:
    """One addition per coordinate where both chain and layer rows survive"""
    return sum(1 for c, l in zip(chain_zero, layer_zero) if not c and not l)


def count_ops(f: LayeredFactorization) -> OpCount:
    total = OpCount()
    zero_mask: Tuple[bool, ...] = (False,) * f.n_input

    for index, stage in enumerate(f.stages):
        stage_in = zero_mask
        stage_cost = OpCount()
        for matrix in reversed(stage.chain):
            plan = plan_matrix(matrix, zero_mask)
            stage_cost = stage_cost + plan.cost
            zero_mask = plan.zero_mask

        if stage.layer is not None:
            layer_plan = plan_matrix(stage.layer, stage_in)
            merges = merge_cost(zero_mask, layer_plan.zero_mask)
            stage_cost = stage_cost + layer_plan.cost + OpCount(0, merges)
            zero_mask = tuple(c and l for c, l in zip(zero_mask, layer_plan.zero_mask))

        logger.debug(
            f"Stage {index} of {f.name or '<unnamed>'}: "
            f"{stage_cost.multiplications} mul, {stage_cost.rational_multiplications} rational mul, "
            f"{stage_cost.additions} add"
        )
        total = total + stage_cost

    return total


# =============================================================================
# VERIFICATION
# =============================================================================


def verify(
    f: LayeredFactorization,
    n: int,
    tol: float = DEFAULT_TOLERANCE,
    trials: int = DEFAULT_TRIALS,
    seed: int = DEFAULT_SEED,
) -> VerificationReport:
    """
    Check a factorization against the N-point Hartley matrix and the naive oracle.

    Numerical failures are reported, never raised. Both the dense and the
    oracle errors are held to tol.
    """
    opcount = count_ops(f)

    if f.n_input != n or f.n_output != n:
        logger.warning(
            f"Factorization {f.name or '<unnamed>'} is {f.n_output}x{f.n_input}, "
            f"cannot compute a {n}-point DHT"
        )
        return VerificationReport(
            blocklength=n,
            tolerance=tol,
            dense_error=float("inf"),
            oracle_error=float("inf"),
            trials=0,
            opcount=opcount,
            passed=False,
            name=f.name,
        )

    dense_error = float(np.max(np.abs(reconstruct_dense(f) - hartley_matrix(n))))

    rng = np.random.default_rng(seed)
    oracle_error = 0.0
    for _ in range(trials):
        v = rng.uniform(-1.0, 1.0, n)
        error = float(np.max(np.abs(evaluate(f, v) - naive_dht(v))))
        oracle_error = max(oracle_error, error)

    passed = dense_error <= tol and oracle_error <= tol
    logger.debug(
        f"Verified {f.name or '<unnamed>'} as N={n}: dense {dense_error:.3e}, "
        f"oracle {oracle_error:.3e}, {'PASS' if passed else 'FAIL'}"
    )

    return VerificationReport(
        blocklength=n,
        tolerance=tol,
        dense_error=dense_error,
        oracle_error=oracle_error,
        trials=trials,
        opcount=opcount,
        passed=passed,
        name=f.name,
    )


# =============================================================================
# STRUCTURAL COMBINATORS
# =============================================================================


def identity_factorization(n: int, name: str = "") -> LayeredFactorization:
    return LayeredFactorization(n, n, (Stage((SparseRealMatrix.identity(n),)),), name=name or f"I{n}")


def hadamard_pre_addition(n: int) -> SparseRealMatrix:
    """Had2 (x) I_{n/2}: rows i and i + n/2 produce x_i + x_{i+n/2} and x_i - x_{i+n/2}"""
    if n < 2 or n % 2:
        raise ValueError(f"Hadamard pre-addition needs an even blocklength, got {n}")
    half = n // 2
    entries = []
    for i in range(half):
        entries.extend([(i, i, 1.0), (i, i + half, 1.0), (i + half, i, 1.0), (i + half, i + half, -1.0)])
    return SparseRealMatrix(n, n, tuple(entries))


def block_diagonal(a: SparseRealMatrix, b: SparseRealMatrix) -> SparseRealMatrix:
    shifted = tuple((r + a.rows, c + a.cols, v) for r, c, v in b.entries)
    return SparseRealMatrix(a.rows + b.rows, a.cols + b.cols, a.entries + shifted)


def pad_chain(chain: Tuple[SparseRealMatrix, ...], length: int) -> Tuple[SparseRealMatrix, ...]:
    """Extend a chain on the input side with identities"""
    missing = length - len(chain)
    return chain + (SparseRealMatrix.identity(chain[-1].cols),) * missing


def direct_sum(f: LayeredFactorization, g: LayeredFactorization, name: str = "") -> LayeredFactorization:
    """
    Block-diagonal stacking: the result maps (x, y) to (f(x), g(y)).

    The shorter factorization is padded with identity stages at the output end,
    and within each stage the shorter chain with identities at the input end.
    """
    f_stages = list(f.stages)
    g_stages = list(g.stages)
    while len(f_stages) < len(g_stages):
        f_stages.append(Stage((SparseRealMatrix.identity(f.n_output),)))
    while len(g_stages) < len(f_stages):
        g_stages.append(Stage((SparseRealMatrix.identity(g.n_output),)))

    stages = []
    for fs, gs in zip(f_stages, g_stages):
        length = max(len(fs.chain), len(gs.chain))
        f_chain = pad_chain(fs.chain, length)
        g_chain = pad_chain(gs.chain, length)
        chain = tuple(block_diagonal(a, b) for a, b in zip(f_chain, g_chain))

        layer = None
        if fs.layer is not None or gs.layer is not None:
            f_layer = fs.layer or SparseRealMatrix.zeros(fs.n_output, fs.n_input)
            g_layer = gs.layer or SparseRealMatrix.zeros(gs.n_output, gs.n_input)
            layer = block_diagonal(f_layer, g_layer)
        stages.append(Stage(chain, layer))

    return LayeredFactorization(
        f.n_input + g.n_input,
        f.n_output + g.n_output,
        tuple(stages),
        name=name or f"({f.name} + {g.name})",
    )


def concatenate(*parts: LayeredFactorization, name: str = "") -> LayeredFactorization:
    """Apply the factorizations one after another, first argument innermost"""
    if not parts:
        raise ValueError("concatenate needs at least one factorization")
    stages: List[Stage] = []
    for part in parts:
        stages.extend(part.stages)
    return LayeredFactorization(
        parts[0].n_input,
        parts[-1].n_output,
        tuple(stages),
        name=name or " . ".join(part.name for part in reversed(parts)),
    )


def check_permutation(order: Sequence[int], n: int) -> List[int]:
    order = [int(i) for i in order]
    if sorted(order) != list(range(n)):
        raise ValueError(f"{order} is not a permutation of 0..{n - 1}")
    return order


def permute_rows(matrix: SparseRealMatrix, order: Sequence[int]) -> SparseRealMatrix:
    """Row k of the result is row order[k] of the input"""
    position = {source: k for k, source in enumerate(order)}
    return SparseRealMatrix(
        matrix.rows, matrix.cols, tuple((position[r], c, v) for r, c, v in matrix.entries)
    )


def permute_cols(matrix: SparseRealMatrix, order: Sequence[int]) -> SparseRealMatrix:
    """Column order[j] of the result is column j of the input"""
    return SparseRealMatrix(
        matrix.rows, matrix.cols, tuple((r, order[c], v) for r, c, v in matrix.entries)
    )


def with_output_order(f: LayeredFactorization, order: Sequence[int], name: str = "") -> LayeredFactorization:
    """Result output k is f's output order[k]; folded into the last stage"""
    order = check_permutation(order, f.n_output)
    last = f.stages[-1]
    chain = (permute_rows(last.chain[0], order),) + last.chain[1:]
    layer = permute_rows(last.layer, order) if last.layer is not None else None
    return LayeredFactorization(
        f.n_input, f.n_output, f.stages[:-1] + (Stage(chain, layer),), name=name or f.name
    )


def with_input_order(f: LayeredFactorization, order: Sequence[int], name: str = "") -> LayeredFactorization:
    """Result computes f(v[order]); folded into the first stage"""
    order = check_permutation(order, f.n_input)
    first = f.stages[0]
    chain = first.chain[:-1] + (permute_cols(first.chain[-1], order),)
    layer = permute_cols(first.layer, order) if first.layer is not None else None
    return LayeredFactorization(
        f.n_input, f.n_output, (Stage(chain, layer),) + f.stages[1:], name=name or f.name
    )


# =============================================================================
# SERIALIZATION
# =============================================================================


def factorization_to_dict(f: LayeredFactorization) -> Dict[str, Any]:
    return f.to_dict()


def factorization_from_dict(data: Dict[str, Any]) -> LayeredFactorization:
    try:
        return LayeredFactorization.from_dict(data)
    except (KeyError, TypeError) as e:
        raise ValueError(f"Malformed factorization document: {e}")


def save_factorization(f: LayeredFactorization, filename: str) -> str:
    with open(filename, "w", encoding="utf-8") as handle:
        json.dump(factorization_to_dict(f), handle, indent=2)
    logger.info(f"Factorization {f.name or '<unnamed>'} saved to {filename}")
    return filename


def load_factorization(filename: str) -> LayeredFactorization:
    with open(filename, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    return factorization_from_dict(data)
