#!/usr/bin/env python3

"""
Fast DHT - Built-in Kernels

Layered factorizations for N = 3, 5, 6, 12 and 24, their compiled
straight-line programs, and the dispatching registry behind fast_dht.

The 12-point kernel is the 6-point kernel on the sums v_i + v_{i+6} next to
an odd-row block on the differences. The 24-point kernel embeds the 12-point
kernel the same way; its odd rows reuse the 12-point odd block on the
even-indexed differences and add one more block on the odd-indexed ones.
See docs/KERNEL_DERIVATIONS.md for the derivations.
"""

import logging
import math
from dataclasses import replace
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from models import (
    AuditRecord,
    AuditReport,
    DimensionMismatchError,
    FastKernel,
    LayeredFactorization,
    SparseRealMatrix,
    Stage,
    UnsupportedLengthError,
    VerificationReport,
    as_signal,
    as_spectrum,
)
from utils.factorization import (
    DEFAULT_SEED,
    DEFAULT_TOLERANCE,
    DEFAULT_TRIALS,
    concatenate,
    count_ops,
    direct_sum,
    hadamard_pre_addition,
    verify,
    with_input_order,
    with_output_order,
)
from utils.hartley import dht_to_dft
from utils.slp import emit_slp, run_slp

logger = logging.getLogger(__name__)

SUPPORTED_LENGTHS = (3, 5, 6, 12, 24)

# (multiplications, additions) published for each length
CLAIMED = {3: (1, 7), 5: (3, 17), 6: (2, 20), 12: (4, 52), 24: (12, 138)}

# Acceptance policy: (limit, exact)
MULTIPLICATION_BUDGET = {3: (1, True), 5: (4, False), 6: (2, True), 12: (4, True), 24: (12, True)}
ADDITION_BUDGET = {3: (7, True), 5: (17, True), 6: (20, True), 12: (57, False), 24: (152, False)}

DIRECTIONS = ("forward", "inverse")

# Constants, from closed forms
A3 = (math.sqrt(3.0) - 1.0) / 2.0
SIN_72 = math.sqrt(2.0) * math.sqrt(5.0 + math.sqrt(5.0)) / 4.0
SIN_144 = math.sqrt(2.0) * math.sqrt(5.0 - math.sqrt(5.0)) / 4.0
ROOT5_QUARTER = math.sqrt(5.0) / 4.0
ROOT6_HALF = math.sqrt(6.0) / 2.0
ROOT2_HALF = math.sqrt(2.0) / 2.0
ROOT2 = math.sqrt(2.0)


def sparse(cols: int, rows: Sequence[Dict[int, float]]) -> SparseRealMatrix:
    """Matrix from one {column: constant} mapping per row"""
    entries = tuple((r, c, float(v)) for r, row in enumerate(rows) for c, v in row.items())
    return SparseRealMatrix(len(rows), cols, entries)


def claimed_complexity(n: int) -> Tuple[int, int]:
    if n not in CLAIMED:
        raise UnsupportedLengthError(n, SUPPORTED_LENGTHS)
    return CLAIMED[n]


def multiplication_budget(n: int) -> Tuple[int, bool]:
    if n not in MULTIPLICATION_BUDGET:
        raise UnsupportedLengthError(n, SUPPORTED_LENGTHS)
    return MULTIPLICATION_BUDGET[n]


def addition_budget(n: int) -> Tuple[int, bool]:
    if n not in ADDITION_BUDGET:
        raise UnsupportedLengthError(n, SUPPORTED_LENGTHS)
    return ADDITION_BUDGET[n]


def within_budget(count: int, budget: Tuple[int, bool]) -> bool:
    limit, exact = budget
    return count == limit if exact else count <= limit


# =============================================================================
# FACTORIZATIONS
# =============================================================================


def dht3_factorization() -> LayeredFactorization:
    """V = (C B A + L) v with a single constant (sqrt(3) - 1) / 2"""
    pre = sparse(3, [{0: 1}, {1: 1, 2: 1}, {1: 1, 2: -1}])
    multipliers = SparseRealMatrix.diagonal([1.0, 1.0, A3])
    post = sparse(3, [{0: 1, 1: 1}, {0: 1, 2: 1}, {0: 1, 2: -1}])
    layer = sparse(3, [{}, {2: -1}, {1: -1}])
    return LayeredFactorization(3, 3, (Stage((post, multipliers, pre), layer),), name="DHT3")


def dht5_factorization() -> LayeredFactorization:
    """
    Single stage C3 C2 C1 B M1 M2 M3 M4 A1.

    A1 forms v0, the sums v1+v4, v2+v3 and the differences v2-v3, v1-v4.
    M1..M4 butterfly the sums and rotate the differences by the sines of
    72 and 144 degrees with three multiplications. B forms the DC term and
    scales the cosine branch by -5/4 and sqrt(5)/4; C1..C3 recombine.
    """
    e, f = SIN_144, SIN_72
    a1 = sparse(5, [{0: 1}, {1: 1, 4: 1}, {2: 1, 3: 1}, {2: 1, 3: -1}, {1: 1, 4: -1}])
    m4 = sparse(5, [{0: 1}, {1: 1}, {2: 1}, {3: 1}, {3: -1, 4: 1}, {4: 1}])
    m3 = SparseRealMatrix.diagonal([1.0, 1.0, 1.0, f + e, f, f - e])
    m2 = sparse(6, [{0: 1}, {1: 1}, {2: 1}, {3: 1, 4: 1}, {4: -1, 5: 1}])
    m1 = sparse(5, [{0: 1}, {1: 1, 2: 1}, {1: 1, 2: -1}, {3: 1}, {4: 1}])
    b = sparse(5, [{0: 1, 1: 1}, {1: -1.25}, {2: ROOT5_QUARTER}, {3: 1}, {4: 1}])
    c1 = sparse(5, [{0: 1}, {0: 1, 1: 1}, {2: 1}, {3: 1}, {4: 1}])
    c2 = sparse(5, [{0: 1}, {1: 1, 2: 1}, {1: 1, 2: -1}, {3: 1}, {4: 1}])
    c3 = sparse(5, [{0: 1}, {1: 1, 3: 1}, {2: 1, 4: -1}, {2: 1, 4: 1}, {1: 1, 3: -1}])
    return LayeredFactorization(
        5, 5, (Stage((c3, c2, c1, b, m1, m2, m3, m4, a1)),), name="DHT5"
    )


def dht6_factorization() -> LayeredFactorization:
    """V = (C B A2 + L) A1 v, A1 = Had2 (x) I3"""
    a2 = sparse(6, [{0: 1}, {1: 1, 2: 1}, {1: 1, 2: -1}, {3: 1}, {4: 1, 5: 1}, {4: 1, 5: -1}])
    multipliers = SparseRealMatrix.diagonal([1.0, 1.0, A3, 1.0, A3, 1.0])
    post = sparse(
        6,
        [{0: 1, 1: 1}, {3: 1, 4: 1}, {0: 1, 2: 1}, {3: 1, 5: -1}, {0: 1, 2: -1}, {3: 1, 4: -1}],
    )
    layer = sparse(6, [{}, {4: 1}, {2: -1}, {}, {1: -1}, {5: -1}])
    return LayeredFactorization(
        6,
        6,
        (Stage((hadamard_pre_addition(6),)), Stage((post, multipliers, a2), layer)),
        name="DHT6",
    )


def odd12_factorization() -> LayeredFactorization:
    """
    Odd rows of the 12-point transform acting on w_i = v_i - v_{i+6}.

    Outputs are V1, V3, V5, V7, V9, V11. After pairing w0/w3, w1/w2 and
    w4/w5 only (sqrt(3) - 1) / 2 is needed, applied to two shared sums.
    """
    # w0+w3, w1+w2, w1-w2, w0-w3, w4+w5, w4-w5
    pairs = sparse(6, [{0: 1, 3: 1}, {1: 1, 2: 1}, {1: 1, 2: -1}, {0: 1, 3: -1}, {4: 1, 5: 1}, {4: 1, 5: -1}])
    pre = sparse(6, [{0: 1}, {1: 1, 5: 1}, {2: 1, 4: 1}, {3: 1}, {2: 1, 4: -1}, {1: 1, 5: -1}])
    multipliers = SparseRealMatrix.diagonal([1.0, A3, 1.0, 1.0, A3, 1.0])
    post = sparse(
        6,
        [{0: 1, 1: 1}, {2: 1, 3: 1}, {0: 1, 1: -1}, {3: 1, 4: -1}, {0: 1, 5: -1}, {3: 1, 4: 1}],
    )
    layer = sparse(6, [{1: 1}, {}, {5: -1}, {2: -1}, {}, {4: -1}])
    return LayeredFactorization(
        6, 6, (Stage((pairs,)), Stage((post, multipliers, pre), layer)), name="ODD12"
    )


def dht12_factorization() -> LayeredFactorization:
    split = LayeredFactorization(12, 12, (Stage((hadamard_pre_addition(12),)),), name="HAD12")
    halves = direct_sum(dht6_factorization(), odd12_factorization())
    # DHT6 outputs are V0, V2, ..., V10; the odd block's are V1, V3, ..., V11
    order = [k // 2 if k % 2 == 0 else 6 + (k - 1) // 2 for k in range(12)]
    return concatenate(split, with_output_order(halves, order), name="DHT12")


def odd24_tail_factorization() -> LayeredFactorization:
    """
    sum_m x_m cas(2 pi k m / 24) over odd m, for odd k = 1, 3, ..., 11.

    Input is x1, x3, ..., x11. Uses sqrt(6)/2, sqrt(2) and sqrt(2)/2, two
    each; sqrt(2) * x = sqrt(2)/2 * (x + x) turns two products into additions.
    """
    # alpha = x1+x5, x3, beta = x1-x5, gamma = x7+x11, x9, delta = x7-x11
    first = sparse(6, [{0: 1, 2: 1}, {1: 1}, {0: 1, 2: -1}, {3: 1, 5: 1}, {4: 1}, {3: 1, 5: -1}])
    # alpha, beta+x9, 2x3+delta, gamma, x3-delta, beta-2x9
    combine = sparse(6, [{0: 1}, {2: 1, 4: 1}, {1: 1, 5: 1}, {3: 1}, {1: 1, 5: -1}, {2: 1, 4: -1}])
    layer = sparse(6, [{}, {}, {1: 1}, {}, {}, {4: -1}])
    multipliers = SparseRealMatrix.diagonal([ROOT6_HALF, ROOT2, ROOT2_HALF, ROOT6_HALF, ROOT2, ROOT2_HALF])
    # F1, F3, F5, F7, F9, F11
    post = sparse(6, [{0: 1, 2: 1}, {1: 1}, {0: 1, 2: -1}, {3: 1, 5: 1}, {4: 1}, {3: 1, 5: -1}])
    return LayeredFactorization(
        6,
        6,
        (Stage((first,)), Stage((combine,), layer), Stage((post, multipliers))),
        name="ODD24TAIL",
    )


def odd24_factorization() -> LayeredFactorization:
    """Odd rows of the 24-point transform on w_i = v_i - v_{i+12}: (E, F) halves"""
    halves = direct_sum(odd12_factorization(), odd24_tail_factorization())
    order = list(range(0, 12, 2)) + list(range(1, 12, 2))
    return with_input_order(halves, order, name="ODD24")


def dht24_factorization() -> LayeredFactorization:
    split = LayeredFactorization(24, 24, (Stage((hadamard_pre_addition(24),)),), name="HAD24")
    halves = direct_sum(dht12_factorization(), odd24_factorization())

    # Inputs: V0, V2, ..., V22, then E1..E11, then F1..F11; V_k = E_k + F_k, V_{k+12} = E_k - F_k
    rows: List[Dict[int, float]] = [{} for _ in range(24)]
    for m in range(12):
        rows[2 * m] = {m: 1}
    for k in range(1, 12, 2):
        index = (k - 1) // 2
        rows[k] = {12 + index: 1, 18 + index: 1}
        rows[k + 12] = {12 + index: 1, 18 + index: -1}
    combine = LayeredFactorization(24, 24, (Stage((sparse(24, rows),)),), name="COMBINE24")

    return concatenate(split, halves, combine, name="DHT24")


FACTORIZATIONS = {
    3: dht3_factorization,
    5: dht5_factorization,
    6: dht6_factorization,
    12: dht12_factorization,
    24: dht24_factorization,
}


# =============================================================================
# KERNELS
# =============================================================================


def compile_kernel(n: int, factorization: LayeredFactorization) -> FastKernel:
    program = emit_slp(factorization)
    opcount = count_ops(factorization)
    logger.debug(
        f"Compiled {factorization.name}: {opcount.multiplications} mul "
        f"(+{opcount.rational_multiplications} rational), {opcount.additions} add, "
        f"{len(program.instructions)} instructions"
    )
    return FastKernel(n, factorization, program, opcount)


def build_kernel_3() -> FastKernel:
    return compile_kernel(3, dht3_factorization())


def build_kernel_5() -> FastKernel:
    return compile_kernel(5, dht5_factorization())


def build_kernel_6() -> FastKernel:
    return compile_kernel(6, dht6_factorization())


def build_kernel_12() -> FastKernel:
    return compile_kernel(12, dht12_factorization())


def build_kernel_24() -> FastKernel:
    return compile_kernel(24, dht24_factorization())


BUILDERS = {3: build_kernel_3, 5: build_kernel_5, 6: build_kernel_6, 12: build_kernel_12, 24: build_kernel_24}


class KernelRegistry:
    """Compiled kernels by blocklength; immutable once built"""

    def __init__(self):
        logger.info("=== BUILDING KERNEL REGISTRY ===")
        self._kernels: Dict[int, FastKernel] = {n: BUILDERS[n]() for n in SUPPORTED_LENGTHS}
        for n, kernel in self._kernels.items():
            logger.info(
                f"N={n}: {kernel.opcount.multiplications} mul, "
                f"{kernel.opcount.additions} add, {len(kernel.program.instructions)} instructions"
            )

    @property
    def supported_lengths(self) -> Tuple[int, ...]:
        return tuple(sorted(self._kernels))

    def get(self, n: int) -> FastKernel:
        if n not in self._kernels:
            raise UnsupportedLengthError(n, self.supported_lengths)
        return self._kernels[n]

    def __contains__(self, n: int) -> bool:
        return n in self._kernels

    def __iter__(self):
        return iter(self._kernels[n] for n in self.supported_lengths)

    def __len__(self) -> int:
        return len(self._kernels)

    def fast_dht(self, v: Any):
        signal = as_signal(v)
        kernel = self.get(signal.size)
        return as_spectrum(run_slp(kernel.program, signal))

    def fast_idht(self, spectrum: Any):
        values = as_spectrum(spectrum)
        return as_signal(run_slp(self.get(values.size).program, values) / values.size)

    def fast_dft(self, v: Any):
        return dht_to_dft(self.fast_dht(v))

    def batch_transform(self, signals: Iterable[Any], direction: str = "forward") -> List[np.ndarray]:
        """Run one program over the whole batch, one register row per signal"""
        if direction not in DIRECTIONS:
            raise ValueError(f"Direction must be one of {DIRECTIONS}, got {direction!r}")

        vectors = [as_signal(s) for s in signals]
        if not vectors:
            return []

        lengths = sorted({vector.size for vector in vectors})
        if len(lengths) > 1:
            raise DimensionMismatchError(f"Batch mixes signal lengths {lengths}")

        n = lengths[0]
        kernel = self.get(n)
        results = run_slp(kernel.program, np.stack(vectors, axis=1))
        if direction == "inverse":
            results = results / n

        logger.debug(f"Batch {direction} transform of {len(vectors)} signals at N={n}")
        return [as_spectrum(results[:, j]) for j in range(len(vectors))]

    def verify_all(
        self,
        tol: float = DEFAULT_TOLERANCE,
        trials: int = DEFAULT_TRIALS,
        seed: int = DEFAULT_SEED,
        lengths: Sequence[int] = (),
    ) -> List[VerificationReport]:
        """Verify each kernel and attach its published counts"""
        logger.info(f"=== VERIFYING KERNELS (tol={tol:g}, trials={trials}) ===")
        reports = []
        for n in lengths or self.supported_lengths:
            kernel = self.get(n)
            report = verify(kernel.factorization, n, tol=tol, trials=trials, seed=seed)
            claimed_mul, claimed_add = CLAIMED[n]
            opcount = report.opcount

            notes = []
            if opcount.multiplications != claimed_mul or opcount.additions != claimed_add:
                notes.append(
                    f"achieved {opcount.multiplications} mul / {opcount.additions} add "
                    f"vs claimed {claimed_mul} / {claimed_add}"
                )
            if opcount.rational_multiplications:
                notes.append(
                    f"{opcount.rational_multiplications} rational mul, "
                    f"{opcount.total_multiplications} mul counting every constant other than +-1"
                )
            if opcount.multiplications > claimed_mul:
                logger.warning(
                    f"N={n}: construction uses {opcount.multiplications} nontrivial multiplications, "
                    f"published count is {claimed_mul}"
                )

            report = replace(report, claimed_mul=claimed_mul, claimed_add=claimed_add, notes="; ".join(notes))
            logger.info(
                f"N={n}: dense {report.dense_error:.3e}, oracle {report.oracle_error:.3e}, "
                f"{'PASS' if report.passed else 'FAIL'}"
            )
            reports.append(report)
        return reports

    def audit(
        self,
        tol: float = DEFAULT_TOLERANCE,
        trials: int = DEFAULT_TRIALS,
        seed: int = DEFAULT_SEED,
        lengths: Sequence[int] = (),
    ) -> AuditReport:
        """Verification plus the multiplication and addition budgets"""
        records = []
        for report in self.verify_all(tol=tol, trials=trials, seed=seed, lengths=lengths):
            n = report.blocklength
            in_budget = within_budget(report.opcount.multiplications, multiplication_budget(n)) and within_budget(
                report.opcount.additions, addition_budget(n)
            )
            if not in_budget:
                logger.error(f"N={n}: operation counts outside budget")
            records.append(
                AuditRecord(
                    blocklength=n,
                    multiplications=report.opcount.multiplications,
                    additions=report.opcount.additions,
                    rational_multiplications=report.opcount.rational_multiplications,
                    claimed_mul=report.claimed_mul,
                    claimed_add=report.claimed_add,
                    dense_error=report.dense_error,
                    oracle_error=report.oracle_error,
                    passed=report.passed and in_budget,
                    notes=report.notes,
                )
            )
        return AuditReport(tolerance=tol, records=tuple(records))


# Global registry instance
kernel_registry = KernelRegistry()


def get_kernel(n: int) -> FastKernel:
    return kernel_registry.get(n)


def fast_dht(v: Any):
    return kernel_registry.fast_dht(v)


def fast_idht(spectrum: Any):
    return kernel_registry.fast_idht(spectrum)


def fast_dft(v: Any):
    return kernel_registry.fast_dft(v)


def batch_transform(signals: Iterable[Any], direction: str = "forward") -> List[np.ndarray]:
    return kernel_registry.batch_transform(signals, direction)
