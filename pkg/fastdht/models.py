#!/usr/bin/env python3

"""
Fast DHT - Domain Models

Signals, spectra, sparse factor matrices, layered factorizations, straight-line
programs and the reports built on top of them. Everything here is immutable
after construction; numerical work lives in the utils package.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

# Type aliases for the numpy-backed vector and matrix types
Signal = np.ndarray
Spectrum = np.ndarray
ComplexSpectrum = np.ndarray
DenseMatrix = np.ndarray


# =============================================================================
# ERRORS
# =============================================================================


class DimensionMismatchError(ValueError):
    """Vector or matrix shapes do not compose"""


class UnsupportedLengthError(ValueError):
    """No fast kernel is registered for the requested blocklength"""

    def __init__(self, length: int, supported: Iterable[int]):
        self.length = length
        self.supported = tuple(sorted(supported))
        supported_text = ", ".join(str(n) for n in self.supported)
        super().__init__(
            f"Unsupported blocklength {length}; supported lengths are {{{supported_text}}}"
        )


class PassNotApplicableError(ValueError):
    """A derivation pass cannot run on the given matrix"""


class NotRealSignalError(ValueError):
    """A complex spectrum is not the DFT of a real signal"""


class SignalFileError(ValueError):
    """A signal file could not be parsed"""


# =============================================================================
# SIGNALS AND SPECTRA
# =============================================================================


def as_signal(values: Any, name: str = "signal") -> Signal:
    """Validate and freeze a real vector (length >= 1, finite entries)"""
    try:
        array = np.array(values, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise ValueError(f"{name} must contain real numbers: {e}")

    if array.ndim != 1:
        raise DimensionMismatchError(
            f"{name} must be one-dimensional, got shape {array.shape}"
        )
    if array.size == 0:
        raise ValueError(f"{name} must have length >= 1")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} contains NaN or infinite entries")

    array.setflags(write=False)
    return array


def as_spectrum(values: Any) -> Spectrum:
    return as_signal(values, name="spectrum")


def as_complex_spectrum(values: Any) -> ComplexSpectrum:
    """Validate and freeze a complex vector"""
    array = np.array(values, dtype=np.complex128)
    if array.ndim != 1 or array.size == 0:
        raise DimensionMismatchError(
            f"complex spectrum must be a non-empty vector, got shape {array.shape}"
        )
    if not np.all(np.isfinite(array)):
        raise ValueError("complex spectrum contains NaN or infinite entries")

    array.setflags(write=False)
    return array


# =============================================================================
# SPARSE MATRICES AND FACTORIZATIONS
# =============================================================================

Entry = Tuple[int, int, float]


@dataclass(frozen=True)
class SparseRealMatrix:
    """rows x cols matrix stored as explicit (row, col, constant) entries"""

    rows: int
    cols: int
    entries: Tuple[Entry, ...] = ()
    _row_index: Tuple[Tuple[Tuple[int, float], ...], ...] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"Matrix shape must be positive, got {self.rows}x{self.cols}")

        normalized = {}
        for entry in self.entries:
            row, col, value = int(entry[0]), int(entry[1]), float(entry[2])
            if not (0 <= row < self.rows and 0 <= col < self.cols):
                raise ValueError(
                    f"Entry ({row}, {col}) outside {self.rows}x{self.cols} matrix"
                )
            if not math.isfinite(value) or value == 0.0:
                raise ValueError(
                    f"Entry ({row}, {col}) must be finite and nonzero, got {value}"
                )
            if (row, col) in normalized:
                raise ValueError(f"Duplicate entry at ({row}, {col})")
            normalized[(row, col)] = value

        ordered = tuple((r, c, normalized[(r, c)]) for r, c in sorted(normalized))
        object.__setattr__(self, "entries", ordered)

        row_index: List[List[Tuple[int, float]]] = [[] for _ in range(self.rows)]
        for r, c, v in ordered:
            row_index[r].append((c, v))
        object.__setattr__(self, "_row_index", tuple(tuple(r) for r in row_index))

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def is_zero(self) -> bool:
        return not self.entries

    def row(self, index: int) -> Tuple[Tuple[int, float], ...]:
        """Entries of one row as (col, value) pairs in ascending column order"""
        return self._row_index[index]

    def to_dense(self) -> DenseMatrix:
        dense = np.zeros((self.rows, self.cols), dtype=np.float64)
        for r, c, v in self.entries:
            dense[r, c] = v
        return dense

    def transpose(self) -> "SparseRealMatrix":
        return SparseRealMatrix(self.cols, self.rows, tuple((c, r, v) for r, c, v in self.entries))

    @classmethod
    def from_dense(cls, matrix: Any, tol: float = 0.0) -> "SparseRealMatrix":
        """Build from a dense array; entries with |value| <= tol are structural zeros"""
        dense = np.array(matrix, dtype=np.float64)
        if dense.ndim != 2:
            raise DimensionMismatchError(f"Expected a 2-D matrix, got shape {dense.shape}")
        entries = [
            (r, c, float(dense[r, c]))
            for r in range(dense.shape[0])
            for c in range(dense.shape[1])
            if abs(dense[r, c]) > tol
        ]
        return cls(dense.shape[0], dense.shape[1], tuple(entries))

    @classmethod
    def identity(cls, n: int) -> "SparseRealMatrix":
        return cls(n, n, tuple((i, i, 1.0) for i in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "SparseRealMatrix":
        return cls(rows, cols, ())

    @classmethod
    def diagonal(cls, values: Sequence[float]) -> "SparseRealMatrix":
        return cls(
            len(values), len(values), tuple((i, i, v) for i, v in enumerate(values) if v != 0.0)
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "entries": [[r, c, v] for r, c, v in self.entries],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SparseRealMatrix":
        return cls(
            int(data["rows"]),
            int(data["cols"]),
            tuple((int(r), int(c), float(v)) for r, c, v in data.get("entries", [])),
        )


@dataclass(frozen=True)
class Stage:
    """One layer of the nesting: out = C_k ... C_1 in + L in"""

    chain: Tuple[SparseRealMatrix, ...]
    layer: Optional[SparseRealMatrix] = None

    def __post_init__(self):
        chain = tuple(self.chain)
        object.__setattr__(self, "chain", chain)
        if not chain:
            raise ValueError("Stage chain must contain at least one matrix")

        # Chain is applied right-to-left: chain[-1] sees the stage input
        for position in range(len(chain) - 1):
            left, right = chain[position], chain[position + 1]
            if left.cols != right.rows:
                raise DimensionMismatchError(
                    f"Chain factors {position} and {position + 1} do not compose: "
                    f"{left.rows}x{left.cols} after {right.rows}x{right.cols}"
                )

        if self.layer is not None and self.layer.shape != (self.n_output, self.n_input):
            raise DimensionMismatchError(
                f"Layer shape {self.layer.rows}x{self.layer.cols} does not match "
                f"chain composite {self.n_output}x{self.n_input}"
            )

    @property
    def n_input(self) -> int:
        return self.chain[-1].cols

    @property
    def n_output(self) -> int:
        return self.chain[0].rows

    def to_dict(self) -> Dict[str, Any]:
        return {
            "chain": [matrix.to_dict() for matrix in self.chain],
            "layer": self.layer.to_dict() if self.layer is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Stage":
        layer = data.get("layer")
        return cls(
            tuple(SparseRealMatrix.from_dict(m) for m in data["chain"]),
            SparseRealMatrix.from_dict(layer) if layer is not None else None,
        )


@dataclass(frozen=True)
class LayeredFactorization:
    """Ordered stages, innermost first"""

    n_input: int
    n_output: int
    stages: Tuple[Stage, ...]
    name: str = ""

    def __post_init__(self):
        stages = tuple(self.stages)
        object.__setattr__(self, "stages", stages)
        if not stages:
            raise ValueError("Factorization must contain at least one stage")
        if stages[0].n_input != self.n_input:
            raise DimensionMismatchError(
                f"First stage expects {stages[0].n_input} inputs, factorization declares {self.n_input}"
            )
        for index in range(1, len(stages)):
            if stages[index].n_input != stages[index - 1].n_output:
                raise DimensionMismatchError(
                    f"Stage {index} expects {stages[index].n_input} inputs but stage "
                    f"{index - 1} produces {stages[index - 1].n_output}"
                )
        if stages[-1].n_output != self.n_output:
            raise DimensionMismatchError(
                f"Last stage produces {stages[-1].n_output} outputs, factorization declares {self.n_output}"
            )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "n_input": self.n_input,
            "n_output": self.n_output,
            "stages": [stage.to_dict() for stage in self.stages],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LayeredFactorization":
        return cls(
            int(data["n_input"]),
            int(data["n_output"]),
            tuple(Stage.from_dict(s) for s in data["stages"]),
            name=data.get("name", ""),
        )


# =============================================================================
# OPERATION COUNTS AND STRAIGHT-LINE PROGRAMS
# =============================================================================


@dataclass(frozen=True)
class OpCount:
    multiplications: int = 0
    additions: int = 0
    rational_multiplications: int = 0

    @property
    def total_multiplications(self) -> int:
        return self.multiplications + self.rational_multiplications

    def __add__(self, other: "OpCount") -> "OpCount":
        return OpCount(
            self.multiplications + other.multiplications,
            self.additions + other.additions,
            self.rational_multiplications + other.rational_multiplications,
        )

    def to_dict(self) -> Dict[str, int]:
        return {
            "multiplications": self.multiplications,
            "additions": self.additions,
            "rational_multiplications": self.rational_multiplications,
            "total_multiplications": self.total_multiplications,
        }


class Opcode(str, Enum):
    LOAD = "LOAD"
    ADD = "ADD"
    SUB = "SUB"
    MUL_CONST = "MUL_CONST"
    NEG = "NEG"


@dataclass(frozen=True)
class Instruction:
    """Defines register number == its position in the program"""

    op: Opcode
    operands: Tuple[int, ...] = ()
    constant: Optional[float] = None
    slot: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"op": self.op.value, "operands": list(self.operands)}
        if self.constant is not None:
            data["constant"] = self.constant
        if self.slot is not None:
            data["slot"] = self.slot
        return data


@dataclass(frozen=True)
class StraightLineProgram:
    """Single-assignment program; output_map entries of None are constant zeros"""

    n_input: int
    n_output: int
    instructions: Tuple[Instruction, ...]
    output_map: Tuple[Optional[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        object.__setattr__(self, "output_map", tuple(self.output_map))

        arity = {Opcode.LOAD: 0, Opcode.ADD: 2, Opcode.SUB: 2, Opcode.MUL_CONST: 1, Opcode.NEG: 1}
        for register, instruction in enumerate(self.instructions):
            if len(instruction.operands) != arity[instruction.op]:
                raise ValueError(
                    f"r{register}: {instruction.op.value} takes {arity[instruction.op]} operands"
                )
            for operand in instruction.operands:
                if not 0 <= operand < register:
                    raise ValueError(
                        f"r{register} reads r{operand}, which is not defined before it"
                    )
            if instruction.op is Opcode.LOAD and not (
                instruction.slot is not None and 0 <= instruction.slot < self.n_input
            ):
                raise ValueError(f"r{register}: LOAD slot {instruction.slot} out of range")
            if instruction.op is Opcode.MUL_CONST and instruction.constant is None:
                raise ValueError(f"r{register}: MUL_CONST without a constant")

        if len(self.output_map) != self.n_output:
            raise DimensionMismatchError(
                f"Program declares {self.n_output} outputs but maps {len(self.output_map)}"
            )
        for register in self.output_map:
            if register is not None and not 0 <= register < len(self.instructions):
                raise ValueError(f"Output register r{register} is not defined")

    def tally(self) -> Dict[str, int]:
        counts = {op.value: 0 for op in Opcode}
        for instruction in self.instructions:
            counts[instruction.op.value] += 1
        return counts

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_input": self.n_input,
            "n_output": self.n_output,
            "instructions": [i.to_dict() for i in self.instructions],
            "output_map": list(self.output_map),
        }


# =============================================================================
# REPORTS AND KERNELS
# =============================================================================


@dataclass(frozen=True)
class VerificationReport:
    blocklength: int
    tolerance: float
    dense_error: float
    oracle_error: float
    trials: int
    opcount: OpCount
    passed: bool
    name: str = ""
    claimed_mul: Optional[int] = None
    claimed_add: Optional[int] = None
    notes: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "N": self.blocklength,
            "tolerance": self.tolerance,
            "dense_error": self.dense_error,
            "oracle_error": self.oracle_error,
            "trials": self.trials,
            "multiplications": self.opcount.multiplications,
            "additions": self.opcount.additions,
            "rational_multiplications": self.opcount.rational_multiplications,
            "total_multiplications": self.opcount.total_multiplications,
            "claimed_mul": self.claimed_mul,
            "claimed_add": self.claimed_add,
            "passed": self.passed,
            "notes": self.notes,
        }


@dataclass(frozen=True)
class FastKernel:
    blocklength: int
    factorization: LayeredFactorization
    program: StraightLineProgram
    opcount: OpCount


@dataclass(frozen=True)
class AuditRecord:
    blocklength: int
    multiplications: int
    additions: int
    rational_multiplications: int
    claimed_mul: int
    claimed_add: int
    dense_error: float
    oracle_error: float
    passed: bool
    notes: str = ""

    @property
    def total_multiplications(self) -> int:
        """Every constant other than +-1, rational ones included"""
        return self.multiplications + self.rational_multiplications

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.blocklength,
            "multiplications": self.multiplications,
            "additions": self.additions,
            "rational_multiplications": self.rational_multiplications,
            "total_multiplications": self.total_multiplications,
            "claimed_mul": self.claimed_mul,
            "claimed_add": self.claimed_add,
            "dense_error": self.dense_error,
            "oracle_error": self.oracle_error,
            "pass": self.passed,
            "notes": self.notes,
        }


@dataclass(frozen=True)
class AuditReport:
    tolerance: float
    records: Tuple[AuditRecord, ...]

    @property
    def passed(self) -> bool:
        return all(record.passed for record in self.records)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tolerance": self.tolerance,
            "passed": self.passed,
            "records": [record.to_dict() for record in self.records],
        }
