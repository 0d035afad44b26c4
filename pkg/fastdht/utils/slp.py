#!/usr/bin/env python3

"""
Fast DHT - Straight-Line Programs

Compiles a layered factorization into a single-assignment instruction list
and runs it. Emission follows the same row plans as count_ops, so the
ADD/SUB count equals the counted additions and the MUL_CONST count equals
the counted multiplications (irrational plus rational).
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from models import (
    DimensionMismatchError,
    Instruction,
    LayeredFactorization,
    Opcode,
    StraightLineProgram,
)
from utils.factorization import RowPlan, plan_matrix

logger = logging.getLogger(__name__)

Registers = List[Optional[int]]
Products = Dict[Tuple[int, float], int]


class ProgramBuilder:
    """Accumulates instructions; each emit returns the fresh register number"""

    def __init__(self):
        self.instructions: List[Instruction] = []

    def emit(self, op: Opcode, operands: Tuple[int, ...] = (), constant: Optional[float] = None,
             slot: Optional[int] = None) -> int:
        self.instructions.append(Instruction(op, operands, constant, slot))
        return len(self.instructions) - 1

    def load(self, slot: int) -> int:
        return self.emit(Opcode.LOAD, slot=slot)

    def add(self, a: int, b: int) -> int:
        return self.emit(Opcode.ADD, (a, b))

    def sub(self, a: int, b: int) -> int:
        return self.emit(Opcode.SUB, (a, b))

    def neg(self, a: int) -> int:
        return self.emit(Opcode.NEG, (a,))

    def scale(self, a: int, constant: float) -> int:
        return self.emit(Opcode.MUL_CONST, (a,), constant=constant)

    def linear_combination(
        self,
        terms: Sequence[Tuple[int, float]],
        registers: Registers,
        products: Optional[Products] = None,
    ) -> int:
        """
        Sum of constant * register terms.

        Constants are applied by magnitude and signs are folded into ADD/SUB;
        a leading positive term is chosen when one exists so that only
        all-negative rows need a trailing NEG. products maps (column, |constant|)
        to an already scaled register and is shared by the rows of one matrix.
        """
        products = {} if products is None else products
        scaled: List[Tuple[int, bool]] = []
        for col, value in terms:
            register = registers[col]
            if abs(value) != 1.0:
                key = (col, abs(value))
                if key not in products:
                    products[key] = self.scale(register, abs(value))
                register = products[key]
            scaled.append((register, value < 0))

        lead = next((k for k, (_, negative) in enumerate(scaled) if not negative), None)
        if lead is None:
            acc = scaled[0][0]
            for register, _ in scaled[1:]:
                acc = self.add(acc, register)
            return self.neg(acc)

        acc = scaled[lead][0]
        for k, (register, negative) in enumerate(scaled):
            if k == lead:
                continue
            acc = self.sub(acc, register) if negative else self.add(acc, register)
        return acc

    def rows(self, plans: Sequence[RowPlan], registers: Registers) -> Registers:
        out: Registers = []
        products: Products = {}
        for plan in plans:
            if plan.kind == "zero":
                out.append(None)
            elif plan.kind == "reuse":
                out.append(out[plan.source])
            elif plan.kind == "negate":
                out.append(self.neg(out[plan.source]))
            else:
                out.append(self.linear_combination(plan.terms, registers, products))
        return out


def emit_slp(f: LayeredFactorization) -> StraightLineProgram:
    builder = ProgramBuilder()
    registers: Registers = [builder.load(slot) for slot in range(f.n_input)]

    for stage in f.stages:
        stage_in = registers
        for matrix in reversed(stage.chain):
            plan = plan_matrix(matrix, [r is None for r in registers])
            registers = builder.rows(plan.rows, registers)

        if stage.layer is None:
            continue

        layer_plan = plan_matrix(stage.layer, [r is None for r in stage_in])
        layer_registers: Dict[int, Optional[int]] = {}
        layer_products: Products = {}

        def layer_row(row: int) -> Optional[int]:
            # Rows are materialised on demand; a bare -x merges as SUB without a NEG
            if row not in layer_registers:
                plan = layer_plan.rows[row]
                if plan.kind == "zero":
                    layer_registers[row] = None
                elif plan.kind == "reuse":
                    layer_registers[row] = layer_row(plan.source)
                elif plan.kind == "negate":
                    layer_registers[row] = builder.neg(layer_row(plan.source))
                else:
                    layer_registers[row] = builder.linear_combination(plan.terms, stage_in, layer_products)
            return layer_registers[row]

        merged: Registers = []
        for row, chain_register in enumerate(registers):
            plan = layer_plan.rows[row]
            if plan.kind == "zero":
                merged.append(chain_register)
            elif chain_register is None:
                merged.append(layer_row(row))
            elif plan.kind == "compute" and plan.terms and len(plan.terms) == 1 and plan.terms[0][1] == -1.0:
                merged.append(builder.sub(chain_register, stage_in[plan.terms[0][0]]))
            else:
                merged.append(builder.add(chain_register, layer_row(row)))
        registers = merged

    program = StraightLineProgram(f.n_input, f.n_output, tuple(builder.instructions), tuple(registers))
    logger.debug(f"Emitted {len(program.instructions)} instructions for {f.name or '<unnamed>'}: {program.tally()}")
    return program


def run_slp(p: StraightLineProgram, v: Any) -> np.ndarray:
    """
    Execute a program in order.

    v is either a vector of length n_input or an (n_input, batch) array, in
    which case every register holds a whole batch row.
    """
    values = np.asarray(v, dtype=np.float64)
    if values.ndim not in (1, 2) or values.shape[0] != p.n_input:
        raise DimensionMismatchError(
            f"Program takes {p.n_input} inputs, got array of shape {values.shape}"
        )

    registers: List[Any] = []
    for instruction in p.instructions:
        op, operands = instruction.op, instruction.operands
        if op is Opcode.LOAD:
            registers.append(values[instruction.slot])
        elif op is Opcode.ADD:
            registers.append(registers[operands[0]] + registers[operands[1]])
        elif op is Opcode.SUB:
            registers.append(registers[operands[0]] - registers[operands[1]])
        elif op is Opcode.MUL_CONST:
            registers.append(instruction.constant * registers[operands[0]])
        else:
            registers.append(-registers[operands[0]])

    out = np.zeros((p.n_output,) + values.shape[1:], dtype=np.float64)
    for k, register in enumerate(p.output_map):
        if register is not None:
            out[k] = registers[register]
    return out


def format_program(p: StraightLineProgram) -> str:
    """Text listing, one instruction per line (r7 = SUB r3, r5)"""
    lines = [f"# {p.n_input} inputs, {p.n_output} outputs, {len(p.instructions)} instructions"]
    for register, instruction in enumerate(p.instructions):
        if instruction.op is Opcode.LOAD:
            body = f"LOAD x{instruction.slot}"
        elif instruction.op is Opcode.MUL_CONST:
            body = f"MUL_CONST r{instruction.operands[0]}, {instruction.constant!r}"
        else:
            body = f"{instruction.op.value} " + ", ".join(f"r{o}" for o in instruction.operands)
        lines.append(f"r{register} = {body}")
    for k, register in enumerate(p.output_map):
        lines.append(f"y{k} = {'0' if register is None else f'r{register}'}")
    return "\n".join(lines)
