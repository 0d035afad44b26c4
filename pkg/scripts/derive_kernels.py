#!/usr/bin/env python3
"""
Kernel Derivation Checker for Fast DHT
Re-derives every built-in kernel except the 5-point one with the rewrite
passes, compares the results with the built-in factorizations matrix for
matrix, and writes every built-in factorization as JSON.
"""

import argparse
import json
import logging
import os
import sys
from typing import Any, Dict, List

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "fastdht"))

from models import LayeredFactorization, PassNotApplicableError  # noqa: E402
from utils.factorization import (  # noqa: E402
    count_ops,
    hadamard_pre_addition,
    reconstruct_dense,
    save_factorization,
    verify,
)
from utils.hartley import hartley_matrix  # noqa: E402
from utils.kernels import (  # noqa: E402
    FACTORIZATIONS,
    dht12_factorization,
    dht24_factorization,
    odd12_factorization,
    odd24_tail_factorization,
)
from utils.passes import (  # noqa: E402
    ODD24_ROW_PAIRS,
    derive_odd_tail,
    derive_odd_twelve,
    derive_six_point,
    derive_three_point,
    derive_twelve_point,
    derive_twenty_four_point,
    pass_hadamard_split,
    pass_row_combine,
)

DERIVATIONS = {
    3: derive_three_point,
    6: derive_six_point,
    12: derive_twelve_point,
    24: derive_twenty_four_point,
}

logger = logging.getLogger("derive_kernels")


class KernelDeriver:
    def __init__(self, tol: float = 1e-12):
        self.tol = tol
        self.checks: List[Dict[str, Any]] = []

    def record(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append({"check": name, "passed": bool(passed), "detail": detail})
        logger.info(f"{'PASS' if passed else 'FAIL'} {name} {detail}".rstrip())

    def same_factorization(self, derived: LayeredFactorization, built_in: LayeredFactorization) -> bool:
        if len(derived.stages) != len(built_in.stages):
            return False
        for mine, theirs in zip(derived.stages, built_in.stages):
            if [m.shape for m in mine.chain] != [m.shape for m in theirs.chain]:
                return False
            for m, t in zip(mine.chain, theirs.chain):
                if not np.allclose(m.to_dense(), t.to_dense(), rtol=0, atol=self.tol):
                    return False
            if (mine.layer is None) != (theirs.layer is None):
                return False
            if mine.layer is not None and not np.array_equal(mine.layer.to_dense(), theirs.layer.to_dense()):
                return False
        return True

    def check_derivations(self) -> None:
        for n, derive in DERIVATIONS.items():
            try:
                derived = derive()
            except PassNotApplicableError as e:
                self.record(f"derive N={n}", False, str(e))
                continue
            opcount = count_ops(derived)
            self.record(
                f"derive N={n}",
                self.same_factorization(derived, FACTORIZATIONS[n]()) and verify(derived, n, tol=self.tol).passed,
                f"({opcount.multiplications} mul, {opcount.additions} add)",
            )

    def check_odd_blocks(self) -> None:
        """The odd-row blocks of 12 and 24, derived on their own"""
        reduced12, _ = pass_hadamard_split(hartley_matrix(12))
        self.record(
            "derive 12-point odd block",
            self.same_factorization(derive_odd_twelve(reduced12[1::2, 6:]), odd12_factorization()),
        )

        reduced24, _ = pass_hadamard_split(hartley_matrix(24))
        parity = list(range(0, 12, 2)) + list(range(1, 12, 2))
        halves, _ = pass_row_combine(reduced24[1::2, 12:][:, parity], pairs=ODD24_ROW_PAIRS)
        error = float(np.max(np.abs(halves[:6, :6] - reduced12[1::2, 6:])))
        self.record("24-point odd rows reuse the 12-point odd block", error <= self.tol, f"(error {error:.3e})")
        self.record(
            "derive 24-point odd tail",
            self.same_factorization(derive_odd_tail(halves[6:, 6:]), odd24_tail_factorization()),
        )

    def check_hadamard_split(self) -> None:
        for n in (6, 12, 24):
            try:
                reduced, pre = pass_hadamard_split(hartley_matrix(n))
            except PassNotApplicableError as e:
                self.record(f"hadamard split N={n}", False, str(e))
                continue
            error = float(np.max(np.abs(reduced @ pre.to_dense() - hartley_matrix(n))))
            self.record(f"hadamard split N={n}", error <= self.tol, f"(error {error:.3e})")

    def check_embedding(self) -> None:
        f12 = dht12_factorization()
        first = f12.stages[0].chain[0]
        self.record("N=12 starts with Had2 x I6", first == hadamard_pre_addition(12))

        f24 = dht24_factorization()
        inner = LayeredFactorization(24, 24, f24.stages[1:-1])
        dense = reconstruct_dense(inner)
        error = float(np.max(np.abs(dense[:12, :12] - hartley_matrix(12))))
        self.record(
            "N=24 embeds N=12 on the sums",
            error <= self.tol and not np.any(dense[:12, 12:]),
            f"(error {error:.3e})",
        )

    def write_factorizations(self, directory: str) -> List[str]:
        os.makedirs(directory, exist_ok=True)
        written = []
        for n, build in sorted(FACTORIZATIONS.items()):
            written.append(save_factorization(build(), os.path.join(directory, f"dht{n}.json")))
        return written

    def run(self) -> Dict[str, Any]:
        self.checks = []
        self.check_derivations()
        self.check_odd_blocks()
        self.check_hadamard_split()
        self.check_embedding()
        return {
            "tolerance": self.tol,
            "checks": self.checks,
            "passed": all(check["passed"] for check in self.checks),
        }

    def generate_report(self, results: Dict[str, Any]) -> str:
        lines = ["=" * 60, "KERNEL DERIVATION REPORT", "=" * 60]
        for check in results["checks"]:
            status = "PASS" if check["passed"] else "FAIL"
            lines.append(f"[{status}] {check['check']} {check['detail']}".rstrip())
        lines.append("")
        lines.append(f"Overall: {'PASS' if results['passed'] else 'FAIL'}")
        return "\n".join(lines)


def main():
    parser = argparse.ArgumentParser(description="Re-derive and export the built-in DHT kernels")
    parser.add_argument("--output", metavar="DIR", help="Write dht<N>.json factorizations to DIR")
    parser.add_argument("--tol", type=float, default=1e-12)
    parser.add_argument("--json", action="store_true", help="Print the report as JSON")
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging")
    args = parser.parse_args()

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    deriver = KernelDeriver(tol=args.tol)
    results = deriver.run()

    if args.json:
        print(json.dumps(results, indent=2))
    else:
        print(deriver.generate_report(results))

    if args.output:
        for path in deriver.write_factorizations(args.output):
            print(f"Wrote {path}")

    sys.exit(0 if results["passed"] else 1)


if __name__ == "__main__":
    main()
