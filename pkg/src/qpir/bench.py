"""Communication/runtime sweeps over (ell, r) written as CSV."""

from __future__ import annotations

import csv
import io
import itertools
import re
import time
from dataclasses import dataclass

import numpy as np

from qpir import sparse
from qpir.analysis import random_database
from qpir.errors import CapacityError
from qpir.protocol import BACKENDS, classical_baseline_cost, run_session

CSV_HEADER = ("ell", "r", "backend", "quantum_qubits", "classical_bits", "wall_ms")

_RANGE = re.compile(r"^(\d+)\.\.(\d+)$")
_POW = re.compile(r"^(\d+)\^(\d+)\.\.(\d+)$")


def parse_values(text: str) -> list[int]:
    """``8``, ``1..4``, ``2^1..10`` or a comma list such as ``2,4,16``."""
    text = text.strip()
    if m := _POW.match(text):
        base, lo, hi = map(int, m.groups())
        values = [base ** k for k in range(lo, hi + 1)]
    elif m := _RANGE.match(text):
        lo, hi = map(int, m.groups())
        values = list(range(lo, hi + 1))
    else:
        try:
            values = [int(v) for v in text.split(",")]
        except ValueError:
            raise ValueError(f"bad sweep values {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise ValueError(f"sweep values must be positive: {text!r}")
    return values


def parse_sweep(specs: list[str]) -> list[tuple[int, int]]:
    """Turn ``["ell=2^1..10", "r=16"]`` into (ell, r) instances.

    ``r=ell`` ties the width to the item count.
    """
    ells, rs, tied = [4], [4], False
    for spec in specs:
        key, sep, value = spec.partition("=")
        key = key.strip()
        if not sep or key not in ("ell", "r"):
            raise ValueError(f"bad sweep term {spec!r}; expected ell=... or r=...")
        if key == "r" and value.strip() == "ell":
            tied = True
        elif key == "ell":
            ells = parse_values(value)
        else:
            rs = parse_values(value)
    if tied:
        return [(ell, ell) for ell in ells]
    return list(itertools.product(ells, rs))


@dataclass
class BenchRow:
    ell: int
    r: int
    backend: str
    quantum_qubits: int | None
    classical_bits: int
    wall_ms: float | None
    skipped: bool = False

    def cells(self, timing: bool = True) -> list[str]:
        if self.skipped:
            qubits, wall = "", f"skipped({self.backend})"
        else:
            qubits = str(self.quantum_qubits)
            wall = f"{self.wall_ms:.3f}" if timing else ""
        return [str(self.ell), str(self.r), self.backend, qubits,
                str(self.classical_bits), wall]


def run_bench(instances: list[tuple[int, int]], backends=BACKENDS,
              seed: int = 0) -> list[BenchRow]:
    """One session per (instance, backend) on a seeded random database.

    The quantum column is read off the live transcript.  Instances a backend
    cannot hold are kept as skipped rows.
    """
    rows = []
    for ell, r in instances:
        if r > sparse.MAX_R or ell > sparse.MAX_ELL:
            rows.extend(BenchRow(ell, r, backend, None, classical_baseline_cost(ell, r),
                                 None, skipped=True) for backend in backends)
            continue
        rng = np.random.default_rng([seed, ell, r])
        db = random_database(rng, ell, r)
        index = int(rng.integers(1, ell + 1))
        for backend in backends:
            start = time.perf_counter()
            try:
                result = run_session(db, index, backend, seed)
            except CapacityError:
                rows.append(BenchRow(ell, r, backend, None,
                                     classical_baseline_cost(ell, r), None, skipped=True))
                continue
            wall = (time.perf_counter() - start) * 1000
            if result.output != db.item(index):
                raise RuntimeError(f"wrong output for ell={ell}, r={r} on {backend}")
            rows.append(BenchRow(ell, r, backend, result.transcript.total_qubits,
                                 classical_baseline_cost(ell, r), wall))
    return rows


def write_csv(rows: list[BenchRow], fh, timing: bool = True) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.cells(timing))


def csv_text(rows: list[BenchRow], timing: bool = True) -> str:
    buf = io.StringIO()
    write_csv(rows, buf, timing)
    return buf.getvalue()
