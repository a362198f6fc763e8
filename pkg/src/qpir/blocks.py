"""Retrieving single bits of an n-bit database through s x s blocks.

The bits are zero-padded to s*s with s = ceil(sqrt(n)) and cut into s blocks
of s bits; one protocol run with ell = r = s fetches the block holding the
requested bit, for 4s qubits.  Indices are 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from qpir.core import BitString, Database
from qpir.errors import DimensionError, FormatError, RangeError
from qpir.protocol import Backend, SessionResult, run_session


@dataclass(frozen=True)
class BitDatabase:
    bits: BitString

    @property
    def n(self) -> int:
        return self.bits.width

    def bit(self, i: int) -> int:
        return self.bits.bit(i)


def load_bit_database(text: str) -> BitDatabase:
    """Parse a single line over {0,1} (trailing newline optional)."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) != 1:
        raise FormatError(f"binary database must be one line, got {len(lines)}")
    line = lines[0].rstrip("\r")
    if not line:
        raise FormatError("empty binary database")
    return BitDatabase(BitString.from_str(line))


def read_bit_database(path) -> BitDatabase:
    with open(path, encoding="utf-8") as fh:
        return load_bit_database(fh.read())


@dataclass(frozen=True)
class BlockPlan:
    n: int
    s: int

    @property
    def padded_n(self) -> int:
        return self.s * self.s

    def j_of(self, i: int) -> int:
        self._check(i)
        return -(-i // self.s)

    def offset_of(self, i: int) -> int:
        return i - (self.j_of(i) - 1) * self.s

    def _check(self, i: int) -> None:
        if not 1 <= i <= self.n:
            raise RangeError(f"bit index {i} outside 1..{self.n}")

    def to_dict(self, i: int) -> dict:
        return {"n": self.n, "s": self.s, "j": self.j_of(i), "offset": self.offset_of(i)}


def choose_block_size(n: int) -> int:
    if n < 1:
        raise DimensionError("bit database must be non-empty")
    return math.isqrt(n - 1) + 1


def plan_for(n: int) -> BlockPlan:
    return BlockPlan(n, choose_block_size(n))


def build_block_database(bits: BitDatabase, s: int) -> Database:
    """Cut ``bits`` (zero-padded to s*s) into s items of s bits each."""
    if s < 1 or s * s < bits.n:
        raise DimensionError(f"block size {s} too small for {bits.n} bits")
    padded = bits.bits.value << (s * s - bits.n)
    mask = (1 << s) - 1
    return Database(tuple(BitString((padded >> (s * (s - k))) & mask, s)
                          for k in range(1, s + 1)))


@dataclass
class BitRetrieval:
    bit: int
    qubits: int
    plan: BlockPlan
    index: int
    block: BitString
    session: SessionResult

    def transcript_dict(self) -> dict:
        doc = self.session.transcript.to_dict()
        doc["block_plan"] = self.plan.to_dict(self.index)
        return doc


def retrieve_bit(bits: BitDatabase, i: int, backend: str | Backend = "sparse",
                 seed: int = 0) -> BitRetrieval:
    plan = plan_for(bits.n)
    j = plan.j_of(i)
    blocks = build_block_database(bits, plan.s)
    session = run_session(blocks, j, backend, seed)
    block = session.output
    session.transcript.block_plan = plan.to_dict(i)
    return BitRetrieval(block.bit(plan.offset_of(i)), session.transcript.total_qubits,
                        plan, i, block, session)
