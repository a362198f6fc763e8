"""GF(2) bit vectors, databases and the register layout.

Bit ordering convention used everywhere in the package: the leftmost
character of a bit string is position 1 and is the most significant bit of
the integer encoding.  A computational basis state of the full register
system ``(R, R', Q_1, ..., Q_ell)`` is the integer whose bit at position
``total_qubits - 1 - q`` holds qubit ``q``, so ``R`` is the most significant
block and ``Q_ell`` the least significant bit.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Iterator

from qpir.errors import DimensionError, FormatError, RangeError

MAX_WIDTH = 30
MAX_ITEMS = 1 << 20


@dataclass(frozen=True, order=True)
class BitString:
    """An element of {0,1}^width stored as an integer (MSB = position 1)."""

    value: int
    width: int

    def __post_init__(self):
        if self.width < 1:
            raise DimensionError(f"bit string width must be >= 1, got {self.width}")
        if not 0 <= self.value < (1 << self.width):
            raise DimensionError(
                f"value {self.value} does not fit in {self.width} bits")

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        if not text or any(c not in "01" for c in text):
            raise FormatError(f"not a bit string: {text!r}")
        return cls(int(text, 2), len(text))

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitString":
        bits = list(bits)
        value = 0
        for b in bits:
            if b not in (0, 1):
                raise FormatError(f"bits must be 0 or 1, got {b!r}")
            value = (value << 1) | b
        return cls(value, len(bits))

    @classmethod
    def zeros(cls, width: int) -> "BitString":
        return cls(0, width)

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple((self.value >> (self.width - 1 - p)) & 1 for p in range(self.width))

    def bit(self, position: int) -> int:
        """Bit at 1-based ``position`` (position 1 is the leftmost)."""
        if not 1 <= position <= self.width:
            raise RangeError(f"position {position} outside 1..{self.width}")
        return (self.value >> (self.width - position)) & 1

    def __len__(self) -> int:
        return self.width

    def __iter__(self) -> Iterator[int]:
        return iter(self.bits)

    def __str__(self) -> str:
        return format(self.value, f"0{self.width}b")

    def __repr__(self) -> str:
        return f"BitString('{self}')"


def _check_widths(u: BitString, v: BitString) -> None:
    if u.width != v.width:
        raise DimensionError(f"width mismatch: {u.width} vs {v.width}")


def inner_product(u: BitString, v: BitString) -> int:
    """GF(2) inner product u1 v1 + ... + ur vr (mod 2)."""
    _check_widths(u, v)
    return (u.value & v.value).bit_count() & 1


def xor(u: BitString, v: BitString) -> BitString:
    _check_widths(u, v)
    return BitString(u.value ^ v.value, u.width)


@dataclass(frozen=True)
class Database:
    """Ordered sequence of ``ell`` items, each an ``r``-bit string.

    Items may repeat.
    """

    items: tuple[BitString, ...]

    def __post_init__(self):
        items = tuple(self.items)
        object.__setattr__(self, "items", items)
        if not items:
            raise FormatError("database must contain at least one item")
        r = items[0].width
        for k, item in enumerate(items, start=1):
            if item.width != r:
                raise FormatError(
                    f"item {k} has width {item.width}, expected {r}")
        if r > MAX_WIDTH:
            raise DimensionError(f"item width {r} exceeds maximum {MAX_WIDTH}")
        if len(items) > MAX_ITEMS:
            raise DimensionError(f"{len(items)} items exceeds maximum {MAX_ITEMS}")

    @classmethod
    def from_strings(cls, strings: Iterable[str]) -> "Database":
        return cls(tuple(BitString.from_str(s) for s in strings))

    @classmethod
    def from_values(cls, values: Iterable[int], r: int) -> "Database":
        return cls(tuple(BitString(v, r) for v in values))

    @property
    def ell(self) -> int:
        return len(self.items)

    @property
    def r(self) -> int:
        return self.items[0].width

    def item(self, index: int) -> BitString:
        """Item ``a^index`` with 1-based ``index``."""
        if not 1 <= index <= self.ell:
            raise RangeError(f"index {index} outside 1..{self.ell}")
        return self.items[index - 1]

    def to_text(self) -> str:
        return "".join(f"{item}\n" for item in self.items)

    def digest(self) -> str:
        """SHA-256 hex digest of the canonical text serialization."""
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()

    def __len__(self) -> int:
        return self.ell

    def __iter__(self) -> Iterator[BitString]:
        return iter(self.items)


def load_database(text: str) -> Database:
    """Parse newline-delimited bit strings (trailing newline optional)."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    lines = [line.rstrip("\r") for line in lines]
    if not lines:
        raise FormatError("empty database")
    width = None
    items = []
    for lineno, line in enumerate(lines, start=1):
        if not line:
            raise FormatError(f"line {lineno}: empty line")
        bad = set(line) - {"0", "1"}
        if bad:
            raise FormatError(
                f"line {lineno}: invalid characters {''.join(sorted(bad))!r}")
        if width is None:
            width = len(line)
        elif len(line) != width:
            raise FormatError(
                f"line {lineno}: width {len(line)} differs from {width} (ragged database)")
        items.append(BitString.from_str(line))
    return Database(tuple(items))


def read_database(path) -> Database:
    with open(path, encoding="utf-8") as fh:
        return load_database(fh.read())


@dataclass(frozen=True)
class RegisterLayout:
    """Qubit index bookkeeping for registers R, R' (r qubits each) and Q_1..Q_ell.

    R occupies qubits [0, r), R' occupies [r, 2r) and Q_k is qubit 2r + k - 1.
    """

    r: int
    ell: int

    def __post_init__(self):
        if self.r < 1 or self.ell < 1:
            raise DimensionError(f"layout needs r >= 1 and ell >= 1, got r={self.r}, ell={self.ell}")

    @classmethod
    def for_database(cls, db: Database) -> "RegisterLayout":
        return cls(db.r, db.ell)

    @property
    def total_qubits(self) -> int:
        return 2 * self.r + self.ell

    def q_qubit(self, k: int) -> int:
        if not 1 <= k <= self.ell:
            raise RangeError(f"Q register index {k} outside 1..{self.ell}")
        return 2 * self.r + k - 1

    def qubits(self, register: str) -> range:
        """Qubit indices of the named register: ``"R"``, ``"R'"`` or ``"Q<k>"``."""
        if register == "R":
            return range(0, self.r)
        if register == "R'":
            return range(self.r, 2 * self.r)
        if register.startswith("Q"):
            try:
                k = int(register[1:])
            except ValueError:
                raise RangeError(f"unknown register {register!r}") from None
            q = self.q_qubit(k)
            return range(q, q + 1)
        raise RangeError(f"unknown register {register!r}")

    def width(self, register: str) -> int:
        return len(self.qubits(register))

    def register_names(self) -> list[str]:
        return ["R", "R'"] + self.q_names()

    def q_names(self) -> list[str]:
        return [f"Q{k}" for k in range(1, self.ell + 1)]

    def check_qubit(self, qubit: int) -> None:
        if not 0 <= qubit < self.total_qubits:
            raise RangeError(f"qubit {qubit} outside 0..{self.total_qubits - 1}")

    def shift(self, qubit: int) -> int:
        """Bit position of ``qubit`` within a basis-state integer."""
        return self.total_qubits - 1 - qubit

    def encode(self, r_value: int, rp_value: int, q_value: int) -> int:
        """Basis integer from the R, R' contents and the Q_1..Q_ell bits
        (``q_value`` has Q_1 as its most significant bit)."""
        return (r_value << (self.r + self.ell)) | (rp_value << self.ell) | q_value

    def decode(self, basis: int) -> tuple[int, int, int]:
        q_value = basis & ((1 << self.ell) - 1)
        rp_value = (basis >> self.ell) & ((1 << self.r) - 1)
        r_value = basis >> (self.r + self.ell)
        return r_value, rp_value, q_value
