"""Sparse statevector engine for the protocol's register system.

A :class:`SparseState` keeps only the nonzero terms.  Labels are stored
column-wise: the contents of ``R`` and ``R'`` as integers and the ``Q``
qubits packed into 64-bit words (``Q_k`` sits in word ``(k-1)//64`` at bit
``63 - (k-1) % 64``).  Together these form a fixed-width label of
``2r + ell`` bits, so ``ell`` may be far larger than 64.  Each label occurs
at most once.

The basis integer of a term (see :mod:`qpir.core`) is only materialized for
dumps, diagonal density matrices and conversion to :class:`DenseState`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from qpir import dense
from qpir.core import BitString, Database, RegisterLayout
from qpir.density import DensityMatrix, DiagonalDensityMatrix
from qpir.errors import CapacityError, DimensionError, RangeError

PRUNE_THRESHOLD = 1e-12
DEFAULT_TERM_BUDGET = 1 << 22
MAX_R = 24
MAX_ELL = 1 << 20

_ONE = np.uint64(1)


def _words(ell: int) -> int:
    return (ell + 63) // 64


def _q_position(k: int) -> tuple[int, np.uint64]:
    return (k - 1) // 64, np.uint64(63 - (k - 1) % 64)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SparseState:
    """Immutable sparse pure state.

    ``peak_terms`` is the largest term count seen by this state or any state
    it was derived from, including intermediate QFT stages.
    """

    layout: RegisterLayout
    r_vals: np.ndarray
    rp_vals: np.ndarray
    q_words: tuple[np.ndarray, ...]
    amps: np.ndarray
    peak_terms: int = 0

    def __post_init__(self):
        n = self.amps.shape[0]
        if len(self.q_words) != _words(self.layout.ell):
            raise DimensionError("wrong number of Q words for the layout")
        if self.r_vals.shape != (n,) or self.rp_vals.shape != (n,) or any(
                w.shape != (n,) for w in self.q_words):
            raise DimensionError("label columns and amplitudes differ in length")
        for a in (self.r_vals, self.rp_vals, self.amps, *self.q_words):
            _frozen(a)
        if self.peak_terms < n:
            object.__setattr__(self, "peak_terms", n)

    @property
    def num_terms(self) -> int:
        return self.amps.shape[0]

    def __len__(self) -> int:
        return self.num_terms

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def _replace(self, **changes) -> "SparseState":
        fields = dict(layout=self.layout, r_vals=self.r_vals, rp_vals=self.rp_vals,
                      q_words=self.q_words, amps=self.amps, peak_terms=self.peak_terms)
        fields.update(changes)
        return SparseState(**fields)

    def q_ints(self) -> list[int]:
        """Q_1..Q_ell contents of each term as an integer (Q_1 most significant)."""
        n, w = self.num_terms, len(self.q_words)
        if n == 0:
            return []
        stacked = np.stack(self.q_words, axis=1).astype(">u8").view(np.uint8).reshape(n, 8 * w)
        pad = 64 * w - self.layout.ell
        return [int.from_bytes(row.tobytes(), "big") >> pad for row in stacked]

    def labels(self) -> list[int]:
        """Basis integers of the terms, in storage order."""
        enc = self.layout.encode
        return [enc(int(a), int(b), q)
                for a, b, q in zip(self.r_vals, self.rp_vals, self.q_ints())]

    def nonzero(self) -> dict[int, complex]:
        """Terms as ``{basis_integer: amplitude}`` sorted by basis integer."""
        pairs = sorted(zip(self.labels(), (complex(a) for a in self.amps)))
        return dict(pairs)

    terms = nonzero


def _check_sparse_capacity(layout: RegisterLayout) -> None:
    if layout.r > MAX_R:
        raise CapacityError(f"r={layout.r} exceeds the sparse limit of {MAX_R}")
    if layout.ell > MAX_ELL:
        raise CapacityError(f"ell={layout.ell} exceeds the sparse limit of {MAX_ELL}")


def _inner_parities(x: np.ndarray, b: int) -> np.ndarray:
    return np.bitwise_count(x & np.int64(b)).astype(np.uint64) & _ONE


def _prepare(db: Database, copy_to_rprime: bool) -> SparseState:
    layout = RegisterLayout.for_database(db)
    _check_sparse_capacity(layout)
    x = np.arange(1 << db.r, dtype=np.int64)
    words = [np.zeros(x.shape, dtype=np.uint64) for _ in range(_words(db.ell))]
    for k, item in enumerate(db.items, start=1):
        w, bit = _q_position(k)
        words[w] |= _inner_parities(x, item.value) << bit
    rp = x.copy() if copy_to_rprime else np.zeros_like(x)
    amps = np.full(x.shape, 1.0 / np.sqrt(1 << db.r), dtype=complex)
    return SparseState(layout, x, rp, tuple(words), amps)


def prepare_phi(db: Database) -> SparseState:
    return _prepare(db, copy_to_rprime=True)


def prepare_phi_prime(db: Database) -> SparseState:
    return _prepare(db, copy_to_rprime=False)


def from_terms(layout: RegisterLayout, terms: dict[int, complex]) -> SparseState:
    """Build a state from ``{basis_integer: amplitude}`` (zero entries dropped)."""
    items = [(basis, complex(a)) for basis, a in sorted(terms.items())
             if abs(a) > PRUNE_THRESHOLD]
    n = len(items)
    r_vals = np.zeros(n, dtype=np.int64)
    rp_vals = np.zeros(n, dtype=np.int64)
    words = [np.zeros(n, dtype=np.uint64) for _ in range(_words(layout.ell))]
    for t, (basis, _) in enumerate(items):
        if not 0 <= basis < (1 << layout.total_qubits):
            raise RangeError(f"basis label {basis} outside the layout")
        r_val, rp_val, q_val = layout.decode(basis)
        r_vals[t], rp_vals[t] = r_val, rp_val
        for k in range(1, layout.ell + 1):
            if (q_val >> (layout.ell - k)) & 1:
                w, bit = _q_position(k)
                words[w][t] |= _ONE << bit
    amps = np.array([a for _, a in items], dtype=complex)
    return SparseState(layout, r_vals, rp_vals, tuple(words), amps)


def from_dense(state: dense.DenseState) -> SparseState:
    return from_terms(state.layout, state.nonzero())


def to_dense(state: SparseState) -> dense.DenseState:
    dense.check_dense_capacity(state.layout)
    amps = np.zeros(1 << state.layout.total_qubits, dtype=complex)
    for basis, a in zip(state.labels(), state.amps):
        amps[basis] = a
    return dense.DenseState(state.layout, amps)


def _locate(layout: RegisterLayout, qubit: int) -> tuple[str, int]:
    """Register column holding ``qubit`` and the bit position inside it."""
    layout.check_qubit(qubit)
    if qubit < layout.r:
        return "R", layout.r - 1 - qubit
    if qubit < 2 * layout.r:
        return "R'", 2 * layout.r - 1 - qubit
    return "Q", qubit - 2 * layout.r + 1


def _qubit_bits(state: SparseState, qubit: int) -> np.ndarray:
    where, pos = _locate(state.layout, qubit)
    if where == "R":
        return (state.r_vals >> pos) & 1
    if where == "R'":
        return (state.rp_vals >> pos) & 1
    w, bit = _q_position(pos)
    return ((state.q_words[w] >> bit) & _ONE).astype(np.int64)


def apply_z(state: SparseState, qubit: int) -> SparseState:
    """Negate amplitudes whose label has a 1 at ``qubit``; labels untouched."""
    sign = 1 - 2 * _qubit_bits(state, qubit)
    return state._replace(amps=state.amps * sign)


def apply_x(state: SparseState, qubit: int) -> SparseState:
    """Bit flip.  Not part of the protocol; used only for fault injection."""
    where, pos = _locate(state.layout, qubit)
    if where == "R":
        return state._replace(r_vals=state.r_vals ^ (1 << pos))
    if where == "R'":
        return state._replace(rp_vals=state.rp_vals ^ (1 << pos))
    w, bit = _q_position(pos)
    words = list(state.q_words)
    words[w] = words[w] ^ (_ONE << bit)
    return state._replace(q_words=tuple(words))


def _reg_column(state: SparseState, register: str) -> np.ndarray:
    if register == "R":
        return state.r_vals
    if register == "R'":
        return state.rp_vals
    raise RangeError(f"register {register!r} is not an r-qubit register")


def apply_cnot_reg(state: SparseState, control: str = "R", target: str = "R'") -> SparseState:
    """|y>|z> -> |y>|z xor y> between the two r-qubit registers."""
    if {control, target} != {"R", "R'"}:
        raise RangeError("sparse CNOT acts between R and R' only")
    y = _reg_column(state, control)
    z = _reg_column(state, target)
    key = "rp_vals" if target == "R'" else "r_vals"
    return state._replace(**{key: z ^ y})


def apply_u_b(state: SparseState, k: int, b: BitString, control: str = "R") -> SparseState:
    """Flip ``Q_k`` on every term where ``b . y = 1`` (``y`` = control contents)."""
    if b.width != state.layout.r:
        raise DimensionError(f"b has width {b.width}, register {control} has {state.layout.r}")
    state.layout.q_qubit(k)
    y = _reg_column(state, control)
    w, bit = _q_position(k)
    words = list(state.q_words)
    words[w] = words[w] ^ (_inner_parities(y, b.value) << bit)
    return state._replace(q_words=tuple(words))


def _row_ids(columns: list[np.ndarray], n: int) -> tuple[np.ndarray, np.ndarray]:
    """Compact ids for the distinct rows of the given columns.

    Returns ``(ids, first)`` where ``first[id]`` is a row holding that id.
    """
    if not columns:
        return np.zeros(n, dtype=np.int64), np.zeros(min(n, 1), dtype=np.int64)
    table = np.stack([c.astype(np.uint64) for c in columns], axis=1)
    _, first, ids = np.unique(table, axis=0, return_index=True, return_inverse=True)
    return ids.reshape(-1).astype(np.int64), first


def apply_qft(state: SparseState, register: str = "R",
              term_budget: int = DEFAULT_TERM_BUDGET) -> SparseState:
    """Hadamard on each qubit of ``register`` with amplitude accumulation.

    Terms whose accumulated magnitude is at most ``PRUNE_THRESHOLD`` are
    dropped after every qubit.
    """
    width = state.layout.width(register)
    if register not in ("R", "R'"):
        raise RangeError(f"QFT acts on R or R', not {register!r}")
    reg = _reg_column(state, register)
    other = state.rp_vals if register == "R" else state.r_vals
    rest_ids, rest_first = _row_ids([other, *state.q_words], state.num_terms)
    keys = (rest_ids << width) | reg
    amps = np.asarray(state.amps)
    peak = state.peak_terms
    inv_sqrt2 = 1 / np.sqrt(2)
    for pos in reversed(range(width)):
        mask = np.int64(1 << pos)
        sign = 1 - 2 * ((keys >> pos) & 1)
        both = np.concatenate([keys & ~mask, keys | mask])
        contrib = np.concatenate([amps, amps * sign]) * inv_sqrt2
        keys, inverse = np.unique(both, return_inverse=True)
        acc = (np.bincount(inverse, weights=contrib.real, minlength=keys.size)
               + 1j * np.bincount(inverse, weights=contrib.imag, minlength=keys.size))
        keep = np.abs(acc) > PRUNE_THRESHOLD
        keys, amps = keys[keep], acc[keep]
        if keys.size > term_budget:
            raise CapacityError(
                f"QFT produced {keys.size} terms, above the budget of {term_budget}; "
                "use the dense backend")
        peak = max(peak, int(keys.size))
    norm = np.linalg.norm(amps)
    if abs(norm - 1) > 1e-12 and norm > 0:
        amps = amps / norm
    rows = rest_first[keys >> width] if keys.size else np.zeros(0, dtype=np.int64)
    new_reg = keys & ((1 << width) - 1)
    new_other = other[rows]
    fields = {"r_vals": new_reg, "rp_vals": new_other} if register == "R" else \
        {"r_vals": new_other, "rp_vals": new_reg}
    return state._replace(q_words=tuple(w[rows] for w in state.q_words),
                          amps=np.asarray(amps, dtype=complex), peak_terms=peak, **fields)


def _register_values(state: SparseState, register: str) -> np.ndarray:
    if register in ("R", "R'"):
        return _reg_column(state, register)
    return _qubit_bits(state, state.layout.qubits(register)[0])


def measure_register(state: SparseState, register: str = "R") -> dict[BitString, float]:
    """Exact marginal distribution of ``register``; the state is not modified."""
    width = state.layout.width(register)
    values = _register_values(state, register)
    outcomes, inverse = np.unique(values, return_inverse=True)
    probs = np.bincount(inverse.reshape(-1), weights=np.abs(state.amps) ** 2,
                        minlength=outcomes.size)
    return {BitString(int(v), width): float(p)
            for v, p in zip(outcomes, probs) if p > PRUNE_THRESHOLD ** 2}


def _label_columns(state: SparseState, registers: list[str]) -> list[np.ndarray]:
    cols = []
    if "R" in registers:
        cols.append(state.r_vals)
    if "R'" in registers:
        cols.append(state.rp_vals)
    q_names = [name for name in registers if name.startswith("Q")]
    if len(q_names) == state.layout.ell:
        cols.extend(state.q_words)
    else:
        cols.extend(_register_values(state, name) for name in q_names)
    return cols


def _label_ints(state: SparseState, registers: list[str], rows: np.ndarray) -> list[int]:
    """Concatenated basis labels of ``registers`` (layout order) for ``rows``."""
    layout = state.layout
    all_q = [name for name in registers if name.startswith("Q")]
    q_ints = state.q_ints() if all_q else None
    labels = []
    for t in rows:
        label = 0
        if "R" in registers:
            label = int(state.r_vals[t])
        if "R'" in registers:
            label = (label << layout.r) | int(state.rp_vals[t])
        if len(all_q) == layout.ell:
            label = (label << layout.ell) | q_ints[t]
        else:
            for name in all_q:
                k = int(name[1:])
                label = (label << 1) | ((q_ints[t] >> (layout.ell - k)) & 1)
        labels.append(label)
    return labels


def partial_trace(state: SparseState, traced: Iterable[str],
                  matrix_cap: int = dense.DEFAULT_MATRIX_CAP):
    """Reduced state of the registers not in ``traced``.

    When every term has a distinct label on the traced registers the reduced
    state is diagonal and is returned as a :class:`DiagonalDensityMatrix`
    without any size limit.  Otherwise a dense :class:`DensityMatrix` is
    built, provided the kept dimension is within ``matrix_cap``.
    """
    layout = state.layout
    traced = list(dict.fromkeys(traced))
    for name in traced:
        layout.qubits(name)
    kept = [name for name in layout.register_names() if name not in traced]
    kept_width = sum(layout.width(name) for name in kept)
    n = state.num_terms
    traced_ids, _ = _row_ids(_label_columns(state, traced), n)
    kept_ids, kept_first = _row_ids(_label_columns(state, kept), n)
    weights = np.abs(state.amps) ** 2

    if np.unique(traced_ids).size == n:
        probs = np.bincount(kept_ids, weights=weights, minlength=kept_first.size)
        labels = _label_ints(state, kept, kept_first)
        return DiagonalDensityMatrix(
            {label: float(p) for label, p in zip(labels, probs)},
            1 << kept_width, tuple(kept))

    dim = 1 << kept_width
    if dim > matrix_cap:
        raise CapacityError(
            f"kept dimension {dim} exceeds the matrix cap {matrix_cap} and the "
            "traced registers do not separate terms")
    labels = np.array(_label_ints(state, kept, kept_first), dtype=np.int64)
    t_unique, t_inverse = np.unique(traced_ids, return_inverse=True)
    m = np.zeros((dim, t_unique.size), dtype=complex)
    np.add.at(m, (labels[kept_ids], t_inverse.reshape(-1)), state.amps)
    return DensityMatrix(m @ m.conj().T, tuple(kept))
