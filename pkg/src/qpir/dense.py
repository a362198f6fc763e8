"""Brute-force statevector simulator over all 2**(2r + ell) amplitudes.

Used as the reference oracle for :mod:`qpir.sparse` and for small-scale
density-matrix work.  Gates return new states and never mutate their input.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from qpir.core import BitString, Database, RegisterLayout
from qpir.density import DensityMatrix
from qpir.errors import CapacityError, DimensionError, RangeError

DEFAULT_DENSE_CAP = 22
DEFAULT_MATRIX_CAP = 1 << 14
# Amplitudes below this magnitude are reported as zero by measurements/dumps.
ZERO_TOL = 1e-12


def dense_qubit_cap() -> int:
    """Dense qubit cap, overridable through ``QPIR_DENSE_CAP``."""
    value = os.environ.get("QPIR_DENSE_CAP")
    if value is None:
        return DEFAULT_DENSE_CAP
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"QPIR_DENSE_CAP must be an integer, got {value!r}") from None


def check_dense_capacity(layout: RegisterLayout, cap: int | None = None) -> None:
    cap = dense_qubit_cap() if cap is None else cap
    if layout.total_qubits > cap:
        raise CapacityError(
            f"{layout.total_qubits} qubits exceeds the dense cap of {cap}; "
            "use the sparse backend")


@dataclass(frozen=True, eq=False)
class DenseState:
    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (1 << self.layout.total_qubits,):
            raise DimensionError(
                f"expected {1 << self.layout.total_qubits} amplitudes, "
                f"got shape {self.amplitudes.shape}")

    @property
    def num_qubits(self) -> int:
        return self.layout.total_qubits

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def nonzero(self) -> dict[int, complex]:
        idx = np.flatnonzero(np.abs(self.amplitudes) > ZERO_TOL)
        return {int(i): complex(self.amplitudes[i]) for i in idx}

    def _with(self, amplitudes: np.ndarray) -> "DenseState":
        return DenseState(self.layout, amplitudes)


def basis_state(layout: RegisterLayout, basis: int) -> DenseState:
    check_dense_capacity(layout)
    amps = np.zeros(1 << layout.total_qubits, dtype=complex)
    amps[basis] = 1.0
    return DenseState(layout, amps)


def from_amplitudes(layout: RegisterLayout, amplitudes: Iterable[complex]) -> DenseState:
    return DenseState(layout, np.asarray(list(amplitudes), dtype=complex))


def _prepare(db: Database, copy_to_rprime: bool) -> DenseState:
    layout = RegisterLayout.for_database(db)
    check_dense_capacity(layout)
    r, ell = db.r, db.ell
    x = np.arange(1 << r, dtype=np.int64)
    q = np.zeros_like(x)
    for item in db.items:
        q = (q << 1) | (np.bitwise_count(x & item.value).astype(np.int64) & 1)
    rp = x if copy_to_rprime else np.zeros_like(x)
    basis = (x << (r + ell)) | (rp << ell) | q
    amps = np.zeros(1 << layout.total_qubits, dtype=complex)
    amps[basis] = 1.0 / np.sqrt(1 << r)
    return DenseState(layout, amps)


def prepare_phi(db: Database) -> DenseState:
    """(1/sqrt 2^r) sum_x |x>_R |x>_R' |x.a^1> ... |x.a^ell>."""
    return _prepare(db, copy_to_rprime=True)


def prepare_phi_prime(db: Database) -> DenseState:
    """Like :func:`prepare_phi` but with R' left in |0...0>."""
    return _prepare(db, copy_to_rprime=False)


def _split(state: DenseState, qubit: int) -> np.ndarray:
    state.layout.check_qubit(qubit)
    return state.amplitudes.reshape(1 << qubit, 2, -1)


def apply_z(state: DenseState, qubit: int) -> DenseState:
    out = _split(state, qubit).copy()
    out[:, 1, :] *= -1
    return state._with(out.reshape(-1))


def apply_x(state: DenseState, qubit: int) -> DenseState:
    """Bit flip.  Not part of the protocol; used only for fault injection."""
    out = _split(state, qubit)[:, ::-1, :].copy()
    return state._with(out.reshape(-1))


def apply_hadamard(state: DenseState, qubit: int) -> DenseState:
    view = _split(state, qubit)
    out = np.empty_like(view)
    out[:, 0, :] = (view[:, 0, :] + view[:, 1, :]) / np.sqrt(2)
    out[:, 1, :] = (view[:, 0, :] - view[:, 1, :]) / np.sqrt(2)
    return state._with(out.reshape(-1))


def apply_qft(state: DenseState, register: str = "R") -> DenseState:
    """Walsh-Hadamard transform on a register, one butterfly per qubit."""
    for qubit in state.layout.qubits(register):
        state = apply_hadamard(state, qubit)
    return state


def _register_field(layout: RegisterLayout, register: str) -> tuple[int, int]:
    """(low bit position, mask) of a register within basis integers."""
    qubits = layout.qubits(register)
    low = layout.shift(qubits[-1])
    return low, (1 << len(qubits)) - 1


def _permute(state: DenseState, new_index: np.ndarray) -> DenseState:
    out = np.empty_like(state.amplitudes)
    out[new_index] = state.amplitudes
    return state._with(out)


def apply_cnot_reg(state: DenseState, control: str = "R", target: str = "R'") -> DenseState:
    """|y>_control |z>_target -> |y>_control |z xor y>_target."""
    layout = state.layout
    c_low, c_mask = _register_field(layout, control)
    t_low, t_mask = _register_field(layout, target)
    if c_mask != t_mask:
        raise DimensionError(f"registers {control} and {target} differ in width")
    if set(layout.qubits(control)) & set(layout.qubits(target)):
        raise RangeError("control and target registers overlap")
    idx = np.arange(state.amplitudes.size, dtype=np.int64)
    y = (idx >> c_low) & c_mask
    return _permute(state, idx ^ (y << t_low))


def apply_u_b(state: DenseState, k: int, b: BitString, control: str = "R") -> DenseState:
    """|y>_control |z>_{Q_k} -> |y>_control |z xor b.y>_{Q_k}."""
    layout = state.layout
    c_low, c_mask = _register_field(layout, control)
    if b.width != c_mask.bit_length():
        raise DimensionError(f"b has width {b.width}, register {control} has {c_mask.bit_length()}")
    q_shift = layout.shift(layout.q_qubit(k))
    idx = np.arange(state.amplitudes.size, dtype=np.int64)
    parity = np.bitwise_count(((idx >> c_low) & c_mask) & b.value).astype(np.int64) & 1
    return _permute(state, idx ^ (parity << q_shift))


def measure_register(state: DenseState, register: str = "R") -> dict[BitString, float]:
    """Exact outcome distribution of a computational-basis measurement.

    Outcomes with probability below ``ZERO_TOL**2`` are omitted; the state is
    not modified.
    """
    qubits = state.layout.qubits(register)
    probs = np.abs(state.amplitudes) ** 2
    probs = probs.reshape(1 << qubits[0], 1 << len(qubits), -1).sum(axis=(0, 2))
    return {BitString(int(v), len(qubits)): float(probs[v])
            for v in np.flatnonzero(probs > ZERO_TOL ** 2)}


def sample(distribution: dict[BitString, float], seed: int = 0) -> BitString:
    """Draw one outcome reproducibly (numpy PCG64 seeded with ``seed``)."""
    outcomes = sorted(distribution)
    weights = np.array([distribution[o] for o in outcomes], dtype=float)
    rng = np.random.default_rng(seed)
    return outcomes[int(rng.choice(len(outcomes), p=weights / weights.sum()))]


def partial_trace(state: DenseState, traced: Iterable[str],
                  matrix_cap: int = DEFAULT_MATRIX_CAP) -> DensityMatrix:
    """Reduced density matrix of the registers not listed in ``traced``.

    Kept qubits retain their layout order, so a kept basis label is the
    concatenation of the kept registers' contents.
    """
    layout = state.layout
    traced = list(dict.fromkeys(traced))
    traced_qubits = sorted({q for name in traced for q in layout.qubits(name)})
    kept_qubits = [q for q in range(layout.total_qubits) if q not in set(traced_qubits)]
    dim = 1 << len(kept_qubits)
    if dim > matrix_cap:
        raise CapacityError(f"kept dimension {dim} exceeds the matrix cap {matrix_cap}")
    n = layout.total_qubits
    psi = state.amplitudes.reshape([2] * n).transpose(kept_qubits + traced_qubits)
    m = psi.reshape(dim, -1)
    kept_names = tuple(name for name in layout.register_names() if name not in traced)
    return DensityMatrix(m @ m.conj().T, kept_names)


def dump_state(state) -> str:
    """``basis_index amplitude_re amplitude_im`` per nonzero term, sorted."""
    return "".join(f"{basis} {amp.real:.17g} {amp.imag:.17g}\n"
                   for basis, amp in sorted(state.nonzero().items()))


def parse_dump(text: str) -> dict[int, complex]:
    terms = {}
    for line in text.splitlines():
        if line.strip():
            basis, re_, im = line.split()
            terms[int(basis)] = complex(float(re_), float(im))
    return terms
