"""The three-message quantum PIR protocol with explicit server and user roles.

Registers never move physically.  A :class:`Channel` tracks which party holds
each register, refuses gates from a party lacking custody, and counts the
qubits of every hand-off.  The four ``step*`` functions each perform one slice
of :func:`run_session` so intermediate states can be inspected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from qpir import dense, sparse
from qpir.core import BitString, Database, RegisterLayout
from qpir.errors import CustodyError, ProtocolStateError, RangeError

PROTOCOL_VERSION = 1
SERVER = "server"
USER = "user"
BACKENDS = ("dense", "sparse")


class Fault(str, Enum):
    """Deliberate backend corruptions used as negative controls."""

    # the user's phase flip on Q_i is executed as a bit flip
    Z_AS_X = "z-as-x"
    # the server's preparation skips the copy of x into R'
    NO_COPY = "no-copy"


@dataclass(frozen=True)
class Backend:
    """Gate set of one simulator, optionally corrupted by a :class:`Fault`."""

    name: str
    fault: Fault | None = None

    def __post_init__(self):
        if self.name not in BACKENDS:
            raise ValueError(f"unknown backend {self.name!r}; choose from {BACKENDS}")
        if self.fault is not None:
            object.__setattr__(self, "fault", Fault(self.fault))

    @property
    def sim(self):
        return dense if self.name == "dense" else sparse

    def prepare_phi(self, db: Database):
        if self.fault is Fault.NO_COPY:
            return self.sim.prepare_phi_prime(db)
        return self.sim.prepare_phi(db)

    def prepare_phi_prime(self, db: Database):
        return self.sim.prepare_phi_prime(db)

    def z(self, state, qubit: int):
        if self.fault is Fault.Z_AS_X:
            return self.sim.apply_x(state, qubit)
        return self.sim.apply_z(state, qubit)

    def u_b(self, state, k: int, b: BitString):
        return self.sim.apply_u_b(state, k, b)

    def cnot(self, state, control: str = "R", target: str = "R'"):
        return self.sim.apply_cnot_reg(state, control, target)

    def qft(self, state, register: str = "R"):
        return self.sim.apply_qft(state, register)

    def measure(self, state, register: str = "R") -> dict[BitString, float]:
        return self.sim.measure_register(state, register)

    def partial_trace(self, state, traced: Iterable[str]):
        return self.sim.partial_trace(state, traced)

    def to_dense(self, state) -> dense.DenseState:
        return state if self.name == "dense" else sparse.to_dense(state)

    def term_count(self, state) -> int:
        if self.name == "sparse":
            return state.num_terms
        return len(state.nonzero())


def get_backend(backend: str | Backend, fault: Fault | str | None = None) -> Backend:
    if isinstance(backend, Backend):
        return backend if fault is None else Backend(backend.name, fault)
    return Backend(backend, fault)


@dataclass(frozen=True)
class Message:
    step: int
    direction: str
    registers: tuple[str, ...]
    qubit_count: int

    def to_dict(self) -> dict:
        return {"step": self.step, "direction": self.direction,
                "registers": list(self.registers), "qubit_count": self.qubit_count}


class Channel:
    """Register custody and qubit accounting between the two parties."""

    def __init__(self, layout: RegisterLayout, holder: str = SERVER):
        self.layout = layout
        self.custody = {name: holder for name in layout.register_names()}
        self.messages: list[Message] = []

    def require(self, party: str, registers: Iterable[str]) -> None:
        for name in registers:
            if self.custody[name] != party:
                raise CustodyError(
                    f"{party} applied a gate to {name}, held by {self.custody[name]}")

    def send(self, sender: str, receiver: str, registers: Sequence[str], step: int) -> Message:
        registers = tuple(registers)
        self.require(sender, registers)
        for name in registers:
            self.custody[name] = receiver
        msg = Message(step, f"{sender}->{receiver}", registers,
                      sum(self.layout.width(name) for name in registers))
        self.messages.append(msg)
        return msg

    @property
    def total_qubits(self) -> int:
        return sum(m.qubit_count for m in self.messages)


@dataclass
class Transcript:
    r: int
    ell: int
    index: int
    backend: str
    messages: list[Message]
    total_qubits: int
    output: BitString | None
    database_digest: str
    block_plan: dict | None = None

    def to_dict(self) -> dict:
        doc = {
            "protocol_version": PROTOCOL_VERSION,
            "r": self.r,
            "ell": self.ell,
            "index": self.index,
            "backend": self.backend,
            "messages": [m.to_dict() for m in self.messages],
            "total_qubits": self.total_qubits,
            "output": None if self.output is None else str(self.output),
            "database_digest": self.database_digest,
        }
        if self.block_plan is not None:
            doc["block_plan"] = dict(self.block_plan)
        return doc

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


@dataclass
class SessionResult:
    output: BitString
    distribution: dict[BitString, float]
    transcript: Transcript
    peak_terms: int = 0

    @property
    def probability(self) -> float:
        return self.distribution.get(self.output, 0.0)


@dataclass
class Session:
    """Mutable protocol run; advanced by the ``step*`` functions in order."""

    db: Database
    index: int
    backend: Backend
    seed: int = 0
    layout: RegisterLayout = field(init=False)
    channel: Channel = field(init=False)
    state: object = None
    stage: int = 0
    peak_terms: int = 0
    result: SessionResult | None = None

    def __post_init__(self):
        if not 1 <= self.index <= self.db.ell:
            raise RangeError(f"index {self.index} outside 1..{self.db.ell}")
        self.backend = get_backend(self.backend)
        self.layout = RegisterLayout.for_database(self.db)
        self.channel = Channel(self.layout)

    def _advance(self, expected: int) -> None:
        if self.stage != expected:
            raise ProtocolStateError(
                f"step {expected + 1} called while at stage {self.stage}")
        self.stage = expected + 1

    def _record(self, state) -> None:
        self.state = state
        count = self.backend.term_count(state)
        if self.backend.name == "sparse":
            count = max(count, state.peak_terms)
        self.peak_terms = max(self.peak_terms, count)
        if self.backend.fault is None and self.stage <= 3 and count > (1 << self.db.r):
            raise RuntimeError(
                f"honest-protocol term bound violated: {count} > 2^{self.db.r}")

    def transcript(self) -> Transcript:
        output = self.result.output if self.result else None
        return Transcript(self.db.r, self.db.ell, self.index, self.backend.name,
                          list(self.channel.messages), self.channel.total_qubits,
                          output, self.db.digest())


def start_session(db: Database, index: int, backend: str | Backend = "sparse",
                  seed: int = 0, fault: Fault | str | None = None) -> Session:
    return Session(db, index, get_backend(backend, fault), seed)


def step1_server_prepare(session: Session, cheat: bool = False) -> Message:
    """Server prepares |Phi_A> (or |Phi'_A> when ``cheat``) and sends R', Q_1..Q_ell."""
    session._advance(0)
    ch = session.channel
    ch.require(SERVER, session.layout.register_names())
    be = session.backend
    state = be.prepare_phi_prime(session.db) if cheat else be.prepare_phi(session.db)
    session._record(state)
    return ch.send(SERVER, USER, ["R'", *session.layout.q_names()], step=1)


def step2_user_phase(session: Session) -> Message:
    """User applies Z on Q_i and returns Q_1..Q_ell."""
    session._advance(1)
    ch, layout = session.channel, session.layout
    target = f"Q{session.index}"
    ch.require(USER, [target])
    session._record(session.backend.z(session.state, layout.q_qubit(session.index)))
    return ch.send(USER, SERVER, layout.q_names(), step=2)


def step3_server_uncompute(session: Session, order: Iterable[int] | None = None) -> Message:
    """Server applies U_{a^k} on (R, Q_k) for every k, then sends R."""
    session._advance(2)
    ch, be = session.channel, session.backend
    state = session.state
    for k in (range(1, session.db.ell + 1) if order is None else order):
        ch.require(SERVER, ["R", f"Q{k}"])
        state = be.u_b(state, k, session.db.item(k))
    session._record(state)
    return ch.send(SERVER, USER, ["R"], step=3)


def step4_user_decode(session: Session) -> SessionResult:
    """User applies CNOT(R, R'), QFT on R and measures R."""
    session._advance(3)
    ch, be = session.channel, session.backend
    ch.require(USER, ["R", "R'"])
    state = be.cnot(session.state, "R", "R'")
    session._record(state)
    state = be.qft(state, "R")
    session._record(state)
    distribution = be.measure(state, "R")
    output = dense.sample(distribution, session.seed)
    session.result = SessionResult(output, distribution, None, session.peak_terms)
    session.result.transcript = session.transcript()
    return session.result


def run_session(db: Database, index: int, backend: str | Backend = "sparse",
                seed: int = 0, fault: Fault | str | None = None) -> SessionResult:
    """Run all four steps and return the user's output with the transcript."""
    session = start_session(db, index, backend, seed, fault)
    step1_server_prepare(session)
    step2_user_phase(session)
    step3_server_uncompute(session)
    return step4_user_decode(session)


def expected_qubits(ell: int, r: int) -> int:
    return 2 * ell + 2 * r


def classical_baseline_cost(ell: int, r: int) -> int:
    """Bits sent by the trivial classical protocol (download everything)."""
    if ell < 1 or r < 1:
        raise ValueError("ell and r must be positive")
    return ell * r
