"""Privacy verification and the cheating-server attack."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from qpir import dense
from qpir.core import BitString, Database
from qpir.density import EIGEN_CAP, DensityMatrix, DiagonalDensityMatrix
from qpir.errors import CapacityError, DimensionError
from qpir.protocol import (SERVER, Backend, Fault, get_backend, run_session, start_session,
                           step1_server_prepare, step2_user_phase)

TOL = 1e-9


@dataclass
class PrivacyReport:
    database_digest: str
    pairs: list[tuple[int, int, float]]
    max_distance: float
    method: str

    def passed(self, tol: float = TOL) -> bool:
        return self.max_distance <= tol

    def to_dict(self) -> dict:
        return {
            "database_digest": self.database_digest,
            "pairs": [{"i": i, "j": j, "trace_distance": d} for i, j, d in self.pairs],
            "max_distance": self.max_distance,
            "method": self.method,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


@dataclass
class AttackResult:
    true_index: int
    recovered_item: BitString
    candidate_indices: list[int]
    success: bool
    item_probability: float

    def to_dict(self) -> dict:
        return {
            "true_index": self.true_index,
            "recovered_item": str(self.recovered_item),
            "candidate_indices": list(self.candidate_indices),
            "success": self.success,
            "item_probability": self.item_probability,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def server_view(db: Database, index: int, backend: str | Backend = "sparse",
                fault: Fault | str | None = None, cheat: bool = False):
    """Reduced state on (R, Q_1..Q_ell) after Step 2, i.e. R' traced out.

    On the sparse backend an honest run yields a :class:`DiagonalDensityMatrix`.
    ``cheat`` swaps the server's preparation for |Phi'_A>.
    """
    session = start_session(db, index, backend, fault=fault)
    step1_server_prepare(session, cheat=cheat)
    step2_user_phase(session)
    return session.backend.partial_trace(session.state, ["R'"])


def trace_distance(rho1, rho2) -> float:
    """Half the trace norm of ``rho1 - rho2``.

    Two diagonal inputs use the total-variation fast path; anything else is
    diagonalized, up to dimension ``EIGEN_CAP``.
    """
    if rho1.dim != rho2.dim:
        raise DimensionError(f"dimension mismatch: {rho1.dim} vs {rho2.dim}")
    if rho1.is_diagonal and rho2.is_diagonal:
        p, q = rho1.probs, rho2.probs
        d = 0.5 * sum(abs(p.get(x, 0.0) - q.get(x, 0.0)) for x in p.keys() | q.keys())
    else:
        if rho1.dim > EIGEN_CAP:
            raise CapacityError(
                f"dimension {rho1.dim} exceeds the eigendecomposition cap {EIGEN_CAP}")
        eig = np.linalg.eigvalsh(rho1.to_matrix() - rho2.to_matrix())
        d = 0.5 * float(np.sum(np.abs(eig)))
    return min(max(d, 0.0), 1.0)


def verify_privacy(db: Database, backend: str | Backend = "sparse",
                   fault: Fault | str | None = None, cheat: bool = False) -> PrivacyReport:
    """Pairwise trace distances between the server views for all indices."""
    views = [server_view(db, i, backend, fault, cheat) for i in range(1, db.ell + 1)]
    diagonal = all(v.is_diagonal for v in views)
    if diagonal:
        pairs = _diagonal_pairs(views)
    else:
        pairs = [(i, j, trace_distance(views[i - 1], views[j - 1]))
                 for i, j in itertools.combinations(range(1, db.ell + 1), 2)]
    return PrivacyReport(db.digest(), pairs, max((d for *_, d in pairs), default=0.0),
                         "exact-diagonal" if diagonal else "dense-eigen")


def _diagonal_pairs(views) -> list[tuple[int, int, float]]:
    """Total-variation distances of all view pairs on a shared label axis."""
    labels = sorted(set().union(*(v.probs for v in views)))
    column = {label: c for c, label in enumerate(labels)}
    table = np.zeros((len(views), len(labels)))
    for row, v in enumerate(views):
        for label, p in v.probs.items():
            table[row, column[label]] = p
    pairs = []
    for a in range(len(views) - 1):
        dists = 0.5 * np.abs(table[a + 1:] - table[a]).sum(axis=1)
        pairs.extend((a + 1, b + 1, min(float(d), 1.0))
                     for b, d in enumerate(dists, start=a + 1))
    return pairs


def view_spread(views) -> float:
    """Largest entrywise deviation of any view from the first one."""
    first = views[0]
    worst = 0.0
    for v in views[1:]:
        if first.is_diagonal and v.is_diagonal:
            keys = first.probs.keys() | v.probs.keys()
            dev = max((abs(first.probs.get(x, 0.0) - v.probs.get(x, 0.0)) for x in keys),
                      default=0.0)
        else:
            dev = float(np.max(np.abs(first.to_matrix() - v.to_matrix())))
        worst = max(worst, dev)
    return worst


def run_attack(db: Database, index: int, backend: str | Backend = "dense",
               seed: int = 0) -> AttackResult:
    """Cheating server prepares |Phi'_A> and learns a^i at Step 3.

    After the honest user's phase flip, the server uncomputes every Q_k with
    U_{a^k}, applies the QFT to R (which it never sent) and measures it.
    """
    session = start_session(db, index, backend, seed)
    step1_server_prepare(session, cheat=True)
    step2_user_phase(session)
    be, ch = session.backend, session.channel
    state = session.state
    for k in range(1, db.ell + 1):
        ch.require(SERVER, ["R", f"Q{k}"])
        state = be.u_b(state, k, db.item(k))
    ch.require(SERVER, ["R"])
    state = be.qft(state, "R")
    distribution = be.measure(state, "R")
    recovered = dense.sample(distribution, seed)
    candidates = [k for k, item in enumerate(db.items, start=1) if item == recovered]
    return AttackResult(index, recovered, candidates, candidates == [index],
                        distribution.get(recovered, 0.0))


def all_databases(r: int, ell: int) -> Iterator[Database]:
    """Every database of ``ell`` items of width ``r``."""
    for values in itertools.product(range(1 << r), repeat=ell):
        yield Database.from_values(values, r)


def exhaustive_databases(r_max: int, ell_max: int) -> Iterator[Database]:
    for r in range(1, r_max + 1):
        for ell in range(1, ell_max + 1):
            yield from all_databases(r, ell)


def random_database(rng: np.random.Generator, ell: int, r: int,
                    distinct: bool = False) -> Database:
    if distinct:
        if ell > (1 << r):
            raise ValueError(f"cannot draw {ell} distinct items of width {r}")
        values = rng.choice(1 << r, size=ell, replace=False)
    else:
        values = rng.integers(0, 1 << r, size=ell)
    return Database.from_values((int(v) for v in values), r)


@dataclass
class VerificationReport:
    """Correctness of every index plus privacy, for a set of databases."""

    databases: int = 0
    sessions: int = 0
    failures: list[dict] = field(default_factory=list)
    min_probability: float = 1.0
    max_distance: float = 0.0
    methods: set[str] = field(default_factory=set)

    @property
    def correct(self) -> bool:
        return not any(f["kind"] == "correctness" for f in self.failures)

    @property
    def private(self) -> bool:
        return self.max_distance <= TOL

    @property
    def passed(self) -> bool:
        return self.correct and self.private

    def to_dict(self) -> dict:
        return {
            "databases": self.databases,
            "sessions": self.sessions,
            "min_probability": self.min_probability,
            "max_trace_distance": self.max_distance,
            "methods": sorted(self.methods),
            "correct": self.correct,
            "private": self.private,
            "passed": self.passed,
            "failures": self.failures,
        }


def verify_database(db: Database, backend: str | Backend = "sparse",
                    fault: Fault | str | None = None,
                    report: VerificationReport | None = None) -> VerificationReport:
    report = VerificationReport() if report is None else report
    be = get_backend(backend, fault)
    report.databases += 1
    for i in range(1, db.ell + 1):
        result = run_session(db, i, be)
        p = result.distribution.get(db.item(i), 0.0)
        report.sessions += 1
        report.min_probability = min(report.min_probability, p)
        if p < 1 - TOL or result.output != db.item(i):
            report.failures.append({"kind": "correctness", "database": db.digest(),
                                    "index": i, "expected": str(db.item(i)),
                                    "output": str(result.output), "probability": p})
    if db.ell >= 2:
        privacy = verify_privacy(db, be)
        report.methods.add(privacy.method)
        report.max_distance = max(report.max_distance, privacy.max_distance)
        if not privacy.passed():
            report.failures.append({"kind": "privacy", "database": db.digest(),
                                    "max_distance": privacy.max_distance})
    return report


def verify_exhaustive(r_max: int, ell_max: int, backend: str | Backend = "sparse",
                      fault: Fault | str | None = None) -> VerificationReport:
    report = VerificationReport()
    for db in exhaustive_databases(r_max, ell_max):
        verify_database(db, backend, fault, report)
    return report
