"""Independent oracles built from bit-string manipulation and explicit matrices.

Nothing here calls into the simulators; basis states are addressed by
concatenating the textual register contents R + R' + Q_1..Q_ell.
"""

import itertools

import numpy as np
import pytest

from qpir.core import Database


def bits(value, width):
    return format(value, f"0{width}b")


def dot(u: str, v: str) -> int:
    return sum(int(a) & int(b) for a, b in zip(u, v)) % 2


def basis_index(R: str, Rp: str, Q: str) -> int:
    return int(R + Rp + Q, 2)


def split_basis(index: int, r: int, ell: int):
    s = bits(index, 2 * r + ell)
    return s[:r], s[r:2 * r], s[2 * r:]


def phi_oracle(db: Database, phase_index=None, copy=True) -> np.ndarray:
    """|Phi_A> (or the post-Step-2 |Phi>, or |Phi'_A>) by direct enumeration."""
    r, ell = db.r, db.ell
    items = [str(a) for a in db.items]
    vec = np.zeros(2 ** (2 * r + ell))
    for x in itertools.product("01", repeat=r):
        x = "".join(x)
        q = "".join(str(dot(x, a)) for a in items)
        sign = (-1) ** dot(x, items[phase_index - 1]) if phase_index else 1
        vec[basis_index(x, x if copy else "0" * r, q)] += sign / np.sqrt(2 ** r)
    return vec


def permutation_matrix(r: int, ell: int, fn) -> np.ndarray:
    """Matrix of the basis map (R, R', Q) -> fn(R, R', Q) on text labels."""
    n = 2 * r + ell
    m = np.zeros((2 ** n, 2 ** n))
    for idx in range(2 ** n):
        R, Rp, Q = split_basis(idx, r, ell)
        m[basis_index(*fn(R, Rp, Q)), idx] = 1
    return m


def hadamard_tensor(width: int) -> np.ndarray:
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    out = np.ones((1, 1))
    for _ in range(width):
        out = np.kron(out, h)
    return out


def random_state(rng, n, density=1.0):
    vec = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    if density < 1.0:
        vec[rng.random(2 ** n) > density] = 0
        if not np.any(vec):
            vec[0] = 1
    return vec / np.linalg.norm(vec)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(RESULTS):
        ok, detail = RESULTS[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
