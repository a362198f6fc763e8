import itertools

import numpy as np
import pytest

from conftest import (basis_index, bits, dot, hadamard_tensor, permutation_matrix, phi_oracle,
                      random_state, split_basis)
from qpir import dense
from qpir.core import BitString, Database, RegisterLayout
from qpir.errors import CapacityError, DimensionError, RangeError

B = BitString.from_str
S2 = 1 / np.sqrt(2)


def state_of(layout, vec):
    return dense.DenseState(layout, np.asarray(vec, dtype=complex))


def test_prepare_phi_single_one():
    s = dense.prepare_phi(Database.from_strings(["1"]))
    expected = np.zeros(8)
    expected[0b000] = expected[0b111] = S2
    np.testing.assert_allclose(s.amplitudes, expected, atol=1e-15)


def test_prepare_phi_single_zero():
    s = dense.prepare_phi(Database.from_strings(["0"]))
    expected = np.zeros(8)
    expected[0b000] = expected[0b110] = S2
    np.testing.assert_allclose(s.amplitudes, expected, atol=1e-15)


def test_prepare_phi_two_items():
    # hand enumeration: x=00->Q=00, 01->11, 10->01, 11->10
    s = dense.prepare_phi(Database.from_strings(["01", "11"]))
    support = {int(b, 2) for b in ("000000", "010111", "101001", "111110")}
    assert set(s.nonzero()) == support
    for amp in s.nonzero().values():
        assert amp == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("items", [["1"], ["0"], ["10", "01", "11"], ["011", "110"]])
def test_prepare_phi_prime(items):
    db = Database.from_strings(items)
    s = dense.prepare_phi_prime(db)
    np.testing.assert_allclose(s.amplitudes, phi_oracle(db, copy=False), atol=1e-15)
    assert len(s.nonzero()) == 2 ** db.r


def test_prepare_phi_matches_oracle_exhaustive():
    for r, ell in [(1, 1), (1, 2), (2, 1), (2, 2), (2, 3), (3, 2)]:
        for vals in itertools.product(range(2 ** r), repeat=ell):
            db = Database.from_values(vals, r)
            np.testing.assert_allclose(dense.prepare_phi(db).amplitudes, phi_oracle(db),
                                       atol=1e-15)


def test_capacity_error(monkeypatch):
    monkeypatch.setenv("QPIR_DENSE_CAP", "6")
    with pytest.raises(CapacityError, match="sparse"):
        dense.prepare_phi(Database.from_strings(["10", "01", "11"]))


def test_z_examples():
    layout = RegisterLayout(1, 1)
    plus = np.zeros(8)
    plus[0b000] = plus[0b001] = S2
    out = dense.apply_z(state_of(layout, plus), 2)
    assert out.amplitudes[0b001] == pytest.approx(-S2)
    assert out.amplitudes[0b000] == pytest.approx(S2)
    zero = dense.basis_state(layout, 0)
    np.testing.assert_array_equal(dense.apply_z(zero, 2).amplitudes, zero.amplitudes)
    with pytest.raises(RangeError):
        dense.apply_z(zero, 3)


def test_z_twice_identity(rng):
    layout = RegisterLayout(2, 2)
    s = state_of(layout, random_state(rng, 6))
    for q in range(6):
        np.testing.assert_allclose(dense.apply_z(dense.apply_z(s, q), q).amplitudes,
                                   s.amplitudes, atol=1e-15)


def test_qft_single_qubit_is_hadamard():
    layout = RegisterLayout(1, 1)
    out = dense.apply_qft(dense.basis_state(layout, 0), "R")
    assert out.amplitudes[0b000] == pytest.approx(S2)
    assert out.amplitudes[0b100] == pytest.approx(S2)


@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_qft_decodes_linear_phase(r):
    layout = RegisterLayout(r, 1)
    for c in range(2 ** r):
        vec = np.zeros(2 ** layout.total_qubits)
        for x in range(2 ** r):
            vec[basis_index(bits(x, r), "0" * r, "0")] = (-1) ** dot(bits(x, r), bits(c, r))
        out = dense.apply_qft(state_of(layout, vec / np.sqrt(2 ** r)), "R")
        expected = np.zeros_like(vec)
        expected[basis_index(bits(c, r), "0" * r, "0")] = 1
        np.testing.assert_allclose(out.amplitudes, expected, atol=1e-12)


@pytest.mark.parametrize("r", [1, 2, 3, 4])
@pytest.mark.parametrize("register", ["R", "R'"])
def test_qft_matches_kernel_matrix(r, register):
    layout = RegisterLayout(r, 1)
    kernel = np.array([[(-1) ** dot(bits(y, r), bits(z, r)) for z in range(2 ** r)]
                       for y in range(2 ** r)]) / np.sqrt(2 ** r)
    np.testing.assert_allclose(kernel, hadamard_tensor(r), atol=1e-12)
    eye_r, eye_q = np.eye(2 ** r), np.eye(2)
    full = (np.kron(np.kron(kernel, eye_r), eye_q) if register == "R"
            else np.kron(np.kron(eye_r, kernel), eye_q))
    rng = np.random.default_rng(r)
    vec = random_state(rng, layout.total_qubits)
    out = dense.apply_qft(state_of(layout, vec), register)
    np.testing.assert_allclose(out.amplitudes, full @ vec, atol=1e-12)


def test_qft_hadamards_commute_in_any_order(rng):
    layout = RegisterLayout(3, 1)
    s = state_of(layout, random_state(rng, 7))
    ref = dense.apply_qft(s, "R").amplitudes
    for order in itertools.permutations(range(3)):
        t = s
        for q in order:
            t = dense.apply_hadamard(t, q)
        np.testing.assert_allclose(t.amplitudes, ref, atol=1e-12)


def test_qft_involution(rng):
    layout = RegisterLayout(3, 2)
    s = state_of(layout, random_state(rng, 8))
    twice = dense.apply_qft(dense.apply_qft(s, "R"), "R")
    np.testing.assert_allclose(twice.amplitudes, s.amplitudes, atol=1e-12)


@pytest.mark.parametrize("r, ell", [(1, 1), (2, 1), (2, 2)])
def test_cnot_matches_definition(r, ell, rng):
    layout = RegisterLayout(r, ell)
    m = permutation_matrix(r, ell, lambda R, Rp, Q: (
        R, bits(int(Rp, 2) ^ int(R, 2), r), Q))
    vec = random_state(rng, layout.total_qubits)
    out = dense.apply_cnot_reg(state_of(layout, vec), "R", "R'")
    np.testing.assert_allclose(out.amplitudes, m @ vec, atol=1e-15)


def test_cnot_examples():
    layout = RegisterLayout(2, 1)
    for x in range(4):
        s = dense.basis_state(layout, basis_index(bits(x, 2), bits(x, 2), "0"))
        out = dense.apply_cnot_reg(s)
        assert out.nonzero() == {basis_index(bits(x, 2), "00", "0"): 1}
        back = dense.apply_cnot_reg(out)
        assert back.nonzero() == s.nonzero()


@pytest.mark.parametrize("b", ["00", "01", "10", "11"])
def test_u_b_matches_definition(b, rng):
    layout = RegisterLayout(2, 2)
    for k in (1, 2):
        def fn(R, Rp, Q, k=k):
            q = list(Q)
            q[k - 1] = str(int(q[k - 1]) ^ dot(b, R))
            return R, Rp, "".join(q)
        m = permutation_matrix(2, 2, fn)
        vec = random_state(rng, 6)
        out = dense.apply_u_b(state_of(layout, vec), k, B(b))
        np.testing.assert_allclose(out.amplitudes, m @ vec, atol=1e-15)


def test_u_b_examples(rng):
    layout = RegisterLayout(2, 1)
    s = state_of(layout, random_state(rng, 5))
    np.testing.assert_array_equal(dense.apply_u_b(s, 1, B("00")).amplitudes, s.amplitudes)
    twice = dense.apply_u_b(dense.apply_u_b(s, 1, B("11")), 1, B("11"))
    np.testing.assert_array_equal(twice.amplitudes, s.amplitudes)
    for y in range(4):
        b = B("10")
        start = dense.basis_state(layout, basis_index(bits(y, 2), "00", str(dot(bits(y, 2), "10"))))
        out = dense.apply_u_b(start, 1, b)
        assert out.nonzero() == {basis_index(bits(y, 2), "00", "0"): 1}
    with pytest.raises(DimensionError):
        dense.apply_u_b(s, 1, B("1"))


def test_measure_examples():
    layout = RegisterLayout(2, 2)
    s = dense.basis_state(layout, basis_index("10", "00", "00"))
    assert dense.measure_register(s, "R") == {B("10"): pytest.approx(1.0)}
    phi = dense.prepare_phi(Database.from_strings(["01", "11"]))
    dist = dense.measure_register(phi, "R")
    assert len(dist) == 4
    assert all(p == pytest.approx(0.25, abs=1e-12) for p in dist.values())
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-9)
    # does not mutate
    assert len(phi.nonzero()) == 4


def test_sample_reproducible():
    dist = {B("0"): 0.5, B("1"): 0.5}
    draws = [dense.sample(dist, seed) for seed in range(20)]
    assert draws == [dense.sample(dist, seed) for seed in range(20)]
    assert set(draws) == {B("0"), B("1")}
    assert dense.sample({B("11"): 1.0}, 123) == B("11")


def _partial_trace_oracle(vec, r, ell, traced):
    """Reduced matrix by summing over text labels of the traced registers."""
    kept_of = {}
    for idx in range(vec.size):
        R, Rp, Q = split_basis(idx, r, ell)
        parts = {"R": R, "R'": Rp, **{f"Q{k + 1}": Q[k] for k in range(ell)}}
        order = ["R", "R'"] + [f"Q{k + 1}" for k in range(ell)]
        kept = "".join(parts[n] for n in order if n not in traced)
        trace = "".join(parts[n] for n in order if n in traced)
        kept_of[idx] = (int(kept, 2) if kept else 0, trace)
    dim = 2 ** (2 * r + ell - sum(r if n in ("R", "R'") else 1 for n in traced))
    rho = np.zeros((dim, dim), dtype=complex)
    for i, j in itertools.product(range(vec.size), repeat=2):
        (a, ta), (b, tb) = kept_of[i], kept_of[j]
        if ta == tb:
            rho[a, b] += vec[i] * np.conj(vec[j])
    return rho


@pytest.mark.parametrize("traced", [["R'"], ["R"], ["Q1"], ["R'", "Q2"], []])
def test_partial_trace_matches_oracle(traced, rng):
    layout = RegisterLayout(1, 2)
    vec = random_state(rng, 4)
    rho = dense.partial_trace(state_of(layout, vec), traced)
    np.testing.assert_allclose(rho.matrix, _partial_trace_oracle(vec, 1, 2, traced), atol=1e-12)
    rho.check()


def test_partial_trace_examples():
    db = Database.from_strings(["10", "11"])
    phi = dense.apply_z(dense.prepare_phi(db), RegisterLayout(2, 2).q_qubit(1))
    rho = dense.partial_trace(phi, ["R'"])
    expected = np.zeros((16, 16))
    for x in range(4):
        label = int(bits(x, 2) + str(dot(bits(x, 2), "10")) + str(dot(bits(x, 2), "11")), 2)
        expected[label, label] = 0.25
    np.testing.assert_allclose(rho.matrix, expected, atol=1e-12)

    rho_all = dense.partial_trace(phi, [])
    assert np.linalg.matrix_rank(rho_all.matrix, tol=1e-9) == 1

    bell = np.zeros(8)
    bell[0b000] = bell[0b110] = S2
    half = dense.partial_trace(state_of(RegisterLayout(1, 1), bell), ["R'", "Q1"])
    np.testing.assert_allclose(half.matrix, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_cap():
    layout = RegisterLayout(2, 2)
    with pytest.raises(CapacityError):
        dense.partial_trace(dense.basis_state(layout, 0), [], matrix_cap=32)


@pytest.mark.parametrize("n_qubits", [3, 6, 9, 12])
def test_gates_preserve_norm(n_qubits, rng):
    r = 1 if n_qubits == 3 else 2 if n_qubits == 6 else 3
    layout = RegisterLayout(r, n_qubits - 2 * r)
    s = state_of(layout, random_state(rng, n_qubits))
    ops = [lambda t: dense.apply_z(t, int(rng.integers(n_qubits))),
           lambda t: dense.apply_qft(t, "R"),
           lambda t: dense.apply_qft(t, "R'"),
           lambda t: dense.apply_cnot_reg(t),
           lambda t: dense.apply_u_b(t, int(rng.integers(1, layout.ell + 1)),
                                     BitString(int(rng.integers(2 ** r)), r))]
    for _ in range(20):
        s = ops[int(rng.integers(len(ops)))](s)
        assert abs(s.norm() - 1) <= 1e-12


def test_dump_round_trip():
    s = dense.prepare_phi(Database.from_strings(["10", "01"]))
    text = dense.dump_state(s)
    lines = text.splitlines()
    assert len(lines) == 4
    assert [int(line.split()[0]) for line in lines] == sorted(s.nonzero())
    assert dense.parse_dump(text) == pytest.approx(s.nonzero())
