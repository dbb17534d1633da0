import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dualis.errors import InvalidArity, InvariantError, Overflow
from dualis.opscore import (
    DensityState,
    HermitianOperator,
    Projector,
    block_embed,
    eig_hermitian,
    expm_hermitian,
    operator_norm,
    random_hermitian,
    random_projector,
    random_state,
    random_unitary,
    trace_norm,
    von_neumann_entropy,
)
from oracles import bisection_eigenvalues, taylor_expm

SIGMA_Y = np.array([[0, -1j], [1j, 0]])


def test_hermitian_rejects_asymmetric():
    with pytest.raises(InvariantError):
        HermitianOperator([[0, 1], [0, 0]])


def test_hermitian_symmetrizes_within_tolerance():
    A = HermitianOperator([[1.0, 1e-13], [0.0, 2.0]])
    assert np.allclose(A.matrix, A.matrix.conj().T, atol=0)


def test_non_finite_rejected():
    with pytest.raises(InvariantError):
        HermitianOperator([[np.nan, 0], [0, 1]])


def test_density_state_checks_trace_and_positivity():
    with pytest.raises(InvariantError):
        DensityState(np.diag([0.5, 0.6]))
    with pytest.raises(InvariantError):
        DensityState(np.diag([1.1, -0.1]))
    DensityState(np.diag([0.25, 0.75]))


def test_projector_check():
    with pytest.raises(InvariantError):
        Projector(np.diag([1.0, 0.5]))
    assert Projector(np.diag([1.0, 0.0, 1.0])).rank == 2


def test_eig_identity():
    w, v = eig_hermitian(np.eye(2))
    assert np.allclose(w, [1, 1])
    assert np.allclose(v, np.eye(2))


def test_eig_pauli_z():
    w, _ = eig_hermitian(np.diag([1.0, -1.0]))
    assert np.allclose(w, [-1, 1])


def test_eig_matches_bisection_oracle():
    A = random_hermitian(6, 1234).matrix
    w, _ = eig_hermitian(A)
    assert np.max(np.abs(w - bisection_eigenvalues(A))) <= 1e-8


def test_eig_matches_numpy():
    A = random_hermitian(12, 7).matrix
    assert np.max(np.abs(eig_hermitian(A)[0] - np.linalg.eigvalsh(A))) <= 1e-10


@pytest.mark.parametrize("seed", range(200))
def test_eig_reconstruction(seed):
    n = 1 + seed % 16
    A = random_hermitian(n, seed).matrix * (1 + seed % 5)
    w, v = eig_hermitian(A)
    assert np.all(np.diff(w) >= 0)
    assert np.max(np.abs(v.conj().T @ v - np.eye(n))) <= 1e-9
    assert np.max(np.abs((v * w) @ v.conj().T - A)) <= 1e-9 * max(1.0, operator_norm(A))


def test_eig_degenerate_spectrum():
    U = random_unitary(5, 3)
    A = U @ np.diag([1, 1, 1, 2, 2.0]) @ U.conj().T
    w, v = eig_hermitian(A)
    assert np.allclose(w, [1, 1, 1, 2, 2], atol=1e-12)


def test_expm_zero_is_identity():
    A = random_hermitian(3, 1)
    assert np.array_equal(expm_hermitian(A, 0.0).matrix, np.eye(3))


def test_expm_diagonal():
    assert np.allclose(expm_hermitian(np.diag([0.0, 1.0]), -1.0).matrix, np.diag([1, math.exp(-1)]))


def test_expm_matches_taylor():
    A = random_hermitian(4, 99).matrix
    assert np.max(np.abs(expm_hermitian(A, 0.1).matrix - taylor_expm(A, 0.1))) <= 1e-10


def test_expm_overflow_reported():
    with pytest.raises(Overflow):
        expm_hermitian(np.diag([1000.0, 0.0]), 1.0)


@given(st.integers(0, 2**32 - 1), st.floats(-1, 1), st.floats(-1, 1))
@settings(max_examples=40, deadline=None)
def test_expm_group_law(seed, s, t):
    A = random_hermitian(3, seed)
    lhs = expm_hermitian(A, s).matrix @ expm_hermitian(A, t).matrix
    assert np.max(np.abs(lhs - expm_hermitian(A, s + t).matrix)) <= 1e-9


def test_entropy_examples():
    assert von_neumann_entropy(np.diag([1.0, 0.0])) == 0.0
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(math.log(2), abs=1e-12)
    assert von_neumann_entropy(np.diag([0.25, 0.75])) == pytest.approx(0.562335, abs=1e-6)


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
@settings(max_examples=40, deadline=None)
def test_entropy_unitary_invariant_and_bounded(seed, n):
    rho = random_state(n, seed).matrix
    U = random_unitary(n, seed + 1)
    s = von_neumann_entropy(rho)
    assert -1e-12 <= s <= math.log(n) + 1e-12
    assert abs(von_neumann_entropy(U @ rho @ U.conj().T) - s) <= 1e-10


def test_norm_examples():
    assert operator_norm(np.diag([1.0, -3.0])) == 3.0
    assert trace_norm(np.diag([1.0, -3.0])) == 4.0
    assert operator_norm(np.zeros((2, 2))) == 0.0
    assert trace_norm(np.zeros((2, 2))) == 0.0


def test_trace_norm_matches_singular_values():
    A = random_hermitian(5, 5).matrix
    assert trace_norm(A) == pytest.approx(np.sum(np.linalg.svd(A, compute_uv=False)), abs=1e-10)
    assert trace_norm(A) >= operator_norm(A)


def test_random_unitary_n1_is_phase():
    U = random_unitary(1, 5)
    assert abs(abs(U[0, 0]) - 1) <= 1e-12


def test_random_unitary_deterministic_and_unitary():
    U = random_unitary(6, 42)
    assert np.array_equal(U, random_unitary(6, 42))
    assert np.max(np.abs(U.conj().T @ U - np.eye(6))) <= 1e-10


def test_haar_second_moment():
    vals = [abs(random_unitary(4, s)[0, 0]) ** 2 for s in range(1000)]
    assert abs(np.mean(vals) - 0.25) <= 0.02


def test_random_state_and_projector_valid():
    rho = random_state(4, 8)
    assert abs(np.trace(rho.matrix).real - 1) <= 1e-12
    P = random_projector(5, 2, 3)
    assert P.rank == 2


def test_block_embed_examples():
    A = np.diag([1.0, 2.0])
    assert np.allclose(block_embed(A, 1, 0).matrix, A)
    assert np.allclose(block_embed(A, 1, 1).matrix, np.diag([1, 2, 1, 2]))
    conj = block_embed(SIGMA_Y, 0, 1).matrix
    assert np.allclose(conj, -SIGMA_Y)
    assert np.allclose(eig_hermitian(conj)[0], [-1, 1])


def test_block_embed_rejects_zero_arity():
    with pytest.raises(InvalidArity):
        block_embed(np.eye(2), 0, 0)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(0, 2), st.integers(0, 2))
@settings(max_examples=40, deadline=None)
def test_block_embed_spectrum(seed, n, p, q):
    if p + q == 0:
        return
    A = random_hermitian(n, seed)
    got = eig_hermitian(block_embed(A, p, q))[0]
    want = np.sort(np.repeat(eig_hermitian(A)[0], p + q))
    assert np.max(np.abs(got - want)) <= 1e-10
