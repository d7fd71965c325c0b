import math

import numpy as np
import pytest

from pmbpqm import qla
from pmbpqm.errors import ContractViolation


def random_hermitian(n, rng):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
@pytest.mark.parametrize("n", [1, 2, 5, 16, 32])
def test_herm_eig_reconstructs(method, n, rng):
    h = random_hermitian(n, rng)
    eig = qla.herm_eig(h, method=method)
    vals, vecs = eig
    assert np.all(np.diff(vals) <= 1e-12)
    assert np.linalg.norm(eig.reconstruct() - h) < 1e-9
    assert np.linalg.norm(vecs.conj().T @ vecs - np.eye(n)) < 1e-10


def test_jacobi_agrees_with_lapack(rng):
    h = random_hermitian(8, rng)
    a = qla.herm_eig(h, method="lapack").eigenvalues
    b = qla.herm_eig(h, method="jacobi").eigenvalues
    np.testing.assert_allclose(a, b, atol=1e-10)


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_degenerate_spectrum_has_fixed_basis(method):
    eig = qla.herm_eig(np.eye(2), method=method)
    np.testing.assert_allclose(eig.eigenvectors, np.eye(2), atol=1e-12)


@pytest.mark.parametrize(
    "m, expected",
    [
        (qla.SX, [1.0, -1.0]),
        (np.array([[2 / 3, 1 / 6], [1 / 6, 1 / 3]]), [0.5 + math.sqrt(2) / 6, 0.5 - math.sqrt(2) / 6]),
        (np.zeros((4, 4)), [0.0] * 4),
    ],
)
def test_herm_eig_examples(m, expected):
    np.testing.assert_allclose(qla.herm_eig(m).eigenvalues, expected, atol=1e-12)


def test_herm_eig_rejects_bad_input():
    with pytest.raises(ContractViolation):
        qla.herm_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ContractViolation):
        qla.herm_eig(np.ones((2, 3)))
    with pytest.raises(ContractViolation):
        qla.herm_eig(np.eye(2), method="qr")


def test_kron():
    np.testing.assert_array_equal(qla.kron(qla.I2, qla.I2), np.eye(4))
    np.testing.assert_array_equal(qla.kron(qla.SX, qla.I2) @ np.eye(4)[0], np.eye(4)[2])
    np.testing.assert_allclose(qla.kron(np.diag([1.0, 2.0]), np.diag([3.0, 4.0])), np.diag([3.0, 4.0, 6.0, 8.0]))


def test_kron_associative_and_trace_multiplicative(rng):
    a, b, c = (qla.random_density(2, rng) for _ in range(3))
    np.testing.assert_allclose(qla.kron(qla.kron(a, b), c), qla.kron(a, qla.kron(b, c)))
    np.testing.assert_allclose(qla.kron_all(a, b, c), qla.kron(a, qla.kron(b, c)))
    assert abs(np.trace(qla.kron(a, b)) - np.trace(a) * np.trace(b)) < 1e-12


@pytest.mark.parametrize(
    "rho, expected",
    [
        (np.eye(2) / 2, 1.0),
        (np.diag([1.0, 0.0]), 0.0),
        (np.diag([0.25, 0.75]), 0.811278),
    ],
)
def test_vn_entropy_examples(rho, expected):
    assert qla.vn_entropy(rho) == pytest.approx(expected, abs=1e-6)


def test_vn_entropy_unitary_invariance(rng):
    rho = qla.random_density(4, rng)
    u = qla.random_unitary(4, rng)
    assert qla.vn_entropy(u @ rho @ u.conj().T) == pytest.approx(qla.vn_entropy(rho), abs=1e-10)


def test_vn_entropy_rejects_bad_trace():
    with pytest.raises(ContractViolation):
        qla.vn_entropy(np.eye(2))


@pytest.mark.parametrize(
    "m, expected",
    [
        (qla.SZ, 2.0),
        (np.zeros((2, 2)), 0.0),
        (np.diag([1 / 3, -1 / 3]), 2 / 3),
    ],
)
def test_trace_norm_examples(m, expected):
    assert qla.trace_norm(m) == pytest.approx(expected, abs=1e-12)


def test_trace_norm_of_state_difference_is_bounded(rng):
    for _ in range(10):
        t = qla.trace_norm(qla.random_density(3, rng) - qla.random_density(3, rng))
        assert 0.0 <= t <= 2.0 + 1e-12


def test_binary_entropy():
    assert qla.binary_entropy(0.5) == pytest.approx(1.0)
    assert qla.binary_entropy(0.0) == 0.0
    np.testing.assert_allclose(qla.binary_entropy(np.array([0.11, 0.89])), [0.4999, 0.4999], atol=1e-3)


def test_predicates(rng):
    assert qla.is_involution(qla.SX)
    assert not qla.is_involution(2 * np.eye(2))
    assert qla.is_density(qla.random_density(4, rng, rank=2))
    assert not qla.is_density(np.diag([1.5, -0.5]))


def test_projector_is_idempotent(rng):
    eig = qla.herm_eig(random_hermitian(4, rng))
    p = eig.projector(np.array([True, False, True, False]))
    np.testing.assert_allclose(p @ p, p, atol=1e-12)
    assert np.trace(p).real == pytest.approx(2.0)
