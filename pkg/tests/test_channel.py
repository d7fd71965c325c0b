import math

import numpy as np
import pytest

from pmbpqm import qla
from pmbpqm.channel import (
    DeltaGamma,
    GeneralBSCQ,
    QubitBSCQ,
    as_general,
    canonicalize,
    delta_gamma_to_theta_q,
    density,
    flip_family_density,
    flip_family_q,
    from_flip_family,
    helstrom_qubit,
    helstrom_success,
    holevo,
    psc,
    random_bscq,
    theta_q_to_delta_gamma,
    worthless,
)
from pmbpqm.errors import ContractViolation

GRID = [(t, q) for t in (0.0, 0.2, math.pi / 4, 1.3, math.pi / 2) for q in (0.0, 0.3, 0.9)]


def test_domain_is_validated():
    with pytest.raises(ContractViolation):
        QubitBSCQ(2.0, 0.1)
    with pytest.raises(ContractViolation):
        QubitBSCQ(0.3, -0.1)
    # rounding noise is clipped
    w = QubitBSCQ(math.pi / 2 + 1e-13, 1.0 + 1e-13)
    assert w.theta == math.pi / 2 and w.q == 1.0


@pytest.mark.parametrize("theta, q", GRID)
def test_success_closed_form(theta, q):
    w = QubitBSCQ(theta, q)
    assert w.success == pytest.approx(0.5 * (1 + (1 - q) * math.sin(theta)))
    assert helstrom_success(density(w, 0), density(w, 1)) == pytest.approx(w.success, abs=1e-12)


@pytest.mark.parametrize("theta, q", GRID)
def test_delta_gamma_round_trip(theta, q):
    back = delta_gamma_to_theta_q(theta_q_to_delta_gamma(theta, q))
    if q >= 1.0 or theta == 0.0:
        # both outputs coincide: only the success survives
        assert back.success == pytest.approx(QubitBSCQ(theta, q).success, abs=1e-12)
    else:
        assert back.theta == pytest.approx(theta, abs=1e-12)
        assert back.q == pytest.approx(q, abs=1e-12)


def test_delta_gamma_examples():
    dg = theta_q_to_delta_gamma(math.pi / 2, 0.0)
    assert (dg.delta, dg.gamma) == pytest.approx((0.0, 0.0), abs=1e-15)
    dg = theta_q_to_delta_gamma(0.7, 1.0)
    assert (dg.delta, dg.gamma) == pytest.approx((0.5, 0.0))
    dg = theta_q_to_delta_gamma(0.0, 0.4)
    assert (dg.delta, dg.gamma) == pytest.approx((0.5, 0.3))


def test_delta_gamma_rejects_non_psd():
    with pytest.raises(ContractViolation):
        delta_gamma_to_theta_q((0.5, 0.6))


def test_density_examples():
    rho0, rho1 = density(psc(math.pi / 2), 0), density(psc(math.pi / 2), 1)
    assert np.linalg.matrix_rank(rho0) == 1
    assert abs(np.trace(rho0 @ rho1)) < 1e-15
    np.testing.assert_allclose(density(QubitBSCQ(0.4, 1.0), 0), np.eye(2) / 2)
    with pytest.raises(ContractViolation):
        density(psc(0.3), 2)


@pytest.mark.parametrize("dim", [2, 4, 6])
def test_symmetry(dim, rng):
    w = random_bscq(dim, rng)
    np.testing.assert_allclose(w.output(1), w.u @ w.output(0) @ w.u)


def test_canonicalize_lemma_channel():
    w = canonicalize(GeneralBSCQ(np.array([[2 / 3, 1 / 6], [1 / 6, 1 / 3]]), qla.SX))
    assert w.theta == pytest.approx(math.pi / 4, abs=1e-12)
    assert w.q == pytest.approx(1 - math.sqrt(2) / 3, abs=1e-12)


def test_canonicalize_is_unitarily_invariant(rng):
    w = QubitBSCQ(0.9, 0.2)
    v = qla.random_unitary(2, rng)
    g = GeneralBSCQ(v @ density(w, 0) @ v.conj().T, v @ qla.SX @ v.conj().T)
    c = canonicalize(g)
    assert (c.theta, c.q) == pytest.approx((w.theta, w.q), abs=1e-10)
    # idempotent
    again = canonicalize(as_general(c))
    assert (again.theta, again.q) == pytest.approx((c.theta, c.q), abs=1e-12)
    assert qla.trace_norm(density(c, 0) - density(c, 1)) == pytest.approx(
        qla.trace_norm(g.output(0) - g.output(1)), abs=1e-10
    )


def test_canonicalize_worthless():
    c = canonicalize(GeneralBSCQ(np.eye(2) / 2, qla.SX))
    assert (c.theta, c.q) == (0.0, 1.0)
    assert c.is_worthless
    assert worthless().is_worthless
    assert not QubitBSCQ(0.3, 0.5).is_worthless
    with pytest.raises(ContractViolation):
        canonicalize(GeneralBSCQ(np.eye(4) / 4, np.kron(qla.SX, qla.SX)))


def test_general_channel_validation():
    with pytest.raises(ContractViolation):
        GeneralBSCQ(np.eye(3) / 3, np.eye(3))
    with pytest.raises(ContractViolation):
        GeneralBSCQ(np.diag([1.5, -0.5]), qla.SX)
    with pytest.raises(ContractViolation):
        GeneralBSCQ(np.eye(2) / 2, 2 * np.eye(2))
    with pytest.raises(ContractViolation):
        GeneralBSCQ(np.diag([0.7, 0.3]), qla.SX, stabilizer=qla.SZ @ qla.SX)


def test_helstrom_success_examples():
    rho = np.diag([0.3, 0.7])
    assert helstrom_success(rho, rho) == pytest.approx(0.5)
    assert helstrom_success(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == pytest.approx(1.0)
    with pytest.raises(ContractViolation):
        helstrom_success(np.eye(2) / 2, np.eye(4) / 4)


@pytest.mark.parametrize("p", [0.0, 0.1, 0.3, 0.5, 0.8, 1.0])
@pytest.mark.parametrize("theta, q", [(0.3, 0.0), (1.0, 0.25), (math.pi / 2, 0.5)])
def test_helstrom_qubit_matches_general(theta, q, p):
    w = QubitBSCQ(theta, q)
    assert helstrom_qubit(w, p) == pytest.approx(helstrom_success(density(w, 0), density(w, 1), p), abs=1e-12)


def test_holevo_examples():
    assert holevo(psc(math.pi / 2)) == pytest.approx(1.0, abs=1e-12)
    assert holevo(worthless()) == pytest.approx(0.0, abs=1e-12)
    for q in (0.1, 0.4):
        assert holevo(QubitBSCQ(math.pi / 2, q)) == pytest.approx(1 - qla.binary_entropy(q / 2), abs=1e-12)


def test_holevo_monotone():
    qs = np.linspace(0, 1, 11)
    values = [holevo(QubitBSCQ(1.0, q)) for q in qs]
    assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))
    thetas = np.linspace(0, math.pi / 2, 11)
    values = [holevo(QubitBSCQ(t, 0.2)) for t in thetas]
    assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("theta", [0.1, 0.6, 1.2, math.pi / 2])
@pytest.mark.parametrize("p", [0.0, 0.05, 0.2, 0.5])
def test_flip_family(theta, p):
    w = from_flip_family(theta, p)
    assert w.q == pytest.approx(flip_family_q(theta, p), abs=1e-10)
    direct = flip_family_density(theta, p, 0), flip_family_density(theta, p, 1)
    assert w.success == pytest.approx(helstrom_success(*direct), abs=1e-10)


def test_flip_family_examples():
    w = from_flip_family(0.8, 0.0)
    assert (w.theta, w.q) == pytest.approx((0.8, 0.0), abs=1e-12)
    assert from_flip_family(math.pi / 2, 0.1).q == pytest.approx(0.2, abs=1e-12)
    assert from_flip_family(0.9, 0.5).success == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ContractViolation):
        from_flip_family(0.3, 0.7)


def test_delta_gamma_type():
    dg = DeltaGamma(0.25, 0.2)
    np.testing.assert_allclose(dg.matrix(), [[0.25, 0.2], [0.2, 0.75]])
