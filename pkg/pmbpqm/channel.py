"""
Binary-input symmetric classical-quantum (BSCQ) channels.

A BSCQ channel maps a bit z to W(z) = U^z W(0) U^z for an involutive unitary U.
Qubit channels are kept in the canonical two-parameter form (theta, q):

    rho(theta, q) = (1 - q) H|theta><theta|H + q I/2

and are shown as matrices in the (delta, gamma) view

    W(0) = [[delta, gamma], [gamma, 1 - delta]],   U = sigma_x

with delta = q/2 + (1 - q)(1 - sin theta)/2 and gamma = (1 - q) cos(theta)/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from pmbpqm import qla
from pmbpqm.errors import ContractViolation

DOMAIN_TOL = 1e-12
WORTHLESS_TOL = 1e-12
PURE_SNAP = 1e-13
SYMMETRY_TOL = 1e-9

# Full PSD/involution checks above this dimension are skipped (eigvalsh cost)
FULL_CHECK_MAX_DIM = 256


@dataclass(frozen=True)
class QubitBSCQ:
    """Canonical qubit channel with theta in [0, pi/2] and q in [0, 1]."""

    theta: float
    q: float

    def __post_init__(self):
        theta, q = float(self.theta), float(self.q)
        if not (-DOMAIN_TOL <= theta <= math.pi / 2 + DOMAIN_TOL):
            raise ContractViolation(f"theta={theta!r} outside [0, pi/2]")
        if not (-DOMAIN_TOL <= q <= 1 + DOMAIN_TOL):
            raise ContractViolation(f"q={q!r} outside [0, 1]")
        object.__setattr__(self, "theta", min(max(theta, 0.0), math.pi / 2))
        object.__setattr__(self, "q", min(max(q, 0.0), 1.0))

    @property
    def success(self) -> float:
        return 0.5 * (1.0 + (1.0 - self.q) * math.sin(self.theta))

    @property
    def delta_gamma(self) -> "DeltaGamma":
        return theta_q_to_delta_gamma(self.theta, self.q)

    @property
    def is_worthless(self) -> bool:
        return (1.0 - self.q) * math.sin(self.theta) <= WORTHLESS_TOL


@dataclass(frozen=True)
class DeltaGamma:
    """Real (delta, gamma) parameters of W(0) with symmetry sigma_x."""

    delta: float
    gamma: float

    def __post_init__(self):
        d, g = float(self.delta), float(self.gamma)
        if not (-DOMAIN_TOL <= d <= 1 + DOMAIN_TOL):
            raise ContractViolation(f"delta={d!r} outside [0, 1]")
        if g * g > d * (1.0 - d) + 1e-10:
            raise ContractViolation(f"(delta, gamma)=({d!r}, {g!r}) is not positive semidefinite")
        object.__setattr__(self, "delta", min(max(d, 0.0), 1.0))
        object.__setattr__(self, "gamma", g)

    def matrix(self) -> np.ndarray:
        return np.array([[self.delta, self.gamma], [self.gamma, 1.0 - self.delta]])


@dataclass(frozen=True, eq=False)
class GeneralBSCQ:
    """
    BSCQ channel on an even-dimensional space.

    ``stabilizer`` is an optional second involutive symmetry that commutes with
    both ``rho`` and ``u``. Check-node combining sets it to U1 (x) U2; paired
    measurements use it to pick a basis inside degenerate eigenspaces.
    """

    rho: np.ndarray
    u: np.ndarray
    stabilizer: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        rho = np.array(self.rho, copy=True)
        u = np.array(self.u, copy=True)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] % 2:
            raise ContractViolation(f"rho must be square with even dimension, got {rho.shape}")
        if u.shape != rho.shape:
            raise ContractViolation(f"u has shape {u.shape}, rho has {rho.shape}")
        if abs(np.trace(rho).real - 1.0) > qla.TRACE_TOL:
            raise ContractViolation("rho does not have unit trace")
        rho = qla.as_hermitian(rho)
        if rho.shape[0] <= FULL_CHECK_MAX_DIM:
            if not qla.is_density(rho):
                raise ContractViolation("rho is not positive semidefinite")
            if not qla.is_involution(u):
                raise ContractViolation("u is not an involutive unitary")

        stab = self.stabilizer
        if stab is not None:
            stab = np.array(stab, copy=True)
            if stab.shape != rho.shape or not qla.is_involution(stab):
                raise ContractViolation("stabilizer must be an involutive unitary of matching shape")
            if (
                np.max(np.abs(stab @ rho - rho @ stab)) > SYMMETRY_TOL
                or np.max(np.abs(stab @ u - u @ stab)) > SYMMETRY_TOL
            ):
                raise ContractViolation("stabilizer does not commute with rho and u")
            stab.setflags(write=False)

        rho.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "stabilizer", stab)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def output(self, z: int) -> np.ndarray:
        return density(self, z)


Channel = Union[QubitBSCQ, GeneralBSCQ]


def theta_q_to_delta_gamma(theta: float, q: float) -> DeltaGamma:
    if not (-DOMAIN_TOL <= q <= 1 + DOMAIN_TOL):
        raise ContractViolation(f"q={q!r} outside [0, 1]")
    delta = q / 2 + 0.5 * (1.0 - q) * (1.0 - math.sin(theta))
    gamma = 0.5 * (1.0 - q) * math.cos(theta)
    return DeltaGamma(delta, gamma)


def delta_gamma_to_theta_q(dg: Union[DeltaGamma, tuple]) -> QubitBSCQ:
    """
    Canonical (theta, q) of a (delta, gamma) channel.

    The sign of gamma and the theta -> pi - theta reflection are folded away.

    Raises:
        ContractViolation: If the (delta, gamma) matrix is not PSD
    """
    if not isinstance(dg, DeltaGamma):
        dg = DeltaGamma(*dg)
    return bloch_canonical(2.0 * dg.gamma, 2.0 * dg.delta - 1.0)


def bloch_canonical(x: float, z: float) -> QubitBSCQ:
    """
    Canonical channel for a sigma_x-symmetric qubit with Bloch vector (x, 0, z).

    x is the component along the symmetry axis, z the component it flips.
    """
    r = math.hypot(x, z)
    q = 1.0 - r
    if q >= 1.0 - WORTHLESS_TOL:
        return QubitBSCQ(0.0, 1.0)
    if q < PURE_SNAP:
        q = 0.0
    return QubitBSCQ(math.atan2(abs(z), abs(x)), q)


def density(w: Channel, z: int) -> np.ndarray:
    """Output density matrix W(z)."""
    if z not in (0, 1):
        raise ContractViolation(f"input bit must be 0 or 1, got {z!r}")
    if isinstance(w, QubitBSCQ):
        m = w.delta_gamma.matrix()
        return qla.SX @ m @ qla.SX if z else m
    return w.u @ w.rho @ w.u if z else w.rho


def canonicalize(w: GeneralBSCQ) -> QubitBSCQ:
    """
    Canonical (theta, q) of a qubit BSCQ channel.

    q = 2 lambda_min(rho) and sin(theta) = lambda_max(rho - U rho U) / (1 - q).
    Both are read off the Bloch vector of rho split along and across the axis
    of U, which keeps theta accurate near pi/2.
    """
    if w.dim != 2:
        raise ContractViolation(f"canonicalize expects a qubit channel, got dimension {w.dim}")
    paulis = (qla.SX, qla.SY, qla.SZ)
    b = np.array([np.trace(w.rho @ s).real for s in paulis])
    n = np.array([np.trace(w.u @ s).real / 2.0 for s in paulis])
    if np.linalg.norm(n) < 0.5:
        # u = +-I: both outputs coincide
        along, across = float(np.linalg.norm(b)), 0.0
    else:
        n = n / np.linalg.norm(n)
        along = float(abs(b @ n))
        across = float(np.linalg.norm(b - (b @ n) * n))
    return bloch_canonical(along, across)


def as_general(w: QubitBSCQ) -> GeneralBSCQ:
    return GeneralBSCQ(density(w, 0), qla.SX)


def helstrom_success(rho0: np.ndarray, rho1: np.ndarray, p: float = 0.5) -> float:
    """
    Success probability of the Helstrom measurement for prior p on rho0.

    Computed as (1 - p) + sum of the nonnegative eigenvalues of p rho0 - (1 - p) rho1,
    which equals p Tr[P+ rho0] + (1 - p) Tr[(I - P+) rho1].
    """
    rho0, rho1 = np.asarray(rho0), np.asarray(rho1)
    if rho0.shape != rho1.shape:
        raise ContractViolation(f"dimension mismatch: {rho0.shape} vs {rho1.shape}")
    if not 0.0 <= p <= 1.0:
        raise ContractViolation(f"prior {p!r} outside [0, 1]")
    lam = np.linalg.eigvalsh(qla.as_hermitian(p * rho0 - (1.0 - p) * rho1))
    return float(min(1.0, (1.0 - p) + np.sum(lam[lam > 0.0])))


def helstrom_projector(rho0: np.ndarray, rho1: np.ndarray, p: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Projectors onto the positive and zero eigenspaces of p rho0 - (1 - p) rho1."""
    gamma = p * np.asarray(rho0) - (1.0 - p) * np.asarray(rho1)
    eig = qla.herm_eig(gamma)
    tol = qla.DEGENERACY_TOL * max(1.0, float(np.max(np.abs(eig.eigenvalues))))
    return eig.projector(eig.eigenvalues > tol), eig.projector(np.abs(eig.eigenvalues) <= tol)


def helstrom_qubit(w: QubitBSCQ, p: float = 0.5) -> float:
    """Helstrom success for a canonical qubit channel; at p = 1/2 this is (1 + (1-q) sin theta)/2."""
    if not 0.0 <= p <= 1.0:
        raise ContractViolation(f"prior {p!r} outside [0, 1]")
    if p == 0.5:
        return w.success
    a = 2.0 * p - 1.0
    x = (1.0 - w.q) * math.cos(w.theta)
    z = (1.0 - w.q) * math.sin(w.theta)
    return 0.5 * (1.0 + max(abs(a), math.sqrt(a * a * x * x + z * z)))


def holevo(w: QubitBSCQ) -> float:
    """Holevo information of the channel under a uniform input, in bits."""
    rho0, rho1 = density(w, 0), density(w, 1)
    chi = qla.vn_entropy(0.5 * (rho0 + rho1)) - 0.5 * qla.vn_entropy(rho0) - 0.5 * qla.vn_entropy(rho1)
    return min(max(chi, 0.0), 1.0)


def psc(theta: float) -> QubitBSCQ:
    return QubitBSCQ(theta, 0.0)


def worthless() -> QubitBSCQ:
    return QubitBSCQ(0.0, 1.0)


def _h_ket(phi: float) -> np.ndarray:
    ket = np.array([math.cos(phi / 2), math.sin(phi / 2)])
    return qla.HADAMARD @ ket


def flip_family_density(theta: float, p: float, z: int) -> np.ndarray:
    """(1-p) H|(-1)^z theta><.|H + p H|(-1)^(z+1) theta><.|H."""
    sign = -1.0 if z else 1.0
    good, bad = _h_ket(sign * theta), _h_ket(-sign * theta)
    return (1.0 - p) * np.outer(good, good) + p * np.outer(bad, bad)


def from_flip_family(theta: float, p: float) -> QubitBSCQ:
    """
    Canonical form of the bit-flipped pure-state channel family.

    Its depolarizing weight is q = 1 - sqrt(-2(p-1)p cos(2 theta) + 2(p-1)p + 1);
    theta is recovered by canonicalizing the mixture directly.
    """
    if not (0.0 <= theta <= math.pi / 2 + DOMAIN_TOL):
        raise ContractViolation(f"theta={theta!r} outside [0, pi/2]")
    if not (0.0 <= p <= 0.5 + DOMAIN_TOL):
        raise ContractViolation(f"p={p!r} outside [0, 1/2]")
    # H|theta> and H|-theta> are exchanged by sigma_x
    return canonicalize(GeneralBSCQ(flip_family_density(theta, p, 0), qla.SX))


def flip_family_q(theta: float, p: float) -> float:
    return 1.0 - math.sqrt(max(0.0, -2 * (p - 1) * p * math.cos(2 * theta) + 2 * (p - 1) * p + 1))


def random_involution(dim: int, rng: np.random.Generator, minus: Optional[int] = None) -> np.ndarray:
    """Random involutive unitary V diag(+-1) V† with ``minus`` eigenvalues equal to -1."""
    k = int(rng.integers(1, dim)) if minus is None else minus
    signs = np.ones(dim)
    signs[:k] = -1.0
    v = qla.random_unitary(dim, rng)
    u = (v * signs) @ v.conj().T
    return (u + u.conj().T) / 2


def random_bscq(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> GeneralBSCQ:
    return GeneralBSCQ(qla.random_density(dim, rng, rank=rank), random_involution(dim, rng))
