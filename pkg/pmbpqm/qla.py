"""
Dense linear algebra for small Hermitian problems.

Density matrices, symmetry unitaries and difference operators are plain
``numpy.ndarray`` values (real or complex). Every eigendecomposition in the
package goes through :func:`herm_eig` so that degenerate eigenvalues are
resolved the same way on every run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.special import entr

from pmbpqm.errors import ContractViolation

CMatrix = np.ndarray

HERMITIAN_TOL = 1e-12
DEGENERACY_TOL = 1e-10
TRACE_TOL = 1e-10

I2 = np.eye(2)
SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues (descending) and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __iter__(self) -> Iterator[np.ndarray]:
        yield self.eigenvalues
        yield self.eigenvectors

    def reconstruct(self) -> CMatrix:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def projector(self, mask: np.ndarray) -> CMatrix:
        """Orthogonal projector onto the span of the selected eigenvectors."""
        v = self.eigenvectors[:, mask]
        return v @ v.conj().T


def as_hermitian(m: CMatrix) -> CMatrix:
    """Return (m + m†)/2, refusing inputs that are not Hermitian to begin with."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {m.shape}")
    if m.size == 0:
        raise ContractViolation("empty matrix")
    scale = max(1.0, float(np.max(np.abs(m))))
    asym = float(np.max(np.abs(m - m.conj().T)))
    if asym > HERMITIAN_TOL * scale:
        raise ContractViolation(f"matrix is not Hermitian (asymmetry {asym:.3e})")
    return (m + m.conj().T) / 2


def herm_eig(m: CMatrix, method: str = "lapack") -> EigenDecomposition:
    """
    Eigendecomposition of a Hermitian matrix with deterministic tie-breaking.

    Args:
        m: Square Hermitian matrix (asymmetry up to 1e-12 is symmetrised away)
        method: 'lapack' (numpy.linalg.eigh) or 'jacobi' (cyclic Jacobi sweeps)

    Returns:
        EigenDecomposition with eigenvalues sorted descending. Each eigenvector has
        its first non-negligible component real and positive; vectors inside a
        degenerate cluster (gap < 1e-10) are ordered lexicographically, largest first.

    Raises:
        ContractViolation: If m is not square or not Hermitian
    """
    h = as_hermitian(m)
    if method == "lapack":
        vals, vecs = np.linalg.eigh(h)
    elif method == "jacobi":
        vals, vecs = jacobi_eig(h)
    else:
        raise ContractViolation(f"unknown eigensolver {method!r}")
    return _canonical_order(np.asarray(vals, dtype=float), np.asarray(vecs))


def jacobi_eig(h: CMatrix, tol: float = 1e-13, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """
    Cyclic Jacobi eigenvalue iteration for a Hermitian matrix.

    Each rotation first removes the phase of a[p, q] with a diagonal unitary and
    then applies the real symmetric Jacobi rotation, so complex input is handled
    with the same two-by-two update as the real case.

    Returns:
        (eigenvalues, eigenvectors) unsorted; eigenvectors are columns
    """
    a = np.array(h, dtype=complex, copy=True)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = float(np.linalg.norm(a))

    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= tol * max(scale, 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                r = abs(a[p, q])
                if r < 1e-300:
                    continue
                phase = np.conj(a[p, q] / r)
                t = 0.5 * np.arctan2(2.0 * r, a[q, q].real - a[p, p].real)
                c, s = np.cos(t), np.sin(t)
                g00, g01, g10, g11 = c, s, -s * phase, c * phase

                col_p = a[:, p] * g00 + a[:, q] * g10
                col_q = a[:, p] * g01 + a[:, q] * g11
                a[:, p], a[:, q] = col_p, col_q

                row_p = np.conj(g00) * a[p, :] + np.conj(g10) * a[q, :]
                row_q = np.conj(g01) * a[p, :] + np.conj(g11) * a[q, :]
                a[p, :], a[q, :] = row_p, row_q
                a[p, q] = a[q, p] = 0.0
                a[p, p], a[q, q] = a[p, p].real, a[q, q].real

                vp = v[:, p] * g00 + v[:, q] * g10
                vq = v[:, p] * g01 + v[:, q] * g11
                v[:, p], v[:, q] = vp, vq

    vals = np.diag(a).real.copy()
    if np.isrealobj(h):
        v = v.real
    return vals, v


def _lex_key(vec: np.ndarray) -> tuple:
    key = []
    for x in vec:
        key.append(round(float(np.real(x)), 9))
        key.append(round(float(np.imag(x)), 9))
    return tuple(key)


def orient(vec: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Rotate the global phase so the first non-negligible component is real positive."""
    idx = np.flatnonzero(np.abs(vec) > tol)
    if idx.size == 0:
        return vec
    lead = vec[idx[0]]
    return vec * (np.conj(lead) / abs(lead))


def _canonical_order(vals: np.ndarray, vecs: np.ndarray) -> EigenDecomposition:
    order = np.argsort(-vals, kind="stable")
    vals = vals[order].copy()
    vecs = vecs[:, order].copy()
    for k in range(vecs.shape[1]):
        vecs[:, k] = orient(vecs[:, k])

    n = len(vals)
    i = 0
    while i < n:
        j = i + 1
        while j < n and vals[j - 1] - vals[j] < DEGENERACY_TOL:
            j += 1
        if j - i > 1:
            perm = sorted(range(j - i), key=lambda k: _lex_key(vecs[:, i + k]), reverse=True)
            vecs[:, i:j] = vecs[:, i:j][:, perm]
            vals[i:j] = vals[i:j][perm]
        i = j
    return EigenDecomposition(eigenvalues=vals, eigenvectors=vecs)


def kron(a: CMatrix, b: CMatrix) -> CMatrix:
    return np.kron(a, b)


def kron_all(*mats: CMatrix) -> CMatrix:
    out = np.ones((1, 1))
    for m in mats:
        out = np.kron(out, m)
    return out


def trace_norm(m: CMatrix) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(as_hermitian(m)))))


def vn_entropy(rho: CMatrix) -> float:
    """
    Von Neumann entropy in bits.

    Raises:
        ContractViolation: If the trace of rho is not 1 within 1e-10
    """
    h = as_hermitian(rho)
    tr = float(np.trace(h).real)
    if abs(tr - 1.0) > TRACE_TOL:
        raise ContractViolation(f"density matrix has trace {tr!r}")
    lam = np.clip(np.linalg.eigvalsh(h), 0.0, None)
    s = float(np.sum(entr(lam)) / np.log(2.0))
    return min(max(s, 0.0), float(np.log2(h.shape[0])))


def binary_entropy(p):
    """h2(p) in bits; works elementwise on arrays."""
    p = np.asarray(p, dtype=float)
    h = (entr(p) + entr(1.0 - p)) / np.log(2.0)
    return float(h) if h.ndim == 0 else h


def is_density(m: CMatrix, tol: float = TRACE_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    if np.max(np.abs(m - m.conj().T)) > tol:
        return False
    if abs(np.trace(m).real - 1.0) > tol:
        return False
    return bool(np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)) >= -tol)


def is_involution(u: CMatrix, tol: float = 1e-10) -> bool:
    """True when u is unitary and u·u = I."""
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    eye = np.eye(u.shape[0])
    return bool(
        np.max(np.abs(u @ u - eye)) <= tol and np.max(np.abs(u @ u.conj().T - eye)) <= tol
    )


def random_unitary(n: int, rng: np.random.Generator) -> CMatrix:
    """Haar-random unitary via QR with the phase correction of the R diagonal."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> CMatrix:
    k = n if rank is None else rank
    g = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
