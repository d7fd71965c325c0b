"""
Channel combining at bit and check nodes and the paired measurement.

The exact path builds the combined channel (``varoast`` / ``boxast``), splits it
with ``paired_measurement`` and reads off the qubit branches with ``pm_reduce``.
The closed forms and the vectorised Bloch combiners are faster routes to the
same branches and are tested against the exact path.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterator, Sequence, TypeVar, Union

import numpy as np

from pmbpqm import qla
from pmbpqm.channel import (
    Channel,
    DeltaGamma,
    GeneralBSCQ,
    QubitBSCQ,
    as_general,
    canonicalize,
    delta_gamma_to_theta_q,
    helstrom_qubit,
    psc,
)
from pmbpqm.errors import ContractViolation

logger = logging.getLogger(__name__)

PRUNE_PROB = 1e-14
PROB_SUM_TOL = 1e-10
COHERENCE_SNAP = 1e-12
CLUSTER_REL_TOL = 1e-10
CLUSTER_ABS_TOL = 1e-14

BIT = "bit"
CHECK = "check"
KINDS = (BIT, CHECK)


# ─────────────────────────────────────────────
#  Types
# ─────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class Pair:
    """One outcome of a paired measurement: the projector |v><v| + |uv><uv|."""

    v: np.ndarray
    uv: np.ndarray
    prob: float

    def projector(self) -> np.ndarray:
        return np.outer(self.v, self.v.conj()) + np.outer(self.uv, self.uv.conj())


@dataclass(frozen=True, eq=False)
class PairedMeasurement:
    pairs: tuple[Pair, ...]

    def __iter__(self) -> Iterator[Pair]:
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def projectors(self) -> list[np.ndarray]:
        return [pair.projector() for pair in self.pairs]

    @property
    def probs(self) -> np.ndarray:
        return np.array([pair.prob for pair in self.pairs])


@dataclass(frozen=True)
class Branch:
    prob: float
    channel: QubitBSCQ


@dataclass(frozen=True)
class BranchDistribution:
    """Orthogonal mixture of qubit channels; the probabilities sum to one."""

    branches: tuple[Branch, ...]

    def __post_init__(self):
        branches = tuple(self.branches)
        if not branches:
            raise ContractViolation("a branch distribution needs at least one branch")
        total = math.fsum(b.prob for b in branches)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ContractViolation(f"branch probabilities sum to {total!r}")
        object.__setattr__(self, "branches", branches)

    @classmethod
    def single(cls, channel: QubitBSCQ) -> "BranchDistribution":
        return cls((Branch(1.0, channel),))

    def __iter__(self) -> Iterator[Branch]:
        return iter(self.branches)

    def __len__(self) -> int:
        return len(self.branches)

    def success(self, p: float = 0.5) -> float:
        """Average Helstrom success of the branches."""
        return math.fsum(b.prob * helstrom_qubit(b.channel, p) for b in self.branches)

    def sorted(self) -> tuple[Branch, ...]:
        return tuple(sorted(self.branches, key=lambda b: (b.channel.theta, b.channel.q, b.prob)))

    @property
    def probs(self) -> np.ndarray:
        return np.array([b.prob for b in self.branches])


Message = Union[QubitBSCQ, BranchDistribution]
T = TypeVar("T")


def _general(w: Channel) -> GeneralBSCQ:
    return as_general(w) if isinstance(w, QubitBSCQ) else w


# ─────────────────────────────────────────────
#  Combining
# ─────────────────────────────────────────────

def varoast(w: Channel, w2: Channel) -> GeneralBSCQ:
    """Bit-node combination: W(z) (x) W'(z) with symmetry U1 (x) U2."""
    a, b = _general(w), _general(w2)
    return GeneralBSCQ(qla.kron(a.rho, b.rho), qla.kron(a.u, b.u))


def boxast(w: Channel, w2: Channel) -> GeneralBSCQ:
    """
    Check-node combination: (1/2) sum_z' W(z + z') (x) W'(z') with symmetry U1 (x) I.

    U1 (x) U2 swaps the two terms of the sum, so it commutes with the output and is
    attached as the stabilizer. Paired measurements diagonalise it inside the
    |00>/|11> degeneracy, which gives the symmetric (alpha = 1) combination.
    """
    a, b = _general(w), _general(w2)
    rho0 = qla.kron(a.rho, b.rho)
    rho1 = qla.kron(a.u @ a.rho @ a.u, b.u @ b.rho @ b.u)
    eye = np.eye(b.dim)
    return GeneralBSCQ(
        0.5 * (rho0 + rho1),
        qla.kron(a.u, eye),
        stabilizer=qla.kron(a.u, b.u),
    )


def combine(kind: str, w: Channel, w2: Channel) -> GeneralBSCQ:
    if kind == BIT:
        return varoast(w, w2)
    if kind == CHECK:
        return boxast(w, w2)
    raise ContractViolation(f"unknown node kind {kind!r}; expected one of {KINDS}")


# ─────────────────────────────────────────────
#  Paired measurement
# ─────────────────────────────────────────────

def _clusters(vals: np.ndarray, tol: float) -> list[list[int]]:
    """Group indices of descending values whose neighbours differ by less than tol."""
    groups: list[list[int]] = []
    for k in range(len(vals)):
        if groups and vals[groups[-1][-1]] - vals[k] < tol:
            groups[-1].append(k)
        else:
            groups.append([k])
    return groups


def _split(block: np.ndarray, op: np.ndarray) -> list[tuple[float, np.ndarray]]:
    """
    Split span(block) into eigenspaces of op compressed onto it.

    Returns (eigenvalue, basis) pairs, largest eigenvalue first.
    """
    if block.shape[1] == 0:
        return []
    comp = block.conj().T @ op @ block
    eig = qla.herm_eig(comp)
    rotated = block @ eig.eigenvectors
    tol = qla.DEGENERACY_TOL * max(1.0, float(np.max(np.abs(eig.eigenvalues))))
    return [
        (float(np.mean(eig.eigenvalues[idx])), rotated[:, idx])
        for idx in _clusters(eig.eigenvalues, tol)
    ]


def _refine(block: np.ndarray, ops: Sequence[np.ndarray]) -> list[tuple[tuple[float, ...], np.ndarray]]:
    """Joint eigenbasis of span(block) for commuting ops, labelled by eigenvalues."""
    parts: list[tuple[tuple[float, ...], np.ndarray]] = [((), block)]
    for op in ops:
        refined = []
        for label, sub in parts:
            for val, piece in _split(sub, op):
                refined.append((label + (val,), piece))
        parts = refined
    return [
        (label, piece[:, [k]])
        for label, piece in parts
        for k in range(piece.shape[1])
    ]


def _null_space_pairs(s: np.ndarray, w: GeneralBSCQ) -> list[tuple[np.ndarray, np.ndarray]]:
    """
    Pairs spanning the zero eigenspace of W(0) - W(1).

    U restricted to the null space is diagonalised together with the stabilizer
    and with rho, then redefined on the larger sign class so that both signs
    occur equally often. Vectors with the same stabilizer eigenvalue are paired.
    """
    plus: list[tuple[tuple[float, ...], np.ndarray]] = []
    minus: list[tuple[tuple[float, ...], np.ndarray]] = []
    ops = ([w.stabilizer] if w.stabilizer is not None else []) + [w.rho]
    for val, sub in _split(s, w.u):
        target = plus if val > 0 else minus
        target.extend(_refine(sub, ops))

    # rho_S eigenvectors moved between sign classes keep U rho U = rho on S
    while len(plus) > len(minus):
        minus.append(plus.pop())
    while len(minus) > len(plus):
        plus.append(minus.pop())

    def stab_key(item):
        label, _ = item
        return -label[0] if w.stabilizer is not None else 0.0

    plus.sort(key=stab_key)
    minus.sort(key=stab_key)
    pairs = []
    for (_, up), (_, um) in zip(plus, minus):
        up, um = up[:, 0], um[:, 0]
        pairs.append(((up + um) / math.sqrt(2.0), (up - um) / math.sqrt(2.0)))
    return pairs


def paired_measurement(w: Channel) -> PairedMeasurement:
    """
    Paired measurement of a BSCQ channel.

    Positive eigenvectors v of D = W(0) - W(1) are paired with U v. Inside a
    degenerate positive cluster the stabilizer, when present, fixes the basis.
    The zero eigenspace is paired by ``_null_space_pairs``. Outcome j has
    probability Tr[(|v><v| + |Uv><Uv|) W(0)].

    Raises:
        ContractViolation: If the channel has odd dimension
    """
    w = _general(w)
    if w.dim % 2:
        raise ContractViolation(f"paired measurement needs even dimension, got {w.dim}")
    rho, u = w.rho, w.u
    d = rho - u @ rho @ u
    eig = qla.herm_eig(d)
    lam, vecs = eig
    scale = float(np.max(np.abs(lam)))
    tol = CLUSTER_REL_TOL * scale + CLUSTER_ABS_TOL

    vectors: list[tuple[np.ndarray, np.ndarray]] = []
    pos_idx = np.flatnonzero(lam > tol)
    for cluster in _clusters(lam[pos_idx], tol):
        block = vecs[:, pos_idx[cluster]]
        if len(cluster) > 1 and w.stabilizer is not None:
            block = np.hstack([piece for _, piece in _refine(block, [w.stabilizer])])
        for k in range(block.shape[1]):
            v = block[:, k]
            vectors.append((v, u @ v))

    zero = np.abs(lam) <= tol
    if np.any(zero):
        vectors.extend(_null_space_pairs(vecs[:, zero], w))

    if 2 * len(vectors) != w.dim:
        raise ContractViolation(
            f"paired measurement found {len(vectors)} pairs for dimension {w.dim}; "
            "the spectrum of W(0) - W(1) is not symmetric"
        )

    pairs = []
    for v, uv in vectors:
        prob = float(np.real(v.conj() @ rho @ v + uv.conj() @ rho @ uv))
        pairs.append(Pair(v=v, uv=uv, prob=max(prob, 0.0)))
    logger.debug("paired measurement: dim=%d pairs=%d zero-space=%d", w.dim, len(pairs), int(zero.sum()))
    return PairedMeasurement(tuple(pairs))


def pm_reduce(w: Channel) -> BranchDistribution:
    """
    Apply the paired measurement and return the post-measurement qubit channels.

    Branch j is rho compressed onto (v_j, U v_j), divided by p_j and
    canonicalised with symmetry sigma_x. Branches with p_j < 1e-14 are dropped.
    """
    g = _general(w)
    branches = [
        Branch(pair.prob, _branch_channel(g, pair))
        for pair in paired_measurement(g)
        if pair.prob >= PRUNE_PROB
    ]
    return BranchDistribution(tuple(branches))


def _branch_channel(g: GeneralBSCQ, pair: Pair) -> QubitBSCQ:
    basis = np.column_stack([pair.v, pair.uv])
    m = basis.conj().T @ g.rho @ basis
    m = (m + m.conj().T) / 2
    return canonicalize(GeneralBSCQ(m / np.trace(m).real, qla.SX))


# ─────────────────────────────────────────────
#  Closed forms
# ─────────────────────────────────────────────

def _fold(theta: float) -> float:
    return math.pi - theta if theta > math.pi / 2 else theta


def psc_check_closed(theta: float, theta2: float) -> BranchDistribution:
    """Check combining of two pure-state channels."""
    c1, c2 = math.cos(theta), math.cos(theta2)
    p0 = 0.5 * (1.0 + c1 * c2)
    branches = []
    if p0 >= PRUNE_PROB:
        t0 = math.acos(min(1.0, max(-1.0, (c1 + c2) / (1.0 + c1 * c2))))
        branches.append(Branch(p0, psc(_fold(t0))))
    if 1.0 - p0 >= PRUNE_PROB:
        t1 = math.acos(min(1.0, max(-1.0, (c1 - c2) / (1.0 - c1 * c2))))
        branches.append(Branch(1.0 - p0, psc(_fold(t1))))
    return BranchDistribution(tuple(branches))


def psc_bit_closed(theta: float, theta2: float) -> BranchDistribution:
    c = math.cos(theta) * math.cos(theta2)
    return BranchDistribution.single(psc(math.acos(min(1.0, max(-1.0, c)))))


def _as_dg(dg) -> DeltaGamma:
    if isinstance(dg, DeltaGamma):
        return dg
    if isinstance(dg, QubitBSCQ):
        return dg.delta_gamma
    return DeltaGamma(*dg)


def dg_check_closed(dg1, dg2) -> BranchDistribution:
    """
    Check combining in (delta, gamma) parameters with the alpha = 1 measurement.

    The entries below are those of the unnormalised post-measurement matrix, whose
    trace is the outcome probability.
    """
    a, b = _as_dg(dg1), _as_dg(dg2)
    d1, d2, g1, g2 = a.delta, b.delta, a.gamma, b.gamma
    p0 = 0.5 + 2.0 * g1 * g2
    unnormalised = (
        (p0, 0.5 * (2 * g1 * g2 + 2 * d1 * d2 - d1 - d2 + 1), 0.5 * (g1 + g2)),
        (1.0 - p0, 0.5 * (-2 * g1 * g2 + 2 * d1 * d2 - d1 - d2 + 1), 0.5 * (g1 - g2)),
    )
    branches = []
    for p, delta, gamma in unnormalised:
        if p < PRUNE_PROB:
            continue
        branches.append(Branch(p, delta_gamma_to_theta_q(DeltaGamma(delta / p, gamma / p))))
    return BranchDistribution(tuple(branches))


def dg_bit_closed(dg) -> tuple[tuple[float, np.ndarray], tuple[float, np.ndarray]]:
    """
    Closed form for bit combining two copies of one (delta, gamma) channel.

    Returns ((p0, rho0), (p1, rho1)) with the post-measurement matrices as the
    formula gives them; they are not canonicalised or validated here.
    """
    c = _as_dg(dg)
    d, g = c.delta, c.gamma
    s = math.sqrt(4 * g * g + 1)
    p0 = (2 * (d - 1) * d + 6 * g * g + 1) / (4 * g * g + 1)
    rho0 = np.array([[0.5, -2 * g * g], [-2 * g * g, 0.5]])
    denom = 4 * (d - 1) * d + 12 * g * g + 2
    top = (2 * d * d - 2 * d * (4 * s * g * g + s + 1) + g * g * (4 * s + 6) + s + 1) / denom
    bottom = (2 * d * d + 2 * d * (4 * s * g * g + s - 1) + g * g * (6 - 4 * s) - s + 1) / denom
    off = 2 * g * g * (-2 * (d - 1) * d + 2 * g * g + 1) / (2 * (d - 1) * d + 6 * g * g + 1)
    rho1 = np.array([[top, off], [off, bottom]])
    return (p0, rho0), (1.0 - p0, rho1)


@dataclass(frozen=True)
class ClosedFormReport:
    """Deviation of a closed form from the numerical paired measurement."""

    oracle: BranchDistribution
    closed_probs: tuple[float, ...]
    closed_channels: tuple[QubitBSCQ | None, ...]
    prob_deviation: float
    param_deviation: float
    tolerance: float = 1e-6

    @property
    def matches(self) -> bool:
        return self.prob_deviation <= self.tolerance and self.param_deviation <= self.tolerance


def _qubit_or_none(m: np.ndarray) -> QubitBSCQ | None:
    try:
        return canonicalize(GeneralBSCQ(m, qla.SX))
    except ContractViolation:
        return None


def compare_dg_bit_closed(dg) -> ClosedFormReport:
    """
    Compare ``dg_bit_closed`` against pm_reduce(varoast(W, W)).

    Branches are matched by position: the positive eigenvector pair comes first
    in both. A matrix that is not a density matrix counts as an infinite deviation.
    """
    c = _as_dg(dg)
    w = GeneralBSCQ(c.matrix(), qla.SX)
    g = varoast(w, w)
    meas = paired_measurement(g)

    closed = dg_bit_closed(c)
    probs = tuple(p for p, _ in closed)
    channels = tuple(_qubit_or_none(m) for _, m in closed)

    prob_dev = 0.0
    param_dev = 0.0
    for p, ch, pair in zip(probs, channels, meas):
        prob_dev = max(prob_dev, abs(p - pair.prob))
        if pair.prob < PRUNE_PROB:
            continue
        ref = _branch_channel(g, pair)
        if ch is None:
            param_dev = math.inf
        else:
            param_dev = max(param_dev, abs(ch.theta - ref.theta), abs(ch.q - ref.q))

    report = ClosedFormReport(
        oracle=pm_reduce(g),
        closed_probs=probs,
        closed_channels=channels,
        prob_deviation=prob_dev,
        param_deviation=param_dev,
    )
    if not report.matches:
        logger.warning(
            "(delta, gamma) bit-node closed form deviates from the paired measurement "
            "(prob %.3e, params %.3e) at delta=%.6g gamma=%.6g",
            prob_dev, param_dev, c.delta, c.gamma,
        )
    return report


# ─────────────────────────────────────────────
#  Vectorised Bloch combiners
# ─────────────────────────────────────────────

def canonical_to_bloch(theta, q) -> tuple[np.ndarray, np.ndarray]:
    """(x, z) with x = 2 gamma along the symmetry axis and z = 2 delta - 1 across it."""
    theta = np.asarray(theta, dtype=float)
    r = 1.0 - np.asarray(q, dtype=float)
    return r * np.cos(theta), -r * np.sin(theta)


def bloch_to_canonical(x, z) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``bloch_canonical``; coherences below 1e-12 are snapped to zero."""
    x = np.abs(np.asarray(x, dtype=float))
    z = np.abs(np.asarray(z, dtype=float))
    x = np.where(x < COHERENCE_SNAP, 0.0, x)
    r = np.hypot(x, z)
    theta = np.arctan2(z, x)
    q = 1.0 - r
    worthless = q >= 1.0 - 1e-12
    theta = np.where(worthless, 0.0, theta)
    q = np.where(worthless, 1.0, np.where(q < 1e-13, 0.0, np.clip(q, 0.0, 1.0)))
    return theta, q


def check_combine_bloch(x1, z1, x2, z2) -> tuple[tuple[np.ndarray, np.ndarray, np.ndarray], ...]:
    """
    Check combining of qubit channels in Bloch coordinates, elementwise.

    Returns ((p0, x0, z0), (p1, x1, z1)). A branch with zero probability gets
    x = z = 0.
    """
    x1, z1, x2, z2 = (np.asarray(a, dtype=float) for a in (x1, z1, x2, z2))
    xx, zz = x1 * x2, z1 * z2
    out = []
    for sign in (1.0, -1.0):
        p = 0.5 * (1.0 + sign * xx)
        safe = np.where(p > PRUNE_PROB, 2.0 * p, 1.0)
        live = p > PRUNE_PROB
        out.append((
            p,
            np.where(live, (x1 + sign * x2) / safe, 0.0),
            np.where(live, zz / safe, 0.0),
        ))
    return tuple(out)


def bit_combine_bloch(x1, z1, x2, z2) -> tuple[tuple[np.ndarray, np.ndarray, np.ndarray], ...]:
    """
    Bit combining of qubit channels in Bloch coordinates, elementwise.

    In the Hadamard frame U = Z (x) Z and D = W(0) - W(1) only couples the +1
    space {|00>, |11>} to the -1 space {|01>, |10>}. Its coupling block B has
    singular triples (s, w, u) with B w = s u; each gives the pair
    v = (w + u)/sqrt(2) with p = <w|rho|w> + <u|rho|u>, z' = s/p and
    x' = (<w|rho|w> - <u|rho|u>)/p.

    Returns two (p, x, z) triples, largest singular value first.
    """
    x1, z1, x2, z2 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x1, z1, x2, z2)))
    shape = x1.shape
    x1, z1, x2, z2 = (a.reshape(-1) for a in (x1, z1, x2, z2))
    n = x1.size

    b = np.empty((n, 2, 2))
    b[:, 0, 0] = z2 * (1 + x1)
    b[:, 0, 1] = z1 * (1 - x2)
    b[:, 1, 0] = z1 * (1 + x2)
    b[:, 1, 1] = z2 * (1 - x1)
    b *= 0.5

    rho_plus = np.empty((n, 2, 2))
    rho_plus[:, 0, 0] = (1 + x1) * (1 + x2)
    rho_plus[:, 0, 1] = rho_plus[:, 1, 0] = z1 * z2
    rho_plus[:, 1, 1] = (1 - x1) * (1 - x2)
    rho_plus *= 0.25

    rho_minus = np.empty((n, 2, 2))
    rho_minus[:, 0, 0] = (1 + x1) * (1 - x2)
    rho_minus[:, 0, 1] = rho_minus[:, 1, 0] = z1 * z2
    rho_minus[:, 1, 1] = (1 - x1) * (1 + x2)
    rho_minus *= 0.25

    # b = U S Vh: columns of U live in the -1 space, rows of Vh in the +1 space
    left, sing, right_h = np.linalg.svd(b)
    out = []
    for k in range(2):
        wv = right_h[:, k, :]
        uv = left[:, :, k]
        a = np.einsum("ni,nij,nj->n", wv, rho_plus, wv)
        c = np.einsum("ni,nij,nj->n", uv, rho_minus, uv)
        p = a + c
        live = p > PRUNE_PROB
        safe = np.where(live, p, 1.0)
        out.append((
            p.reshape(shape),
            np.where(live, (a - c) / safe, 0.0).reshape(shape),
            np.where(live, sing[:, k] / safe, 0.0).reshape(shape),
        ))
    return tuple(out)


@lru_cache(maxsize=65536)
def combine_qubits(kind: str, w1: QubitBSCQ, w2: QubitBSCQ) -> BranchDistribution:
    """pm_reduce of the bit or check combination of two qubit channels (memoised)."""
    return pm_reduce(combine(kind, w1, w2))


def pairwise_reduce(items: Sequence[T], fn: Callable[[T, T], T]) -> T:
    """Combine (1,2), (3,4), ... carrying an odd leftover, until one item remains."""
    level = list(items)
    if not level:
        raise ContractViolation("nothing to combine")
    while len(level) > 1:
        nxt = [fn(level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def _as_distribution(m: Message) -> BranchDistribution:
    return BranchDistribution.single(m) if isinstance(m, QubitBSCQ) else m


def _combine_distributions(kind: str, a: BranchDistribution, b: BranchDistribution) -> BranchDistribution:
    out = []
    for ba in a:
        for bb in b:
            for bc in combine_qubits(kind, ba.channel, bb.channel):
                out.append(Branch(ba.prob * bb.prob * bc.prob, bc.channel))
    return BranchDistribution(tuple(out))


def reduce_node(kind: str, messages: Sequence[Message], own: QubitBSCQ | None = None) -> BranchDistribution:
    """
    Reduce the incoming messages of a node to one qubit channel, enumerating every outcome.

    Messages are combined in pairs (1,2), (3,4), ... with an odd leftover carried to
    the next round, until one remains; a bit node then combines its own channel last.

    Raises:
        ContractViolation: If there is nothing to combine or kind is unknown
    """
    if kind not in KINDS:
        raise ContractViolation(f"unknown node kind {kind!r}; expected one of {KINDS}")
    level = [_as_distribution(m) for m in messages]
    if own is not None and kind == CHECK:
        raise ContractViolation("check nodes have no channel of their own")
    if not level:
        if own is None:
            raise ContractViolation("reduce_node needs at least one message")
        return BranchDistribution.single(own)

    result = pairwise_reduce(level, lambda a, b: _combine_distributions(kind, a, b))
    if own is not None:
        result = _combine_distributions(BIT, result, BranchDistribution.single(own))
    logger.debug("reduce_node(%s): %d messages -> %d branches", kind, len(messages), len(result))
    return result


def sample_branch(dist: BranchDistribution, rng: np.random.Generator) -> QubitBSCQ:
    """Draw one branch channel with its probability."""
    u = rng.random()
    acc = 0.0
    for b in dist:
        acc += b.prob
        if u < acc:
            return b.channel
    return dist.branches[-1].channel
