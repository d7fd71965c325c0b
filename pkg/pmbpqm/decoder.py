"""
Decoding the root bit of a tree factor graph.

Every method assumes the all-zero codeword; ``pmbpqm_codeword`` checks that
assumption by simulating the measurements against any codeword's states.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Iterator, Mapping, Optional, Sequence

import numpy as np

from pmbpqm import config, qla
from pmbpqm.channel import (
    GeneralBSCQ,
    QubitBSCQ,
    as_general,
    canonicalize,
    density,
    helstrom_projector,
    helstrom_qubit,
    helstrom_success,
)
from pmbpqm.combine import (
    BIT,
    CHECK,
    PRUNE_PROB,
    BranchDistribution,
    combine,
    combine_qubits,
    paired_measurement,
    pairwise_reduce,
    reduce_node,
    sample_branch,
)
from pmbpqm.errors import ContractViolation, GraphError, ResourceLimitError

logger = logging.getLogger(__name__)


class NodeKind(str, Enum):
    VARIABLE = "variable"
    CHECK = "check"


class Method(str, Enum):
    PMBPQM_EXACT = "pmbpqm_exact"
    PMBPQM_MC = "pmbpqm_mc"
    HELSTROM = "helstrom"
    LOCALLY_GREEDY = "locally_greedy"


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    children: tuple[int, ...] = ()
    channel: Optional[QubitBSCQ] = None

    def __post_init__(self):
        try:
            kind = NodeKind(self.kind)
        except ValueError:
            raise GraphError(f"node {self.id!r}: unknown kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "children", tuple(int(c) for c in self.children))

    @property
    def is_variable(self) -> bool:
        return self.kind is NodeKind.VARIABLE

    @property
    def observed(self) -> bool:
        return self.channel is not None


@dataclass(frozen=True)
class DecodeResult:
    success_prob: float
    branch_count: int
    method: Method


class TreeFactorGraph:
    """
    Rooted tree factor graph with variable and check nodes.

    Each check node states that its parent equals the XOR of its children.

    Raises:
        GraphError: If the nodes do not form a valid tree rooted at a variable node
    """

    def __init__(self, nodes: Sequence[Node], root: int):
        self._nodes: dict[int, Node] = {}
        for node in nodes:
            if node.id in self._nodes:
                raise GraphError(f"duplicate node id {node.id}")
            self._nodes[node.id] = node
        self.root = root
        self._parent: dict[int, int] = {}
        self._validate()
        self._depth: dict[int, int] = {}
        for nid in reversed(list(self._preorder(self.root))):
            kids = self._nodes[nid].children
            self._depth[nid] = 1 + max((self._depth[c] for c in kids), default=-1)

    def _validate(self):
        if self.root not in self._nodes:
            raise GraphError(f"root {self.root} is not a node")
        if not self._nodes[self.root].is_variable:
            raise GraphError("the root must be a variable node")

        for node in self._nodes.values():
            for child in node.children:
                if child not in self._nodes:
                    raise GraphError(f"node {node.id} refers to unknown child {child}")
                if child == self.root:
                    raise GraphError(f"node {node.id} lists the root as a child")
                if child in self._parent:
                    raise GraphError(f"node {child} has two parents ({self._parent[child]} and {node.id})")
                if self._nodes[child].kind is node.kind:
                    raise GraphError(f"edge {node.id} -> {child} joins two {node.kind.value} nodes")
                self._parent[child] = node.id

            if node.is_variable:
                if not node.children and not node.observed:
                    raise GraphError(f"leaf variable {node.id} has no channel")
            else:
                if node.channel is not None:
                    raise GraphError(f"check node {node.id} cannot carry a channel")
                if not node.children:
                    raise GraphError(f"check node {node.id} needs at least two neighbours")

        reached = set(self._preorder(self.root))
        if len(reached) != len(self._nodes):
            missing = sorted(set(self._nodes) - reached)
            raise GraphError(f"nodes {missing} are not reachable from the root")

    def _preorder(self, start: int) -> Iterator[int]:
        stack = [start]
        seen = set()
        while stack:
            nid = stack.pop()
            if nid in seen:
                raise GraphError(f"node {nid} is reachable twice; the graph has a cycle")
            seen.add(nid)
            yield nid
            stack.extend(sorted(self._nodes[nid].children, reverse=True))

    # ─────────────────────────────────────────────
    #  Queries
    # ─────────────────────────────────────────────

    def __getitem__(self, nid: int) -> Node:
        return self._nodes[nid]

    def __iter__(self) -> Iterator[Node]:
        return (self._nodes[nid] for nid in self._preorder(self.root))

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def nodes(self) -> tuple[Node, ...]:
        return tuple(self)

    def children(self, nid: int) -> list[int]:
        return sorted(self._nodes[nid].children)

    def parent(self, nid: int) -> Optional[int]:
        return self._parent.get(nid)

    def depth(self, nid: int) -> int:
        """Height of the subtree below nid (a leaf has depth 0)."""
        return self._depth[nid]

    def observed(self) -> list[int]:
        """Observed variable ids in depth-first order."""
        return [n.id for n in self if n.is_variable and n.observed]

    @property
    def n_qubits(self) -> int:
        return len(self.observed())

    def variables(self) -> list[int]:
        return [n.id for n in self if n.is_variable]

    def codewords(self, root_value: Optional[int] = None) -> Iterator[dict[int, int]]:
        """Yield every assignment of the variables that satisfies all checks."""
        roots = (0, 1) if root_value is None else (root_value,)
        for z in roots:
            yield from self._assign(self.root, z, {})

    def _assign(self, vid: int, value: int, partial: dict[int, int]) -> Iterator[dict[int, int]]:
        partial = {**partial, vid: value}
        yield from self._assign_checks(self.children(vid), value, partial)

    def _assign_checks(self, checks: list[int], value: int, partial: dict[int, int]) -> Iterator[dict[int, int]]:
        if not checks:
            yield partial
            return
        head, rest = checks[0], checks[1:]
        kids = self.children(head)
        for bits in itertools.product((0, 1), repeat=len(kids) - 1):
            last = value ^ (sum(bits) % 2)
            assignments = [partial]
            for kid, bit in zip(kids, bits + (last,)):
                assignments = [a for prev in assignments for a in self._assign(kid, bit, prev)]
            for a in assignments:
                yield from self._assign_checks(rest, value, a)

    def with_channels(self, fn: Callable[[QubitBSCQ], QubitBSCQ]) -> "TreeFactorGraph":
        """Copy of the graph with every channel replaced by fn(channel)."""
        nodes = [
            replace(n, channel=fn(n.channel)) if n.channel is not None else n
            for n in self._nodes.values()
        ]
        return TreeFactorGraph(nodes, self.root)

    def __repr__(self) -> str:
        return f"TreeFactorGraph(root={self.root}, nodes={len(self._nodes)}, qubits={self.n_qubits})"


# ─────────────────────────────────────────────
#  PMBPQM
# ─────────────────────────────────────────────

def _message(g: TreeFactorGraph, nid: int) -> BranchDistribution:
    node = g[nid]
    msgs = [_message(g, c) for c in g.children(nid)]
    if node.is_variable:
        return reduce_node(BIT, msgs, own=node.channel)
    return reduce_node(CHECK, msgs)


def pmbpqm_exact(g: TreeFactorGraph) -> DecodeResult:
    """Success probability of paired-measurement BPQM, enumerating every outcome."""
    dist = _message(g, g.root)
    result = DecodeResult(dist.success(), len(dist), Method.PMBPQM_EXACT)
    logger.debug("pmbpqm_exact: %d branches, success %.12g", result.branch_count, result.success_prob)
    return result


def _sample_message(g: TreeFactorGraph, nid: int, rng: np.random.Generator) -> QubitBSCQ:
    node = g[nid]
    msgs = [_sample_message(g, c, rng) for c in g.children(nid)]
    kind = BIT if node.is_variable else CHECK

    def step(a: QubitBSCQ, b: QubitBSCQ) -> QubitBSCQ:
        return sample_branch(combine_qubits(kind, a, b), rng)

    if not msgs:
        return node.channel
    out = pairwise_reduce(msgs, step)
    if node.channel is not None:
        out = sample_branch(combine_qubits(BIT, out, node.channel), rng)
    return out


def pmbpqm_mc(g: TreeFactorGraph, trials: int = config.MC_TRIALS, seed: int = config.SEED) -> DecodeResult:
    """Monte-Carlo estimate of ``pmbpqm_exact``: one sampled outcome per combining step."""
    if trials < 1:
        raise ContractViolation(f"trials must be at least 1, got {trials}")
    rng = np.random.default_rng(seed)
    total = math.fsum(helstrom_qubit(_sample_message(g, g.root, rng)) for _ in range(trials))
    return DecodeResult(total / trials, trials, Method.PMBPQM_MC)


# ─────────────────────────────────────────────
#  Collective Helstrom
# ─────────────────────────────────────────────

def _joint_states(g: TreeFactorGraph, nid: int) -> tuple[np.ndarray, np.ndarray]:
    node = g[nid]
    parts = [_joint_states(g, c) for c in g.children(nid)]
    if node.is_variable:
        if node.channel is not None:
            parts.append((density(node.channel, 0), density(node.channel, 1)))
        return pairwise_reduce(parts, lambda a, b: (np.kron(a[0], b[0]), np.kron(a[1], b[1])))

    def check(a, b):
        return (
            0.5 * (np.kron(a[0], b[0]) + np.kron(a[1], b[1])),
            0.5 * (np.kron(a[1], b[0]) + np.kron(a[0], b[1])),
        )

    return pairwise_reduce(parts, check)


def collective_states(g: TreeFactorGraph) -> tuple[np.ndarray, np.ndarray]:
    """
    Joint output states for root value 0 and 1, averaged over matching codewords.

    The qubits appear in the order the combining visits them rather than in id order.

    Raises:
        ResourceLimitError: If the graph has more observed qubits than the configured cap
    """
    n = g.n_qubits
    if n > config.MAX_HELSTROM_QUBITS:
        raise ResourceLimitError(
            f"collective Helstrom on {n} qubits exceeds the cap of {config.MAX_HELSTROM_QUBITS} "
            "(PMBPQM_MAX_HELSTROM_QUBITS)"
        )
    return _joint_states(g, g.root)


def collective_helstrom(g: TreeFactorGraph) -> DecodeResult:
    """Optimal success probability over all joint measurements of the observed qubits."""
    rho0, rho1 = collective_states(g)
    logger.debug("collective Helstrom: dimension %d", rho0.shape[0])
    return DecodeResult(helstrom_success(rho0, rho1, 0.5), 1, Method.HELSTROM)


# ─────────────────────────────────────────────
#  Codeword-level simulation
# ─────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class _Track:
    prob: float
    hypothesis: GeneralBSCQ
    state: np.ndarray


def _compress(m: np.ndarray, basis: np.ndarray) -> tuple[float, np.ndarray]:
    c = basis.conj().T @ m @ basis
    c = (c + c.conj().T) / 2
    tr = float(np.trace(c).real)
    return tr, (c / tr if tr > 0 else c)


def _combine_tracks(kind: str, ta: list[_Track], tb: list[_Track]) -> list[_Track]:
    out = []
    for a in ta:
        for b in tb:
            hyp = combine(kind, a.hypothesis, b.hypothesis)
            state = np.kron(a.state, b.state)
            for pair in paired_measurement(hyp):
                if pair.prob < PRUNE_PROB:
                    continue
                basis = np.column_stack([pair.v, pair.uv])
                p_state, post = _compress(state, basis)
                if p_state < PRUNE_PROB:
                    continue
                _, h = _compress(hyp.rho, basis)
                out.append(_Track(a.prob * b.prob * p_state, GeneralBSCQ(h, qla.SX), post))
    return out


def _codeword_tracks(g: TreeFactorGraph, nid: int, codeword: Mapping[int, int]) -> list[_Track]:
    node = g[nid]
    kids = [_codeword_tracks(g, c, codeword) for c in g.children(nid)]
    kind = BIT if node.is_variable else CHECK
    own = None
    if node.channel is not None:
        own = [_Track(1.0, as_general(node.channel), density(node.channel, codeword[nid]))]
    if not kids:
        return own
    out = pairwise_reduce(kids, lambda a, b: _combine_tracks(kind, a, b))
    if own is not None:
        out = _combine_tracks(BIT, out, own)
    return out


def pmbpqm_codeword(g: TreeFactorGraph, codeword: Mapping[int, int]) -> float:
    """
    Root success of PMBPQM when the qubits carry the given codeword.

    The measurements are the ones chosen from the channel hypotheses; only the
    physical states change. Outcomes in the zero space of the final Helstrom
    measurement are guessed uniformly.

    Raises:
        ContractViolation: If the assignment is not a codeword of g
    """
    missing = [v for v in g.variables() if v not in codeword]
    if missing:
        raise ContractViolation(f"codeword has no value for variables {missing}")
    for node in g:
        if not node.is_variable:
            parity = codeword[g.parent(node.id)] ^ (sum(codeword[c] for c in node.children) % 2)
            if parity:
                raise ContractViolation(f"assignment violates check {node.id}")

    z = codeword[g.root]
    total = 0.0
    for track in _codeword_tracks(g, g.root, codeword):
        h = track.hypothesis
        plus, zero = helstrom_projector(h.output(0), h.output(1))
        minus = np.eye(2) - plus - zero
        right = plus if z == 0 else minus
        hit = np.trace(right @ track.state).real + 0.5 * np.trace(zero @ track.state).real
        total += track.prob * float(hit)
    return total


# ─────────────────────────────────────────────
#  Locally greedy
# ─────────────────────────────────────────────

_NEGLIGIBLE = 1e-15


@dataclass(frozen=True, eq=False)
class _Record:
    """Likelihoods P(records | bit = 0), P(records | bit = 1) and an unmeasured qubit."""

    like: np.ndarray
    qubit: Optional[QubitBSCQ] = None


def _xor_conv(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    return np.array([f[0] * g[0] + f[1] * g[1], f[0] * g[1] + f[1] * g[0]])


def _likelihood(values) -> np.ndarray:
    # traces of PSD products; round-off can leave them a few ulps below zero
    return np.clip(np.asarray(values, dtype=float), 0.0, None)


def _normalised_prior(weights: np.ndarray) -> float:
    w = _likelihood(weights)
    total = float(w.sum())
    return 0.5 if total <= 0 else min(1.0, max(0.0, float(w[0]) / total))


def _helstrom_split(rho0: np.ndarray, rho1: np.ndarray, prior: float) -> tuple[np.ndarray, np.ndarray]:
    plus, _ = helstrom_projector(rho0, rho1, prior)
    return plus, np.eye(plus.shape[0]) - plus


@dataclass(frozen=True, eq=False)
class _Unit:
    """Qubits measured together at a check: one child or a pair of children."""

    members: tuple[_Record, ...]

    def states(self) -> dict[tuple[int, ...], tuple[float, np.ndarray]]:
        """(weight, joint state) for every assignment of the members' bits."""
        out = {}
        for bits in itertools.product((0, 1), repeat=len(self.members)):
            weight = 1.0
            state = np.ones((1, 1))
            for rec, bit in zip(self.members, bits):
                weight *= float(rec.like[bit])
                state = np.kron(state, density(rec.qubit, bit))
            out[bits] = (weight, state)
        return out

    def parity_weights(self) -> np.ndarray:
        n = np.zeros(2)
        for bits, (weight, _) in self.states().items():
            n[sum(bits) % 2] += weight
        return n


def _measure_unit(unit: _Unit, prior: float) -> list[np.ndarray]:
    """Local Helstrom on the unit's parity; returns its updated parity function per outcome."""
    states = unit.states()
    dim = next(iter(states.values()))[1].shape[0]
    hyp = [np.zeros((dim, dim)), np.zeros((dim, dim))]
    weights = np.zeros(2)
    for bits, (weight, state) in states.items():
        s = sum(bits) % 2
        hyp[s] = hyp[s] + weight * state
        weights[s] += weight
    hyp = [h / w if w > 0 else np.eye(dim) / dim for h, w in zip(hyp, weights)]

    outcomes = []
    for proj in _helstrom_split(hyp[0], hyp[1], prior):
        f = np.zeros(2)
        for bits, (weight, state) in states.items():
            f[sum(bits) % 2] += weight * float(np.trace(proj @ state).real)
        outcomes.append(_likelihood(f))
    return outcomes


class _GreedyDecoder:
    """Exact enumeration of the locally greedy measurement schedule."""

    def __init__(self, g: TreeFactorGraph):
        self.g = g
        self._cache: dict[int, list[_Record]] = {}

    def child_order(self, nid: int) -> list[int]:
        return sorted(self.g.children(nid), key=lambda c: (-self.g.depth(c), c))

    def measure_same(self, a: QubitBSCQ, b: Optional[QubitBSCQ], like: np.ndarray) -> list[np.ndarray]:
        """Measure qubits that all carry the variable's own bit, with its current prior."""
        rho = [density(a, z) if b is None else np.kron(density(a, z), density(b, z)) for z in (0, 1)]
        out = []
        for proj in _helstrom_split(rho[0], rho[1], _normalised_prior(like)):
            new = like * _likelihood([np.trace(proj @ r).real for r in rho])
            if new.sum() > _NEGLIGIBLE * like.sum():
                out.append(new)
        return out

    def variable(self, nid: int) -> list[_Record]:
        if nid in self._cache:
            return self._cache[nid]
        node = self.g[nid]
        states: list[tuple[np.ndarray, list[QubitBSCQ]]] = [(np.ones(2), [])]
        for cid in self.child_order(nid):
            nxt = []
            for like, pending in states:
                for rec in self.check(cid, like):
                    joint = like * rec.like
                    held = pending + ([rec.qubit] if rec.qubit is not None else [])
                    if len(held) == 2:
                        nxt.extend((l, []) for l in self.measure_same(held[0], held[1], joint))
                    else:
                        nxt.append((joint, held))
            states = nxt

        records = []
        for like, pending in states:
            if pending and node.channel is not None:
                for l in self.measure_same(pending[0], None, like):
                    records.append(_Record(l, node.channel))
            else:
                records.append(_Record(like, pending[0] if pending else node.channel))
        self._cache[nid] = records
        return records

    def check(self, cid: int, parent_like: np.ndarray) -> list[_Record]:
        kids = self.g.children(cid)
        child_records = [self.variable(k) for k in kids]
        if len(kids) == 1:
            return child_records[0]

        out = []
        scale = 0.5 ** (len(kids) - 1)
        for combo in itertools.product(*child_records):
            classical = [r.like for r in combo if r.qubit is None]
            quantum = [r for r in combo if r.qubit is not None]
            units = [_Unit(tuple(quantum[i:i + 2])) for i in range(0, len(quantum), 2)]
            branches = [[u.parity_weights() for u in units]]
            for k, unit in enumerate(units):
                nxt = []
                for funcs in branches:
                    # parity of everything else at this check; [1, 0] is the XOR identity
                    rest = np.array([1.0, 0.0])
                    for f in classical + [f for j, f in enumerate(funcs) if j != k]:
                        rest = _xor_conv(rest, f)
                    prior_weights = funcs[k] * _xor_conv(parent_like, rest)
                    for f in _measure_unit(unit, _normalised_prior(prior_weights)):
                        if f.sum() > _NEGLIGIBLE * funcs[k].sum():
                            nxt.append(funcs[:k] + [f] + funcs[k + 1:])
                branches = nxt
            for funcs in branches:
                total = None
                for f in classical + funcs:
                    total = f if total is None else _xor_conv(total, f)
                out.append(_Record(scale * total))
        return out

    def success(self) -> tuple[float, int]:
        root = self.g[self.g.root]
        total = 0.0
        records = self.variable(self.g.root)
        for rec in records:
            weight = 0.5 * float(rec.like.sum())
            prior = _normalised_prior(rec.like)
            if rec.qubit is None:
                total += weight * max(prior, 1.0 - prior)
            else:
                total += weight * helstrom_qubit(rec.qubit, prior)
        logger.debug("locally greedy: %d outcome records at root %s", len(records), root.id)
        return total, len(records)


def locally_greedy(g: TreeFactorGraph) -> DecodeResult:
    """
    Measure-up-the-tree decoder that uses only local Helstrom measurements.

    Qubits are measured one or two at a time with the Helstrom measurement for
    the posterior of the hypothesis they bear on, given every outcome so far.
    Outcomes are enumerated exactly and combined by Bayes' rule.
    """
    success, count = _GreedyDecoder(g).success()
    return DecodeResult(success, count, Method.LOCALLY_GREEDY)


# ─────────────────────────────────────────────
#  Local measurements on the 3-qubit instance
# ─────────────────────────────────────────────

GROUPINGS = (
    ("lambda1+lambda2", (0, 1)),
    ("lambda1+-lambda1", (0, 3)),
    ("lambda1+-lambda2", (0, 2)),
)


def grouped_local_measurements(w: GeneralBSCQ, root: QubitBSCQ) -> list[tuple[str, float]]:
    """
    Success of measuring the two children with a grouping of their Helstrom projectors.

    Each rank-two grouping {P, I - P} of the eigenprojectors of W(0) - W(1) is a
    binary measurement on the children. The children keep their projected state,
    and for each outcome the root and the projected children are discriminated
    jointly: success = sum over P of (Tr(A + B) + ||A - B||_1) / 2 with
    A = W_root(0) (x) P W(0) P / 2 and B = W_root(1) (x) P W(1) P / 2.

    Raises:
        ContractViolation: If w is not 4-dimensional or the spectrum is degenerate
    """
    if w.dim != 4:
        raise ContractViolation(f"expected the 4-dimensional children channel, got dimension {w.dim}")
    rho0, rho1 = w.output(0), w.output(1)
    eig = qla.herm_eig(rho0 - rho1)
    lam = eig.eigenvalues
    if np.min(np.abs(np.diff(lam))) < 1e-9 or not (lam[1] > 1e-9 > -1e-9 > lam[2]):
        raise ContractViolation(f"grouping is not unique for spectrum {lam}")

    root0, root1 = density(root, 0), density(root, 1)
    results = []
    for label, idx in GROUPINGS:
        pi0 = eig.projector(np.isin(np.arange(4), idx))
        success = 0.0
        for proj in (pi0, np.eye(4) - pi0):
            a = 0.5 * qla.kron(root0, proj @ rho0 @ proj)
            b = 0.5 * qla.kron(root1, proj @ rho1 @ proj)
            success += 0.5 * (float(np.trace(a + b).real) + qla.trace_norm(a - b))
        results.append((label, success))
    return results


def lemma_instance() -> tuple[QubitBSCQ, QubitBSCQ]:
    """The channels W and W' of the 3-qubit local-measurement counterexample."""
    w = canonicalize(GeneralBSCQ(np.array([[2 / 3, 1 / 6], [1 / 6, 1 / 3]]), qla.SX))
    w2 = canonicalize(GeneralBSCQ(np.array([[2 / 3, 1 / 8], [1 / 8, 1 / 3]]), qla.SX))
    return w, w2


# ─────────────────────────────────────────────
#  Dispatch
# ─────────────────────────────────────────────

def decode(
    g: TreeFactorGraph,
    method: Method | str,
    trials: int = config.MC_TRIALS,
    seed: int = config.SEED,
) -> DecodeResult:
    method = Method(method)
    if method is Method.PMBPQM_EXACT:
        return pmbpqm_exact(g)
    if method is Method.PMBPQM_MC:
        return pmbpqm_mc(g, trials=trials, seed=seed)
    if method is Method.HELSTROM:
        return collective_helstrom(g)
    return locally_greedy(g)
