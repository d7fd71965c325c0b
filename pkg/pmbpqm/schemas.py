import math
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from pmbpqm import config
from pmbpqm.channel import GeneralBSCQ, QubitBSCQ, canonicalize
from pmbpqm.combine import BranchDistribution
from pmbpqm.decoder import Method, Node, TreeFactorGraph


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# ─────────────────────────────────────────────
#  Channels
# ─────────────────────────────────────────────

class QubitChannelModel(_Frozen):
    theta: float = Field(ge=0.0, le=math.pi / 2 + 1e-12)
    q: float = Field(ge=0.0, le=1.0)

    def to_channel(self) -> QubitBSCQ:
        return QubitBSCQ(self.theta, self.q)

    @classmethod
    def from_channel(cls, w: QubitBSCQ) -> "QubitChannelModel":
        return cls(theta=w.theta, q=w.q)


# Complex entries are written as [re, im]
ComplexMatrix = List[List[List[float]]]


def _to_array(m: ComplexMatrix) -> np.ndarray:
    arr = np.array(m, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError("matrix entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _from_array(m: np.ndarray) -> ComplexMatrix:
    m = np.asarray(m, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


class GeneralChannelModel(_Frozen):
    rho: ComplexMatrix
    u: ComplexMatrix

    @field_validator("rho", "u")
    @classmethod
    def _square_pairs(cls, v: ComplexMatrix) -> ComplexMatrix:
        arr = np.array(v, dtype=float)
        if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or arr.shape[2] != 2:
            raise ValueError("expected a square matrix of [re, im] pairs")
        return v

    def to_channel(self) -> GeneralBSCQ:
        return GeneralBSCQ(_to_array(self.rho), _to_array(self.u))

    @classmethod
    def from_channel(cls, w: GeneralBSCQ) -> "GeneralChannelModel":
        return cls(rho=_from_array(w.rho), u=_from_array(w.u))


ChannelModel = Union[QubitChannelModel, GeneralChannelModel]


# ─────────────────────────────────────────────
#  Factor graphs
# ─────────────────────────────────────────────

class NodeModel(_Frozen):
    id: int
    kind: Literal["variable", "check"]
    children: List[int] = Field(default_factory=list)
    channel: Optional[ChannelModel] = None

    def to_node(self) -> Node:
        channel = None
        if isinstance(self.channel, QubitChannelModel):
            channel = self.channel.to_channel()
        elif self.channel is not None:
            # a general qubit channel is stored in canonical form
            channel = canonicalize(self.channel.to_channel())
        return Node(self.id, self.kind, tuple(self.children), channel)

    @classmethod
    def from_node(cls, node: Node) -> "NodeModel":
        return cls(
            id=node.id,
            kind=node.kind.value,
            children=list(node.children),
            channel=QubitChannelModel.from_channel(node.channel) if node.channel is not None else None,
        )


class FactorGraphModel(_Frozen):
    root: int
    nodes: List[NodeModel]

    def to_graph(self) -> TreeFactorGraph:
        return TreeFactorGraph([n.to_node() for n in self.nodes], self.root)

    @classmethod
    def from_graph(cls, g: TreeFactorGraph) -> "FactorGraphModel":
        return cls(root=g.root, nodes=[NodeModel.from_node(n) for n in g])


# ─────────────────────────────────────────────
#  Debug dumps
# ─────────────────────────────────────────────

class BranchModel(_Frozen):
    prob: float = Field(ge=0.0, le=1.0 + 1e-12)
    theta: float
    q: float


class BranchDistributionModel(_Frozen):
    branches: List[BranchModel]
    success: float

    @classmethod
    def from_distribution(cls, dist: BranchDistribution) -> "BranchDistributionModel":
        return cls(
            branches=[BranchModel(prob=b.prob, theta=b.channel.theta, q=b.channel.q) for b in dist],
            success=dist.success(),
        )


# ─────────────────────────────────────────────
#  Sweeps
# ─────────────────────────────────────────────

Experiment = Literal["fg5", "fg7", "lemma3q", "de"]


class SweepSpec(_Frozen):
    """Everything a ``run`` invocation depends on."""

    experiment: Experiment
    theta_min: float = Field(default=0.0, ge=0.0, le=math.pi / 2)
    theta_max: float = Field(default=math.pi / 2, ge=0.0, le=math.pi / 2)
    theta_steps: int = Field(default=50, ge=1)
    p_list: List[float] = Field(default_factory=lambda: [0.0, 0.1, 0.2])
    q_list: List[float] = Field(default_factory=list)
    methods: List[Method] = Field(default_factory=lambda: [Method.PMBPQM_EXACT, Method.HELSTROM])
    dv: int = Field(default=3, ge=2)
    dc: int = Field(default=6, ge=3)
    extra_ensembles: List[Tuple[int, int]] = Field(default_factory=list)
    M: Optional[int] = Field(default=None, ge=100)
    N: Optional[int] = Field(default=None, ge=1)
    trials: int = Field(default=config.MC_TRIALS, ge=1)
    seed: int = config.SEED
    threads: int = Field(default=config.THREADS, ge=1)
    out: Path = Path(config.OUTPUT_DIR)
    profile: Literal["full", "ci"] = "full"
    bisect_steps: int = Field(default=config.BISECT_STEPS, ge=1)
    success_eps: float = Field(default=config.SUCCESS_EPS, gt=0.0, lt=0.5)
    plot: bool = True

    @field_validator("p_list")
    @classmethod
    def _p_domain(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("p_list needs at least one value")
        bad = [p for p in v if not 0.0 <= p <= 0.5]
        if bad:
            raise ValueError(f"flip probabilities must lie in [0, 1/2], got {bad}")
        return v

    @field_validator("q_list")
    @classmethod
    def _q_domain(cls, v: List[float]) -> List[float]:
        bad = [q for q in v if not 0.0 <= q <= 1.0]
        if bad:
            raise ValueError(f"depolarizing weights must lie in [0, 1], got {bad}")
        return v

    @model_validator(mode="after")
    def _ranges(self) -> "SweepSpec":
        if self.theta_min > self.theta_max:
            raise ValueError("theta_min must not exceed theta_max")
        if self.dc <= self.dv:
            raise ValueError("the check degree dc must exceed the variable degree dv")
        bad = [(dv, dc) for dv, dc in self.extra_ensembles if not 2 <= dv < dc]
        if bad:
            raise ValueError(f"ensembles need 2 <= dv < dc, got {bad}")
        return self

    @property
    def ensembles(self) -> list[tuple[int, int]]:
        """(dv, dc) first, then the extra ensembles, without repeats."""
        out = [(self.dv, self.dc)]
        for pair in self.extra_ensembles:
            if tuple(pair) not in out:
                out.append(tuple(pair))
        return out

    @property
    def population(self) -> tuple[int, int]:
        """(M, N) after applying the profile defaults."""
        m, n = config.profile_settings(self.profile)
        return (self.M or m, self.N or n)

    def theta_grid(self) -> np.ndarray:
        if self.theta_steps == 1:
            return np.array([self.theta_min])
        return np.linspace(self.theta_min, self.theta_max, self.theta_steps)

    def header_params(self) -> dict:
        """Parameters echoed into output headers; worker count and paths are left out."""
        data = self.model_dump(mode="json", exclude={"threads", "plot", "out"})
        data["M"], data["N"] = self.population
        return data
