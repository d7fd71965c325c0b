"""
Monte-Carlo density evolution of PMBPQM on (dv, dc)-regular LDPC ensembles.

The population holds M qubit channels as parallel (theta, q) arrays. A full
iteration is a check half-round followed by a bit half-round; both use the
vectorised Bloch combiners and keep one sampled branch per combination.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from pmbpqm import config
from pmbpqm.channel import QubitBSCQ, holevo
from pmbpqm.combine import (
    BIT,
    CHECK,
    bit_combine_bloch,
    bloch_to_canonical,
    canonical_to_bloch,
    check_combine_bloch,
)
from pmbpqm.errors import ContractViolation
from pmbpqm.parallel import item_seed, parallel_map

logger = logging.getLogger(__name__)

PERFECT_TOL = 1e-12


@dataclass(frozen=True)
class DEConfig:
    dv: int
    dc: int
    M: int = config.DE_M
    N: int = config.DE_N
    success_eps: float = config.SUCCESS_EPS
    base_channel: QubitBSCQ = field(default_factory=lambda: QubitBSCQ(math.pi / 2, 0.0))

    def __post_init__(self):
        if not 2 <= self.dv < self.dc:
            raise ContractViolation(f"need 2 <= dv < dc, got dv={self.dv}, dc={self.dc}")
        if self.M < 100:
            raise ContractViolation(f"population size M must be at least 100, got {self.M}")
        if self.N < 1:
            raise ContractViolation(f"iteration count N must be at least 1, got {self.N}")
        if not 0.0 < self.success_eps < 0.5:
            raise ContractViolation(f"success_eps must lie in (0, 1/2), got {self.success_eps}")

    @property
    def rate(self) -> float:
        return 1.0 - self.dv / self.dc

    def with_channel(self, w: QubitBSCQ) -> "DEConfig":
        return replace(self, base_channel=w)


@dataclass(frozen=True, eq=False)
class ChannelPopulation:
    theta: np.ndarray
    q: np.ndarray
    rng_seed: int = 0

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if theta.shape != q.shape or theta.ndim != 1:
            raise ContractViolation("theta and q must be 1-D arrays of equal length")
        if np.any(theta < -1e-12) or np.any(theta > math.pi / 2 + 1e-12):
            raise ContractViolation("population theta outside [0, pi/2]")
        if np.any(q < -1e-12) or np.any(q > 1 + 1e-12):
            raise ContractViolation("population q outside [0, 1]")
        object.__setattr__(self, "theta", np.clip(theta, 0.0, math.pi / 2))
        object.__setattr__(self, "q", np.clip(q, 0.0, 1.0))

    @classmethod
    def constant(cls, w: QubitBSCQ, M: int, rng_seed: int = 0) -> "ChannelPopulation":
        return cls(np.full(M, w.theta), np.full(M, w.q), rng_seed)

    @property
    def size(self) -> int:
        return self.theta.size

    def samples(self) -> Iterator[QubitBSCQ]:
        for t, q in zip(self.theta, self.q):
            yield QubitBSCQ(float(t), float(q))

    def reliability(self) -> np.ndarray:
        """(1 - q) sin(theta): twice the Helstrom advantage of each member."""
        return (1.0 - self.q) * np.sin(self.theta)

    def bloch(self) -> tuple[np.ndarray, np.ndarray]:
        return canonical_to_bloch(self.theta, self.q)


def de_success(pop: ChannelPopulation) -> float:
    """Mean Helstrom success over the population."""
    return float(np.mean(0.5 * (1.0 + pop.reliability())))


def _pick(branches, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    (p0, x0, z0), (_, x1, z1) = branches
    first = rng.random(p0.shape) < p0
    return np.where(first, x0, x1), np.where(first, z0, z1)


def _tournament(xs: list[np.ndarray], zs: list[np.ndarray], combiner, rng) -> tuple[np.ndarray, np.ndarray]:
    level = list(zip(xs, zs))
    while len(level) > 1:
        nxt = []
        for i in range(0, len(level) - 1, 2):
            (xa, za), (xb, zb) = level[i], level[i + 1]
            nxt.append(_pick(combiner(xa, za, xb, zb), rng))
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def de_half_step(
    pop: ChannelPopulation,
    cfg: DEConfig,
    rng: np.random.Generator,
    node: str,
) -> ChannelPopulation:
    """
    One half-round of density evolution.

    node='check' combines dc - 1 random members; node='bit' combines dv - 1 random
    members and then the base channel.
    """
    if node not in (CHECK, BIT):
        raise ContractViolation(f"node must be {CHECK!r} or {BIT!r}, got {node!r}")
    fan_in = cfg.dc - 1 if node == CHECK else cfg.dv - 1
    x, z = pop.bloch()
    idx = rng.integers(0, pop.size, size=(fan_in, pop.size))
    combiner = check_combine_bloch if node == CHECK else bit_combine_bloch
    xo, zo = _tournament([x[i] for i in idx], [z[i] for i in idx], combiner, rng)
    if node == BIT:
        xb, zb = canonical_to_bloch(cfg.base_channel.theta, cfg.base_channel.q)
        xo, zo = _pick(bit_combine_bloch(xo, zo, np.full_like(xo, xb), np.full_like(zo, zb)), rng)
    theta, q = bloch_to_canonical(xo, zo)
    return ChannelPopulation(theta, q, pop.rng_seed)


def de_iterate(pop: ChannelPopulation, cfg: DEConfig, rng: np.random.Generator) -> ChannelPopulation:
    """One full iteration: check half-round, then bit half-round."""
    return de_half_step(de_half_step(pop, cfg, rng, CHECK), cfg, rng, BIT)


@dataclass(frozen=True, eq=False)
class DEResult:
    population: ChannelPopulation
    trace: tuple[float, ...]

    @property
    def success(self) -> float:
        return self.trace[-1]

    @property
    def iterations(self) -> int:
        return len(self.trace) - 1


def _absorbed(pop: ChannelPopulation) -> bool:
    r = pop.reliability()
    return bool(np.all(r >= 1.0 - PERFECT_TOL) or np.all(r <= PERFECT_TOL))


def run_density_evolution(cfg: DEConfig, seed: int = config.SEED) -> DEResult:
    """
    Population after cfg.N full iterations started from cfg.base_channel.

    trace[0] is the success of the base channel and trace[k] the success after
    k iterations. Absorbing populations (all perfect or all worthless) stop early.
    """
    rng = np.random.default_rng(seed)
    pop = ChannelPopulation.constant(cfg.base_channel, cfg.M, seed)
    trace = [de_success(pop)]
    for it in range(cfg.N):
        pop = de_iterate(pop, cfg, rng)
        trace.append(de_success(pop))
        if _absorbed(pop):
            logger.debug("density evolution absorbed after %d iterations", it + 1)
            break
    return DEResult(pop, tuple(trace))


def de_threshold(
    theta: float,
    cfg: DEConfig,
    bisect_steps: int = config.BISECT_STEPS,
    seed: int = config.SEED,
) -> float:
    """
    Largest q that still decodes at this theta, by bisection over [0, 1].

    q counts as below threshold when the success after N iterations exceeds
    1 - success_eps. Every bisection step uses the same seed. Returns the final midpoint.
    """
    lo, hi = 0.0, 1.0
    for step in range(bisect_steps):
        mid = 0.5 * (lo + hi)
        result = run_density_evolution(cfg.with_channel(QubitBSCQ(theta, mid)), seed)
        if result.success > 1.0 - cfg.success_eps:
            lo = mid
        else:
            hi = mid
        logger.debug("theta=%.6g step %d: q=%.8g success=%.6g", theta, step, mid, result.success)
    return 0.5 * (lo + hi)


def _threshold_task(args: tuple[float, DEConfig, int, int]) -> float:
    theta, cfg, steps, seed = args
    return de_threshold(theta, cfg, steps, seed)


def threshold_curve(
    cfg: DEConfig,
    theta_grid: Sequence[float],
    seed: int = config.SEED,
    threads: int = config.THREADS,
    bisect_steps: int = config.BISECT_STEPS,
) -> list[tuple]:
    """
    Rows (theta, q_threshold, p_threshold, dv, dc, M, N, seed) with p = q / 2.

    Each theta gets its own seed derived from (seed, index).
    """
    tasks = [(float(t), cfg, bisect_steps, item_seed(seed, i)) for i, t in enumerate(theta_grid)]
    qs = parallel_map(_threshold_task, tasks, threads)
    logger.info("threshold curve (%d,%d): %d points", cfg.dv, cfg.dc, len(qs))
    return [
        (theta, q, q / 2.0, cfg.dv, cfg.dc, cfg.M, cfg.N, task_seed)
        for (theta, _, _, task_seed), q in zip(tasks, qs)
    ]


def holevo_bound_q(theta: float, rate: float, steps: int = 60) -> float:
    """
    The q at which the Holevo information of (theta, q) equals rate.

    Returns 0 when even q = 0 carries less than rate.
    """
    if not 0.0 < rate < 1.0:
        raise ContractViolation(f"rate must lie in (0, 1), got {rate}")
    if holevo(QubitBSCQ(theta, 0.0)) < rate:
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if holevo(QubitBSCQ(theta, mid)) >= rate:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def holevo_curve(rate: float, theta_grid: Sequence[float]) -> list[tuple[float, float, float]]:
    return [(float(t), holevo_bound_q(float(t), rate), rate) for t in theta_grid]


# ─────────────────────────────────────────────
#  Classical reference
# ─────────────────────────────────────────────

LLR_CLIP = 40.0


def _llr_success(llr: np.ndarray) -> float:
    return float(np.mean(1.0 / (1.0 + np.exp(-np.abs(llr)))))


def classical_bsc_success(
    p: float,
    dv: int,
    dc: int,
    M: int,
    N: int,
    seed: int = config.SEED,
) -> float:
    """Success of BP on the BSC(p) after N iterations of LLR population dynamics."""
    rng = np.random.default_rng(seed)
    if p <= 0.0:
        return 1.0
    base = math.log((1.0 - p) / p)

    def channel(n: int) -> np.ndarray:
        return np.where(rng.random(n) < p, -base, base)

    llr = channel(M)
    for _ in range(N):
        idx = rng.integers(0, M, size=(dc - 1, M))
        t = np.prod(np.tanh(llr[idx] / 2.0), axis=0)
        t = np.clip(t, -1.0 + 1e-15, 1.0 - 1e-15)
        check = 2.0 * np.arctanh(t)
        idx = rng.integers(0, M, size=(dv - 1, M))
        llr = np.clip(channel(M) + check[idx].sum(axis=0), -LLR_CLIP, LLR_CLIP)
    return _llr_success(llr)


def classical_bsc_threshold(
    dv: int,
    dc: int,
    M: int = config.CI_M,
    N: int = config.CI_N,
    steps: int = config.BISECT_STEPS,
    seed: int = config.SEED,
    success_eps: float = config.SUCCESS_EPS,
) -> float:
    """BP threshold crossover probability of the BSC, bisected over [0, 1/2]."""
    lo, hi = 0.0, 0.5
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if classical_bsc_success(mid, dv, dc, M, N, seed) > 1.0 - success_eps:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)

