import math

import numpy as np
import pytest

from pmbpqm.channel import QubitBSCQ
from pmbpqm.de import (
    ChannelPopulation,
    DEConfig,
    classical_bsc_success,
    classical_bsc_threshold,
    de_half_step,
    de_iterate,
    de_success,
    de_threshold,
    holevo_bound_q,
    holevo_curve,
    run_density_evolution,
    threshold_curve,
)
from pmbpqm.errors import ContractViolation


def small_config(**kwargs):
    return DEConfig(3, 6, M=kwargs.pop("M", 500), N=kwargs.pop("N", 10), **kwargs)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"dv": 6, "dc": 3},
        {"dv": 1, "dc": 3},
        {"dv": 3, "dc": 6, "M": 50},
        {"dv": 3, "dc": 6, "N": 0},
        {"dv": 3, "dc": 6, "success_eps": 0.7},
    ],
)
def test_config_is_validated(kwargs):
    with pytest.raises(ContractViolation):
        DEConfig(**kwargs)


def test_rate():
    assert DEConfig(3, 6).rate == pytest.approx(0.5)
    assert DEConfig(3, 4).rate == pytest.approx(0.25)


def test_population():
    w = QubitBSCQ(1.0, 0.2)
    pop = ChannelPopulation.constant(w, 200)
    assert pop.size == 200
    assert de_success(pop) == pytest.approx(w.success)
    assert next(pop.samples()) == w
    with pytest.raises(ContractViolation):
        ChannelPopulation(np.array([0.3, 2.0]), np.array([0.1, 0.1]))
    with pytest.raises(ContractViolation):
        ChannelPopulation(np.array([0.3]), np.array([0.1, 0.1]))


def test_half_step_rejects_unknown_node(rng):
    cfg = small_config()
    pop = ChannelPopulation.constant(QubitBSCQ(1.0, 0.1), cfg.M)
    with pytest.raises(ContractViolation):
        de_half_step(pop, cfg, rng, "variable")


def test_classical_closure(rng):
    cfg = small_config(base_channel=QubitBSCQ(math.pi / 2, 0.15))
    pop = ChannelPopulation.constant(cfg.base_channel, cfg.M)
    for _ in range(5):
        pop = de_iterate(pop, cfg, rng)
        assert np.all(np.isclose(pop.theta, math.pi / 2, atol=1e-12) | (pop.q == 1.0))


def test_determinism():
    cfg = small_config(base_channel=QubitBSCQ(1.2, 0.1))
    a = run_density_evolution(cfg, seed=5)
    b = run_density_evolution(cfg, seed=5)
    assert a.trace == b.trace
    np.testing.assert_array_equal(a.population.theta, b.population.theta)
    c = run_density_evolution(cfg, seed=6)
    assert c.trace != a.trace


def test_good_channel_converges():
    cfg = DEConfig(3, 6, M=1000, N=30, base_channel=QubitBSCQ(math.pi / 2, 0.04))
    result = run_density_evolution(cfg, seed=1)
    assert result.trace[0] == pytest.approx(0.98)
    assert result.success > 1 - 1e-3
    assert result.iterations <= 30


def test_bad_channel_does_not_converge():
    cfg = DEConfig(3, 6, M=1000, N=30, base_channel=QubitBSCQ(math.pi / 2, 0.4))
    assert run_density_evolution(cfg, seed=1).success < 0.99


def test_holevo_bound():
    assert holevo_bound_q(math.pi / 2, 0.5) / 2 == pytest.approx(0.110, abs=1e-3)
    # a single pure state pair too close to carry the rate
    assert holevo_bound_q(0.05, 0.5) == 0.0
    with pytest.raises(ContractViolation):
        holevo_bound_q(1.0, 1.5)
    rows = holevo_curve(0.5, [0.5, 1.0, math.pi / 2])
    qs = [r[1] for r in rows]
    assert qs == sorted(qs)
    assert all(r[2] == 0.5 for r in rows)


def test_threshold_curve_does_not_depend_on_threads():
    cfg = DEConfig(3, 6, M=100, N=5)
    grid = [0.6, 1.2, math.pi / 2]
    one = threshold_curve(cfg, grid, seed=3, threads=1, bisect_steps=4)
    two = threshold_curve(cfg, grid, seed=3, threads=2, bisect_steps=4)
    assert one == two
    assert [r[0] for r in one] == grid
    assert all(r[2] == pytest.approx(r[1] / 2) for r in one)
    assert len({r[7] for r in one}) == 3


def test_classical_bsc_success():
    assert classical_bsc_success(0.0, 3, 6, 200, 5) == 1.0
    assert classical_bsc_success(0.02, 3, 6, 2000, 30, seed=2) > 0.999
    assert classical_bsc_success(0.2, 3, 6, 2000, 30, seed=2) < 0.99


CI = dict(M=1000, N=50)


@pytest.mark.slow
def test_classical_threshold():
    assert classical_bsc_threshold(3, 6, steps=20, seed=0, **CI) == pytest.approx(0.084, abs=5e-3)


@pytest.mark.slow
def test_quantum_threshold_on_classical_channel():
    cfg = DEConfig(3, 6, **CI)
    q_star = de_threshold(math.pi / 2, cfg, bisect_steps=20, seed=0)
    assert q_star / 2 == pytest.approx(0.084, abs=5e-3)


@pytest.mark.slow
def test_thresholds_stay_below_holevo_bound():
    cfg = DEConfig(3, 6, **CI)
    steps = 20
    grid = [0.6, 0.9, 1.2, 1.4, math.pi / 2]
    rows = threshold_curve(cfg, grid, seed=0, bisect_steps=steps)
    bounds = dict((theta, q) for theta, q, _ in holevo_curve(cfg.rate, grid))
    # bisection resolution plus a Monte-Carlo allowance on the success criterion
    slack = 2.0 ** -steps + 1e-3
    for theta, q_star, *_ in rows:
        assert q_star <= bounds[theta] + slack


def test_threshold_at_theta_zero_is_near_zero():
    # theta = 0 carries no information for any q, so every bisection step fails
    cfg = DEConfig(3, 6, M=1000, N=50)
    assert de_threshold(0.0, cfg, bisect_steps=20, seed=0) < 1e-3
