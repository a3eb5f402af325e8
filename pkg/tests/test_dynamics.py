import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netbargain import elementary as el
from netbargain.dynamics import (
    DynamicsConfig,
    EdgeBalancedUpdate,
    Trajectory,
    estimate_rate,
    estimate_rate_from_residuals,
    increment_rate,
    period_two_tail,
    simulate,
    step,
)
from netbargain.errors import AtFixedPoint, InsufficientDecay
from netbargain.network import ExchangeNetwork, Matching

from netgen import random_instance

PAIR = ExchangeNetwork(2, ((0, 1, 1.0),))
PAIR_M = Matching(((0, 1),))


class TestConfig:
    @pytest.mark.parametrize("kw", [{"alpha": 0.0}, {"alpha": 1.5}, {"epsilon": 0.0}, {"horizon": 0}, {"horizon": 2.5}])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            DynamicsConfig(**kw)


class TestStep:
    def test_equal_split(self):
        np.testing.assert_array_equal(step(PAIR, PAIR_M, [0.2, 0.8], 1.0), [0.5, 0.5])

    def test_half_step(self):
        np.testing.assert_allclose(step(PAIR, PAIR_M, [0.2, 0.8], 0.5), [0.35, 0.65], atol=1e-15)

    def test_clamp_active(self):
        # node 1 has a heavy outside option: y_1 = 4 - 1 = 3, y_0 = 0
        net = ExchangeNetwork(3, ((0, 1, 1.0), (1, 2, 4.0)))
        x = step(net, PAIR_M, [0.4, 0.6, 1.0], 0.5)
        np.testing.assert_allclose(x, [0.2, 0.8, 1.0], atol=1e-15)

    def test_unmatched_and_pinned_fixed(self):
        net = ExchangeNetwork(4, ((0, 1, 1.0), (1, 2, 1.0), (0, 3, 1.0)), pinned={3: 0.3})
        x = step(net, PAIR_M, [0.1, 0.9, 0.7, 0.3])
        assert x[2] == 0.7 and x[3] == 0.3

    def test_synchronous(self):
        # chain 2-0=1-3=... both ends read the old state
        net = ExchangeNetwork(4, ((0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)))
        m = Matching(((0, 1), (2, 3)))
        x = np.array([0.9, 0.1, 0.2, 0.8])
        upd = EdgeBalancedUpdate(net, m)
        y = upd.alternates(x)  # order: nodes 0, 1, 2, 3
        np.testing.assert_allclose(y, [0.0, 0.8, 0.9, 0.0], atol=1e-15)
        expect_0 = 0.0 + 0.5 * (1 - 0.0 - 0.8)
        expect_2 = 0.9 + 0.5 * (1 - 0.9 - 0.0)
        out = upd(x)
        assert out[0] == pytest.approx(expect_0) and out[2] == pytest.approx(expect_2)


class TestSimulate:
    def test_single_pair(self):
        traj = simulate(PAIR, PAIR_M, [0.0, 1.0], DynamicsConfig())
        np.testing.assert_array_equal(traj.states[1], [0.5, 0.5])
        assert traj.converged and traj.steps_taken == 2

    def test_path_two(self):
        inst = el.build(el.PathSpec(2))
        x0 = el.from_reduced(inst, np.zeros(2))
        traj = simulate(inst.network, inst.matching, x0)
        assert traj.converged
        np.testing.assert_allclose(el.to_reduced(inst, traj.final), [2 / 3, 1 / 3], atol=1e-8)

    @pytest.mark.parametrize("horizon", [10, 101, 1000])
    def test_even_cycle_periodic(self, horizon):
        inst = el.build(el.CycleSpec(4))
        x0 = el.from_reduced(inst, np.array([1.0, 0.0, 1.0, 0.0]))
        traj = simulate(inst.network, inst.matching, x0, DynamicsConfig(horizon=horizon))
        assert not traj.converged and traj.steps_taken == horizon
        assert period_two_tail(traj.states, window=8)

    def test_converged_invariant(self):
        net, m, x0 = random_instance(3)
        cfg = DynamicsConfig(alpha=0.5, epsilon=1e-10)
        traj = simulate(net, m, x0, cfg)
        if traj.converged:
            assert traj.increments()[-1] <= cfg.epsilon

    def test_shape_check(self):
        with pytest.raises(ValueError):
            simulate(PAIR, PAIR_M, [0.0, 1.0, 2.0])


class TestExport:
    def test_csv(self):
        traj = simulate(PAIR, PAIR_M, [0.1, 0.9])
        lines = traj.to_csv().splitlines()
        assert lines[0] == "t,x_0,x_1"
        assert lines[1] == "0,0.10000000000000001,0.90000000000000002"
        assert len(lines) == traj.steps_taken + 2
        t, *vals = lines[2].split(",")
        assert [float(v) for v in vals] == list(traj.states[1])

    def test_json(self):
        traj = simulate(PAIR, PAIR_M, [0.1, 0.9], DynamicsConfig(alpha=0.5))
        d = json.loads(traj.to_json())
        assert d["config"]["alpha"] == 0.5 and d["converged"] is True
        assert len(d["states"]) == traj.steps_taken + 1


class TestRate:
    def test_geometric(self):
        est = estimate_rate_from_residuals(2.0 ** -np.arange(80))
        assert est.rate == pytest.approx(math.log(2), rel=1e-12)
        assert est.samples >= 10 and est.rms_residual < 1e-12

    def test_path_eight(self):
        inst = el.build(el.PathSpec(8))
        x0 = el.from_reduced(inst, el.random_reduced(8, 0))
        traj = simulate(inst.network, inst.matching, x0)
        exact = -math.log(math.cos(math.pi / 9))
        est = estimate_rate(traj, traj.final)
        assert abs(est.rate / exact - 1) < 0.1
        assert abs(increment_rate(traj).rate / exact - 1) < 0.1

    def test_at_fixed_point(self):
        states = np.tile([0.5, 0.5], (20, 1))
        with pytest.raises(AtFixedPoint):
            estimate_rate(states, [0.5, 0.5])

    def test_no_decay(self):
        with pytest.raises(InsufficientDecay):
            estimate_rate_from_residuals(np.ones(50))

    def test_too_short(self):
        with pytest.raises(InsufficientDecay):
            estimate_rate_from_residuals(2.0 ** -np.arange(12))

    def test_nonfinite_target(self):
        with pytest.raises(ValueError):
            estimate_rate(np.zeros((5, 2)), [np.nan, 0.0])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 1.0))
def test_pair_sums_and_range(seed, alpha):
    net, m, x0 = random_instance(seed)
    upd = EdgeBalancedUpdate(net, m)
    x = x0
    for _ in range(200):
        x = upd(x, alpha)
        for i, j in m.pairs:
            assert abs(x[i] + x[j] - net.weight(i, j)) <= 1e-12
        assert np.all(x >= 0.0) and np.all(x <= net.w_max)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.randoms())
def test_relabelling_commutes(seed, rnd):
    net, m, x0 = random_instance(seed)
    perm = list(range(net.node_count))
    rnd.shuffle(perm)
    relabel = ExchangeNetwork(
        net.node_count,
        tuple((perm[i], perm[j], w) for i, j, w in reversed(net.edges)),
        {perm[k]: v for k, v in net.pinned.items()},
    )
    rm = Matching(tuple((perm[j], perm[i]) for i, j in m.pairs))
    y0 = np.empty_like(x0)
    y0[perm] = x0
    out = step(net, m, x0, 0.7)
    rout = step(relabel, rm, y0, 0.7)
    np.testing.assert_array_equal(rout[perm], out)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_deterministic(seed):
    net, m, x0 = random_instance(seed)
    a = simulate(net, m, x0, DynamicsConfig(alpha=0.6, horizon=300))
    b = simulate(net, m, x0, DynamicsConfig(alpha=0.6, horizon=300))
    assert a.states.tobytes() == b.states.tobytes()


def test_trajectory_final():
    traj = Trajectory(np.array([[1.0], [2.0]]), False, 1)
    assert traj.final[0] == 2.0
