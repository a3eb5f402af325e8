import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netbargain import elementary as el
from netbargain.dynamics import DynamicsConfig, EdgeBalancedUpdate, simulate
from netbargain.errors import DimensionMismatch, HorizonTooShort, SingularSystem
from netbargain.linear_model import (
    build_bicycle,
    build_blossom,
    build_cycle,
    build_path,
    default_horizon,
    detect_linearization,
    fixed_point,
    linear_simulate,
    linear_step,
    loop_cases,
    loop_sum_closed_form,
    loop_sums,
    model_for,
    settled_model,
    tridiagonal,
)

H = 0.5


class TestPath:
    def test_two(self):
        np.testing.assert_array_equal(build_path(2).A, [[0, H], [H, 0]])

    def test_three_b(self):
        np.testing.assert_array_equal(build_path(3).b, [H, 0, 0])

    def test_boundaries(self):
        np.testing.assert_allclose(build_path(4, 0.2, 0.6).b, [0.4, 0, 0, 0.3])
        np.testing.assert_allclose(build_path(1, 0.2, 0.6).b, [0.7])

    def test_alpha_shift(self):
        model = build_path(2, alpha=0.5)
        np.testing.assert_array_equal(model.A, [[0.5, 0.25], [0.25, 0.5]])
        np.testing.assert_array_equal(model.b, [0.25, 0.0])


class TestCycle:
    def test_two(self):
        np.testing.assert_array_equal(build_cycle(2).A, [[0, 1], [1, 0]])

    def test_four(self):
        model = build_cycle(4)
        np.testing.assert_array_equal(model.A[0], [0, H, 0, H])
        np.testing.assert_array_equal(model.b, 0)

    @given(st.integers(2, 20), st.floats(0.05, 1.0))
    def test_columns_sum_to_one(self, n, alpha):
        np.testing.assert_allclose(build_cycle(n, alpha).A.sum(axis=0), 1.0, atol=1e-15)


class TestBlossom:
    def test_one_two_case1(self):
        model = build_blossom(1, 2, 1)
        np.testing.assert_array_equal(model.A0, [[0, H, 0], [H, 0, H], [-H, H, 0]])
        np.testing.assert_array_equal(model.b0, [0, 0, H])

    def test_one_two_case2(self):
        model = build_blossom(1, 2, 2)
        np.testing.assert_array_equal(model.A0, [[0, 0, -H], [H, 0, H], [-H, H, 0]])
        np.testing.assert_array_equal(model.b0, [H, 0, H])

    @pytest.mark.parametrize("n,m", [(1, 2), (3, 4), (2, 5)])
    def test_cases_differ_only_in_gateway_row(self, n, m):
        a, b = build_blossom(n, m, 1), build_blossom(n, m, 2)
        rows = np.nonzero(np.any(a.A0 != b.A0, axis=1))[0]
        assert list(rows) == [n - 1]
        assert list(np.nonzero(a.b0 != b.b0)[0]) == [n - 1]

    @pytest.mark.parametrize("n,m,case", [(3, 4, 1), (3, 4, 2), (1, 5, 2)])
    def test_entries(self, n, m, case):
        A0 = build_blossom(n, m, case).A0
        assert set(np.unique(A0)) <= {-H, 0.0, H}
        np.testing.assert_array_equal(A0[:n, :n], tridiagonal(n))
        np.testing.assert_array_equal(A0[n:, n:], tridiagonal(m))

    def test_bad_case(self):
        with pytest.raises(ValueError):
            build_blossom(2, 3, 3)


class TestBicycle:
    def test_item1_b(self):
        b0 = build_bicycle(3, 2, 4, (1, 1)).b0
        np.testing.assert_array_equal(b0, [H] + [0] * 7 + [H])

    def test_loop2_case2_b(self):
        l, n, m = 3, 2, 4
        b0 = build_bicycle(l, n, m, (1, 2)).b0
        # 1-based position l + n is the cross-bar end at the second gateway
        assert b0[l + n - 1] == H
        assert np.count_nonzero(b0) == 3

    def test_loop1_case2_b(self):
        l, n, m = 3, 2, 4
        b0 = build_bicycle(l, n, m, (2, 1)).b0
        assert b0[l] == H and np.count_nonzero(b0) == 3

    def test_single_bar_both_case2(self):
        b0 = build_bicycle(2, 1, 2, (2, 2)).b0
        np.testing.assert_array_equal(b0, [H, 0, 1.0, 0, H])

    @pytest.mark.parametrize("cases", [(1, 1), (1, 2), (2, 1), (2, 2)])
    def test_loop2_block_is_blossom(self, cases):
        l, n, m = 3, 2, 4
        A0 = build_bicycle(l, n, m, cases).A0
        blossom = build_blossom(n, m, cases[1]).A0
        np.testing.assert_array_equal(A0[l + 1 :, l:], blossom[1:])
        np.testing.assert_array_equal(A0[:l, :l], tridiagonal(l))

    def test_model_for(self):
        model = model_for(el.BicycleSpec(3, 2, 5), (2, 1), alpha=0.5)
        assert model.case == (2, 1) and model.dim == 10 and model.alpha == 0.5


class TestStepping:
    def test_path_fixed_point_step(self):
        np.testing.assert_allclose(linear_step(build_path(2), [2 / 3, 1 / 3]), [2 / 3, 1 / 3], atol=1e-15)

    def test_cycle_sum(self):
        model = build_cycle(5)
        v = np.array([0.1, 0.9, 0.3, 0.4, 0.2])
        assert linear_step(model, v).sum() == pytest.approx(v.sum(), abs=1e-15)

    def test_zero(self):
        np.testing.assert_array_equal(linear_step(build_cycle(3), np.zeros(3)), 0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            linear_step(build_path(3), [0.0, 0.0])
        with pytest.raises(DimensionMismatch):
            linear_simulate(build_path(3), [0.0, 0.0])

    def test_simulate(self):
        traj = linear_simulate(build_path(3), np.zeros(3))
        assert traj.converged
        np.testing.assert_allclose(traj.final, fixed_point(build_path(3)), atol=1e-10)


class TestFixedPoint:
    def test_path_two(self):
        np.testing.assert_allclose(fixed_point(build_path(2)), [2 / 3, 1 / 3], atol=1e-12)

    def test_path_one(self):
        np.testing.assert_allclose(fixed_point(build_path(1)), [0.5], atol=1e-15)

    def test_cycle_singular(self):
        with pytest.raises(SingularSystem):
            fixed_point(build_cycle(4))

    @pytest.mark.parametrize("case", [1, 2])
    def test_blossom_step_invariant(self, case):
        model = build_blossom(3, 4, case)
        v = fixed_point(model)
        assert np.max(np.abs(linear_step(model, v) - v)) <= 1e-12


class TestLoopSum:
    def test_m2(self):
        assert loop_sum_closed_form(2, [0.0, 0.0], 3) == pytest.approx(0.875, abs=1e-15)

    @given(st.integers(2, 12), st.data())
    def test_initial_and_limit(self, m, data):
        y0 = np.array(data.draw(st.lists(st.floats(0, 1), min_size=m, max_size=m)))
        assert loop_sum_closed_form(m, y0, 0) == pytest.approx(y0[0] + y0[-1], abs=1e-12)
        assert loop_sum_closed_form(m, y0, 20000) == pytest.approx(1.0, abs=1e-9)

    def test_vector_t(self):
        out = loop_sum_closed_form(2, [0.0, 0.0], np.arange(4))
        np.testing.assert_allclose(out, [0.0, 0.5, 0.75, 0.875], atol=1e-15)

    def test_recursion_on_blossom(self):
        inst = el.build(el.BlossomSpec(3, 5))
        upd = EdgeBalancedUpdate(inst.network, inst.matching)
        x = el.from_reduced(inst, el.random_reduced(inst.dim, 11))
        loop = slice(3, 8)
        for _ in range(100):
            v = el.to_reduced(inst, x)
            s = loop_sums(inst, v)[0]
            x = upd(x)
            nxt = el.to_reduced(inst, x)
            assert abs(nxt[loop].sum() - (v[loop].sum() - 0.5 * s + 0.5)) <= 1e-12


def _blossom_x0(m, y0, n=1, stem=0.3):
    inst = el.build(el.BlossomSpec(n, m))
    return inst, el.from_reduced(inst, np.r_[np.full(n, stem), y0])


class TestDetect:
    def test_below_one(self):
        inst, x0 = _blossom_x0(2, [0.0, 0.0])
        rep = detect_linearization(inst, x0)
        assert rep.T0 == 0 and rep.settled_case == (1,)

    def test_above_one(self):
        inst, x0 = _blossom_x0(2, [0.8, 0.8])
        rep = detect_linearization(inst, x0)
        assert rep.T0 == 0 and rep.settled_case == (2,)

    def test_tie(self):
        inst, x0 = _blossom_x0(2, [0.25, 0.75])
        rep = detect_linearization(inst, x0)
        np.testing.assert_array_equal(rep.loop_sums[:, 0], 1.0)
        assert rep.T0 == 0 and rep.settled_case == (1,)

    def test_report_dict(self):
        inst, x0 = _blossom_x0(3, [0.9, 0.1, 0.7])
        d = detect_linearization(inst, x0).to_dict()
        assert set(d) == {"T0", "settled_case", "horizon_used"}
        assert d["horizon_used"] == default_horizon(inst.spec) == 50 * 16
        json.dumps(d)

    def test_needs_loop(self):
        inst = el.build(el.PathSpec(3))
        with pytest.raises(ValueError):
            detect_linearization(inst, el.from_reduced(inst, np.zeros(3)))

    def test_horizon_too_short(self):
        # odd loop whose two slowest modes cancel in sign every step
        inst = el.build(el.BicycleSpec(3, 2, 5))
        x0 = el.from_reduced(inst, el.random_reduced(inst.dim, 1))
        with pytest.raises(HorizonTooShort):
            detect_linearization(inst, x0, DynamicsConfig(horizon=40))

    def test_flip_found(self):
        # s(0) slightly above 1 but the slow mode pulls it below for good
        inst, x0 = _blossom_x0(4, [0.9, 0.0, 0.0, 0.1005], n=2)
        rep = detect_linearization(inst, x0)
        s = rep.loop_sums[:, 0]
        assert s[0] > 1.0 and rep.T0 > 0 and rep.settled_case == (1,)
        assert np.all(s[rep.T0 :] <= 1.0 + 64 * np.finfo(float).eps)

    def test_settled_model_tracks_dynamics(self):
        inst = el.build(el.BlossomSpec(3, 4))
        x0 = el.from_reduced(inst, el.random_reduced(inst.dim, 5))
        rep = detect_linearization(inst, x0)
        model = settled_model(inst, rep)
        traj = simulate(inst.network, inst.matching, x0, DynamicsConfig(epsilon=1e-300, horizon=rep.T0 + 100))
        upd = EdgeBalancedUpdate(inst.network, inst.matching)
        for t in range(rep.T0, rep.T0 + 100):
            nl = el.to_reduced(inst, upd(traj.states[t]))
            lin = linear_step(model, el.to_reduced(inst, traj.states[t]))
            assert np.max(np.abs(nl - lin)) <= 1e-14


specs = st.one_of(
    st.builds(el.PathSpec, st.integers(1, 6), st.floats(0, 1), st.floats(0, 1)),
    st.builds(el.CycleSpec, st.integers(2, 6)),
    st.builds(el.BlossomSpec, st.integers(1, 5), st.integers(2, 6)),
    st.builds(el.BicycleSpec, st.integers(2, 5), st.integers(1, 4), st.integers(2, 5)),
)


@settings(max_examples=80, deadline=None)
@given(specs, st.sampled_from([0.3, 0.7, 1.0]), st.integers(0, 2**32 - 1))
def test_dynamics_equal_model_on_current_branch(spec, alpha, seed):
    inst = el.build(spec)
    upd = EdgeBalancedUpdate(inst.network, inst.matching)
    x = el.from_reduced(inst, el.random_reduced(inst.dim, seed))
    for _ in range(30):
        v = el.to_reduced(inst, x)
        cases = loop_cases(inst, v) if inst.loops else None
        model = model_for(spec, cases if cases and len(cases) > 1 else (cases[0] if cases else None), alpha)
        x = upd(x, alpha)
        assert np.max(np.abs(el.to_reduced(inst, x) - linear_step(model, v))) <= 1e-14


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 7), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_loop_sum_autonomous(m, n, seed):
    rng = np.random.default_rng(seed)
    y0 = rng.random(m)
    inst = el.build(el.BlossomSpec(n, m))
    upd = EdgeBalancedUpdate(inst.network, inst.matching)
    xa = el.from_reduced(inst, np.r_[rng.random(n), y0])
    xb = el.from_reduced(inst, np.r_[rng.random(n), y0])
    closed = loop_sum_closed_form(m, y0, np.arange(60))
    for t in range(60):
        sa = loop_sums(inst, el.to_reduced(inst, xa))[0]
        sb = loop_sums(inst, el.to_reduced(inst, xb))[0]
        assert abs(sa - sb) <= 1e-12 and abs(sa - closed[t]) <= 1e-11
        xa, xb = upd(xa), upd(xb)


def test_model_json():
    d = json.loads(build_blossom(2, 3, 2, alpha=0.5).to_json())
    assert d["family"] == "BlossomModel" and d["alpha"] == 0.5 and d["case"] == 2
    assert len(d["A"]) == 5 and len(d["b"]) == 5
