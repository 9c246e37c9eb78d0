import math

import numpy as np
import pytest

from caliper.core import PostDriftWindow, Sample, WindowStats
from caliper.criterion import (
    CaliperConfig,
    CaliperState,
    EssGateFailed,
    InsufficientWindow,
    LocalityGrid,
    NotMonotone,
    Trigger,
    caliper_step,
    decision_label,
    effective_radius,
    ess,
    ess_gate,
    kernel_weights,
    monotone_test,
    proxy_error,
    scaled_distances,
    wlr_fit,
    wlr_predict,
)
from caliper.errors import NumericalError

from oracles import ess_formula, reference_decision_sequence


def window_from(values, t_s=0):
    win = PostDriftWindow(t_s=t_s)
    arr = np.atleast_2d(np.asarray(values, dtype=float))
    if arr.shape[0] == 1 and len(np.asarray(values).shape) == 1:
        arr = np.asarray(values, dtype=float).reshape(-1, 1)
    for i, row in enumerate(arr):
        win.push(Sample(t=t_s + i, x=row))
    return win


class TestScaledDistances:
    def test_symmetric_pair(self):
        r = scaled_distances(np.array([[0.0], [2.0]]), np.array([1.0]))
        assert np.allclose(r, [1.0, 1.0])

    def test_direct_arithmetic(self):
        r = scaled_distances(np.array([[0.0], [3.0]]), np.array([0.0]))
        assert np.allclose(r, [0.0, 2.0])

    def test_degenerate_all_equal(self):
        r = scaled_distances(np.array([[1.0, 2.0], [1.0, 2.0]]), np.array([1.0, 2.0]))
        assert np.all(r == 0.0)


class TestKernelWeights:
    def test_zero_decay_global_limit(self):
        assert np.all(kernel_weights(np.array([0.3, 5.0, 100.0]), 0.0) == 1.0)

    def test_unit_evaluation(self):
        assert np.isclose(kernel_weights(np.array([1.0]), 1.0)[0], math.exp(-1.0))

    def test_tightest_default_decay(self):
        # independent evaluation of exp(-16)
        expected = math.exp(-16.0)
        assert abs(expected - 1.1254e-7) / expected < 1e-3
        assert np.isclose(kernel_weights(np.array([1.0]), 16.0)[0], expected, rtol=1e-12)


class TestEss:
    def test_uniform_weights(self):
        assert np.isclose(ess(np.ones(5)), 5.0)

    def test_hand_evaluated(self):
        assert np.isclose(ess(np.array([1.0, 0.5])), 1.8)

    def test_concentration_limit(self):
        w = np.array([1.0] + [1e-12] * 9)
        assert abs(ess(w) - 1.0) < 1e-9

    def test_monotone_in_decay_property(self):
        rng = np.random.default_rng(11)
        grid = LocalityGrid().decays
        for _ in range(200):
            r = rng.uniform(0, 3, size=rng.integers(2, 128))
            values = [ess(kernel_weights(r, th)) for th in grid]
            for a, b in zip(values, values[1:]):
                assert b <= a + 1e-9

    def test_range_property(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            n = rng.integers(1, 64)
            w = rng.uniform(1e-6, 1.0, size=n)
            v = ess(w)
            assert 1.0 - 1e-9 <= v <= n + 1e-9


class TestEssGate:
    def test_boundary_inclusive(self):
        w = np.ones(9)
        assert ess_gate(w, 3.0, 2)  # ESS = 9.0 = 3*(2+1)

    def test_just_below(self):
        # craft weights with ESS slightly under 9
        w = np.array([1.0] * 8 + [0.8])
        assert ess_formula(w) < 9.0
        assert not ess_gate(w, 3.0, 2)

    def test_formula_oracle_iid_points(self):
        rng = np.random.default_rng(42)
        X = rng.standard_normal((10, 2))
        x_q = rng.standard_normal(2)
        r = scaled_distances(X, x_q)
        w = kernel_weights(r, LocalityGrid().max_decay)
        expected_pass = ess_formula(list(w)) >= 3.0 * (2 + 1)
        assert ess_gate(w, 3.0, 2) == expected_pass

    def test_gate_sufficiency_across_grid(self):
        rng = np.random.default_rng(5)
        grid = LocalityGrid()
        for _ in range(50):
            X = rng.standard_normal((rng.integers(5, 80), 3))
            x_q = rng.standard_normal(3)
            r = scaled_distances(X, x_q)
            if ess_gate(kernel_weights(r, grid.max_decay), 3.0, 3):
                for th in grid.decays:
                    assert ess(kernel_weights(r, th)) >= 3.0 * 4 - 1e-9


class TestWlr:
    def test_exact_linear_recovery(self):
        X = np.linspace(-1, 1, 12).reshape(-1, 1)
        Y = 2.0 * X + 1.0
        beta = wlr_fit(X, Y, np.ones(12), ridge_lambda=0.0)
        assert abs(beta[0, 0] - 2.0) < 1e-10
        assert abs(beta[1, 0] - 1.0) < 1e-10
        resid = np.hstack([X, np.ones((12, 1))]) @ beta - Y
        assert np.max(np.abs(resid)) <= 1e-10

    def test_indicator_weights_interpolate_two_points(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(8, 1))
        Y = rng.normal(size=(8, 1))
        w = np.zeros(8)
        w[2] = w[6] = 1.0
        beta = wlr_fit(X, Y, w, ridge_lambda=0.0)
        # oracle: direct normal-equation solve on the 2-point subset
        A = np.array([[X[2, 0], 1.0], [X[6, 0], 1.0]])
        coef = np.linalg.solve(A, np.array([Y[2, 0], Y[6, 0]]))
        for idx in (2, 6):
            pred = wlr_predict(beta, X[idx])
            assert abs(pred[0] - Y[idx, 0]) < 1e-8
        assert np.allclose(beta[:, 0], coef, atol=1e-8)

    def test_identical_rows_ridge_guard(self):
        X = np.tile(np.array([[1.5, -0.5]]), (6, 1))
        Y = np.arange(12.0).reshape(6, 2)
        w = np.linspace(0.5, 1.0, 6)
        beta = wlr_fit(X, Y, w, ridge_lambda=1e-8)
        pred = wlr_predict(beta, X[0])
        wmean = (w[:, None] * Y).sum(axis=0) / w.sum()
        assert np.max(np.abs(pred - wmean) / np.maximum(np.abs(wmean), 1e-12)) < 1e-8

    def test_singular_without_ridge(self):
        X = np.tile(np.array([[1.0]]), (4, 1))
        Y = np.ones((4, 1))
        with pytest.raises(NumericalError):
            wlr_fit(X, Y, np.ones(4), ridge_lambda=0.0)

    def test_first_order_optimality_property(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(30, 2))
        Y = rng.normal(size=(30, 2))
        w = rng.uniform(0.1, 1.0, size=30)
        beta = wlr_fit(X, Y, w, ridge_lambda=0.0)
        X_aug = np.hstack([X, np.ones((30, 1))])
        A = X_aug.T @ (w[:, None] * X_aug)
        B = X_aug.T @ (w[:, None] * Y)
        assert np.linalg.norm(A @ beta - B) <= 1e-8 * np.linalg.norm(B)
        base = np.sum(w[:, None] * (X_aug @ beta - Y) ** 2)
        for _ in range(1000):
            delta = rng.normal(scale=1e-3, size=beta.shape)
            perturbed = np.sum(w[:, None] * (X_aug @ (beta + delta) - Y) ** 2)
            assert perturbed >= base * (1 - 1e-8)


class TestWlrPredict:
    def test_affine_evaluation(self):
        beta = np.array([[2.0], [1.0]])
        assert wlr_predict(beta, np.array([3.0]))[0] == 7.0

    def test_zero_beta(self):
        assert np.all(wlr_predict(np.zeros((3, 2)), np.array([1.0, 2.0])) == 0.0)

    def test_identity_map(self):
        beta = np.vstack([np.eye(2), np.zeros((1, 2))])
        x = np.array([0.3, -0.7])
        assert np.allclose(wlr_predict(beta, x), x)


class TestProxyError:
    def test_exact_prediction(self):
        stats = WindowStats(mu=np.zeros(2), sigma=np.ones(2))
        assert proxy_error(np.array([1.0, 2.0]), np.array([1.0, 2.0]), stats) == 0.0

    def test_unit_conversion(self):
        stats = WindowStats(mu=np.zeros(1), sigma=np.array([2.0]))
        assert np.isclose(proxy_error(np.array([1.0]), np.array([0.0]), stats), 2.0)

    def test_pythagorean(self):
        stats = WindowStats(mu=np.zeros(2), sigma=np.array([1.0, 1.0]))
        assert np.isclose(proxy_error(np.array([3.0, 4.0]), np.zeros(2), stats), 5.0)


class TestMonotone:
    def test_decreasing(self):
        assert monotone_test(np.array([5.0, 4.0, 3.0]))

    def test_ties_allowed(self):
        assert monotone_test(np.array([3.0, 3.0, 3.0]))

    def test_violation(self):
        assert not monotone_test(np.array([3.0, 4.0, 2.0]))

    def test_needs_two_entries(self):
        with pytest.raises(ValueError):
            monotone_test(np.array([1.0]))


class TestEffectiveRadius:
    def test_log_e(self):
        assert np.isclose(effective_radius(1.0, 1.0 / math.e), 1.0)

    def test_direct_evaluation(self):
        expected = math.log(100.0) / 2.0
        assert abs(expected - 2.302585) < 1e-6
        assert np.isclose(effective_radius(2.0, 0.01), expected, rtol=1e-12)

    def test_monotone_decreasing_to_zero(self):
        cut = 0.1
        values = [effective_radius(th, cut) for th in (0.5, 1.0, 4.0, 64.0, 1e6)]
        assert all(b < a for a, b in zip(values, values[1:]))
        assert values[-1] < 1e-5

    def test_zero_decay_is_global(self):
        assert effective_radius(0.0, 0.1) == float("inf")


class TestGridAndConfig:
    def test_grid_must_increase(self):
        with pytest.raises(ValueError):
            LocalityGrid((0.0, 1.0, 1.0))

    def test_default_grid(self):
        assert LocalityGrid().decays == (0.0, 0.1, 1.0, 2.0, 4.0, 8.0, 16.0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            CaliperConfig(ess_multiplier=0.0)
        with pytest.raises(ValueError):
            CaliperConfig(persistence=0)
        with pytest.raises(ValueError):
            CaliperConfig(weight_cutoff=1.5)


class TestCaliperStep:
    def test_insufficient_window_state_unchanged(self):
        cfg = CaliperConfig()
        win = window_from([1.0, 2.0])
        state = CaliperState.fresh(0, len(cfg.grid))
        decision, new_state = caliper_step(win, state, cfg)
        assert isinstance(decision, InsufficientWindow)
        assert new_state is state

    def test_noiseless_contraction_triggers(self):
        cfg = CaliperConfig()
        win = PostDriftWindow(t_s=0)
        state = CaliperState.fresh(0, len(cfg.grid))
        x = 1.0
        fired = None
        for t in range(80):
            win.push(Sample(t=t, x=np.array([x])))
            decision, state = caliper_step(win, state, cfg)
            if isinstance(decision, Trigger):
                fired = decision
                break
            x = 0.9 * x
        assert fired is not None
        assert fired.window_size == len(win)
        # all proxy errors were numerical noise, accumulated as exact zeros
        assert np.all(state.cum_errors == 0.0)

    def test_gate_failure_freezes_errors(self):
        cfg = CaliperConfig()
        rng = np.random.default_rng(0)
        win = window_from(rng.standard_normal((6, 3)))
        state = CaliperState(cum_errors=np.full(len(cfg.grid), 7.0), pass_streak=1, t_s=0)
        decision, new_state = caliper_step(win, state, cfg)
        assert isinstance(decision, EssGateFailed)
        assert np.all(new_state.cum_errors == 7.0)
        assert new_state.pass_streak == 0

    def test_alarm_time_mismatch(self):
        cfg = CaliperConfig()
        win = window_from([1.0, 2.0, 3.0], t_s=5)
        with pytest.raises(ValueError):
            caliper_step(win, CaliperState.fresh(0, len(cfg.grid)), cfg)

    def test_deterministic(self):
        cfg = CaliperConfig()
        rng = np.random.default_rng(3)
        values = rng.standard_normal((60, 2))
        outcomes = []
        for _ in range(2):
            win = PostDriftWindow(t_s=0)
            state = CaliperState.fresh(0, len(cfg.grid))
            row = []
            for t, v in enumerate(values):
                win.push(Sample(t=t, x=v))
                decision, state = caliper_step(win, state, cfg)
                row.append((decision_label(decision), state.cum_errors.copy()))
            outcomes.append(row)
        for (la, ea), (lb, eb) in zip(*outcomes):
            assert la == lb
            assert np.array_equal(ea, eb)

    def test_cumulative_errors_never_decrease(self):
        cfg = CaliperConfig()
        rng = np.random.default_rng(8)
        win = PostDriftWindow(t_s=0)
        state = CaliperState.fresh(0, len(cfg.grid))
        prev = state.cum_errors.copy()
        x = rng.standard_normal(2)
        for t in range(120):
            win.push(Sample(t=t, x=x))
            _, state = caliper_step(win, state, cfg)
            assert np.all(state.cum_errors >= prev - 1e-15)
            prev = state.cum_errors.copy()
            x = 0.8 * x + 0.1 * rng.standard_normal(2)

    def test_persistence_delays_trigger(self):
        cfg1 = CaliperConfig(persistence=1)
        cfg3 = CaliperConfig(persistence=3)
        first = {}
        for tag, cfg in (("p1", cfg1), ("p3", cfg3)):
            win = PostDriftWindow(t_s=0)
            state = CaliperState.fresh(0, len(cfg.grid))
            x = np.array([1.0, -0.5])
            for t in range(200):
                win.push(Sample(t=t, x=x.copy()))
                decision, state = caliper_step(win, state, cfg)
                if isinstance(decision, Trigger):
                    first[tag] = t
                    break
                x = 0.9 * x
        assert first["p3"] == first["p1"] + 2

    def test_matches_reference_on_iid_gaussian(self):
        cfg = CaliperConfig()
        rng = np.random.default_rng(17)
        values = rng.standard_normal((150, 3))
        expected = reference_decision_sequence(values, cfg.grid.decays)
        win = PostDriftWindow(t_s=0)
        state = CaliperState.fresh(0, len(cfg.grid))
        got = []
        for t, v in enumerate(values):
            win.push(Sample(t=t, x=v))
            decision, state = caliper_step(win, state, cfg)
            got.append(decision_label(decision))
        assert got == expected
