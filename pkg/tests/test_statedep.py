import numpy as np
import pytest

from caliper.criterion import LocalityGrid
from caliper.dynamics import StreamSpec, builtin_system, generate_stream
from caliper.errors import UndefinedEstimateError
from caliper.statedep import (
    alpha_hat,
    compare_windows,
    default_expansion_constant,
    local_expansion_estimate,
)

from oracles import alpha_hat_loops


def contraction_window(n=60, factor=0.5, d=2, seed=0, noise=0.0):
    rng = np.random.default_rng(seed)
    x = np.ones(d)
    rows = []
    for _ in range(n):
        rows.append(x + noise * rng.standard_normal(d))
        x = factor * x
    return np.array(rows)


def lorenz_window(n=120, seed=1):
    spec = StreamSpec(warmup_len=0, online_len=n, noise_sigma=0.0, seed=seed)
    return np.array([s.x for s in generate_stream(spec, builtin_system("lorenz"))])


class TestAlphaHat:
    def test_contraction_saturates(self):
        X = contraction_window(factor=0.5)
        est = alpha_hat(X, r=1.0, c=1.0)
        assert est.alpha_hat == 1.0
        assert est.pairs_total >= 1

    def test_no_pairs_within_radius(self):
        X = np.array([[0.0, 0.0], [100.0, 0.0], [0.0, 100.0], [100.0, 100.0]])
        with pytest.raises(UndefinedEstimateError):
            alpha_hat(X, r=1e-6, c=1.0)

    def test_window_too_short(self):
        with pytest.raises(UndefinedEstimateError):
            alpha_hat(np.zeros((2, 2)), r=1.0, c=1.0)

    def test_matches_double_loop_oracle(self):
        X = lorenz_window()
        for r, c in ((0.5, 2.0), (1.0, 1.5), (2.0, 1.0)):
            expected, total = alpha_hat_loops(X, r, c)
            est = alpha_hat(X, r=r, c=c)
            assert est.pairs_total == total
            assert est.alpha_hat == expected

    def test_bounds_and_monotone_in_c(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((40, 3))
        values = []
        for c in (0.5, 1.0, 2.0, 4.0):
            est = alpha_hat(X, r=2.0, c=c)
            assert 0.0 <= est.alpha_hat <= 1.0
            values.append(est.alpha_hat)
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            alpha_hat(contraction_window(), r=0.0, c=1.0)
        with pytest.raises(ValueError):
            alpha_hat(contraction_window(), r=1.0, c=-1.0)


class TestExpansionEstimate:
    def test_contraction_has_small_expansion(self):
        X = contraction_window(factor=0.5)
        est = local_expansion_estimate(X, r=2.0)
        assert est <= 1.0 + 1e-9

    def test_default_constant_is_double(self):
        X = contraction_window(factor=0.5)
        assert default_expansion_constant(X, 2.0) == 2.0 * local_expansion_estimate(X, 2.0)


class TestCompareWindows:
    def test_identical_windows_zero_gap(self):
        X = lorenz_window(seed=2)
        rows = compare_windows(X, X, LocalityGrid(), weight_cutoff=0.1, c=2.0)
        assert len(rows) == len(LocalityGrid())
        for row in rows:
            if row.defined:
                assert row.gap == 0.0

    def test_contraction_beats_noise(self):
        rng = np.random.default_rng(7)
        triggered = contraction_window(n=80, factor=0.8, noise=0.01, seed=3)
        rejected = rng.standard_normal((80, 2))
        rows = compare_windows(triggered, rejected, LocalityGrid(), weight_cutoff=0.1, c=1.5)
        defined = [row for row in rows if row.defined and np.isfinite(row.radius)]
        assert defined
        assert all(row.gap > 0 for row in defined if row.radius < 5)

    def test_radii_strictly_decreasing(self):
        X = lorenz_window(seed=4)
        rows = compare_windows(X, X, LocalityGrid(), weight_cutoff=0.1, c=2.0)
        radii = [row.radius for row in rows]
        assert all(b < a for a, b in zip(radii, radii[1:]))

    def test_undefined_radius_flagged(self):
        # windows far apart internally: tight radii have no pairs
        X = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0], [5.0, 5.0]])
        rows = compare_windows(X, X, LocalityGrid(), weight_cutoff=0.1, c=1.0)
        assert any(not row.defined for row in rows)
        for row in rows:
            if not row.defined:
                assert row.gap is None
