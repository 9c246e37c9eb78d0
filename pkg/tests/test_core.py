import numpy as np
import pytest

from caliper.core import (
    PostDriftWindow,
    Sample,
    as_matrix,
    denormalize,
    normalize_window,
    push,
    split,
)
from caliper.errors import InsufficientWindowError, StreamError


def w(values, t_s=0, cap=4096):
    win = PostDriftWindow(t_s=t_s, cap=cap)
    for i, v in enumerate(values):
        win.push(Sample(t=t_s + i, x=np.atleast_1d(np.asarray(v, dtype=float))))
    return win


class TestSample:
    def test_rejects_non_finite(self):
        with pytest.raises(StreamError):
            Sample(t=0, x=np.array([1.0, np.nan]))

    def test_rejects_empty_vector(self):
        with pytest.raises(StreamError):
            Sample(t=0, x=np.array([]))

    def test_dim(self):
        assert Sample(t=0, x=np.array([1.0, 2.0])).dim == 2


class TestPush:
    def test_first_sample_at_alarm_time(self):
        win = PostDriftWindow(t_s=10)
        push(win, Sample(t=10, x=np.array([1.0])))
        assert len(win) == 1

    def test_cap_evicts_oldest(self):
        win = w(range(5), cap=5)
        assert not win.capped
        win.push(Sample(t=5, x=np.array([5.0])))
        assert len(win) == 5
        assert win.capped
        assert win.as_matrix()[0, 0] == 1.0

    def test_time_gap_rejected(self):
        win = w([0.0, 1.0])
        with pytest.raises(StreamError):
            win.push(Sample(t=4, x=np.array([2.0])))

    def test_dimension_mismatch_rejected(self):
        win = w([0.0])
        with pytest.raises(StreamError):
            win.push(Sample(t=1, x=np.array([1.0, 2.0])))

    def test_strict_ordering_preserved(self):
        win = w(np.arange(20), cap=8)
        mat = win.as_matrix()
        assert len(win) <= 8
        assert np.all(np.diff(mat[:, 0]) == 1.0)


class TestNormalize:
    def test_two_point_column(self):
        Z, stats = normalize_window(np.array([[0.0], [2.0]]))
        assert stats.mu[0] == 1.0
        assert stats.sigma[0] == 1.0
        assert np.allclose(Z[:, 0], [-1.0, 1.0])

    def test_constant_column_floored(self):
        Z, stats = normalize_window(np.array([[5.0], [5.0], [5.0]]))
        assert stats.sigma[0] >= 1e-8
        assert np.allclose(Z[:, 0], 0.0)

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        X = rng.normal(3.0, 2.5, size=(40, 4))
        Z, stats = normalize_window(X)
        back = denormalize(Z, stats)
        assert np.max(np.abs(back - X) / np.maximum(np.abs(X), 1e-12)) < 1e-12

    def test_mean_zero_std_one_property(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            n = rng.integers(2, 60)
            d = rng.integers(1, 6)
            X = rng.normal(rng.normal(), abs(rng.normal()) + 0.1, size=(n, d))
            Z, _ = normalize_window(X)
            assert np.all(np.abs(Z.mean(axis=0)) <= 1e-10)
            assert np.all(np.abs(Z.std(axis=0) - 1.0) <= 1e-10)

    def test_accepts_window_object(self):
        Z, _ = normalize_window(w([0.0, 2.0]))
        assert np.allclose(Z[:, 0], [-1.0, 1.0])


class TestSplit:
    def test_smallest_legal(self):
        Z = np.arange(3.0).reshape(3, 1)
        parts = split(Z)
        assert parts.X_h.shape == (1, 1)
        assert parts.Y_h[0, 0] == 1.0
        assert parts.x_q[0] == 1.0
        assert parts.y_q[0] == 2.0

    def test_too_short(self):
        with pytest.raises(InsufficientWindowError):
            split(np.zeros((2, 1)))

    def test_index_bookkeeping(self):
        a, b, c, d, e = 1.0, 2.0, 4.0, 8.0, 16.0
        parts = split(np.array([[a], [b], [c], [d], [e]]))
        assert np.allclose(parts.X_h[:, 0], [a, b, c])
        assert np.allclose(parts.Y_h[:, 0], [b, c, d])
        assert parts.x_q[0] == d
        assert parts.y_q[0] == e

    def test_pure_reindexing_property(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            Z = rng.normal(size=(rng.integers(3, 40), rng.integers(1, 5)))
            parts = split(Z)
            recon = np.vstack([parts.X_h, parts.x_q[None, :]])
            assert np.array_equal(recon, Z[:-1])
            assert np.array_equal(np.vstack([parts.Y_h, parts.y_q[None, :]]), Z[1:])


class TestAsMatrix:
    def test_sample_sequence(self):
        mat = as_matrix([Sample(t=0, x=np.array([1.0, 2.0])), Sample(t=1, x=np.array([3.0, 4.0]))])
        assert mat.shape == (2, 2)

    def test_empty_rejected(self):
        with pytest.raises(InsufficientWindowError):
            as_matrix([])
