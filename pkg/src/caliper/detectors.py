"""Scalar-stream drift detectors that raise the alarms the window-sizing
criterion consumes.

AdwinDetector keeps an exponential histogram of (count, sum, m2) buckets and
cuts the window whenever two subwindows disagree in mean beyond a
variance-aware bound. KswinDetector slides a fixed window and compares the
most recent values against a random subsample of the older part with a
two-sample Kolmogorov-Smirnov test.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np


def ks_statistic(a, b) -> float:
    """Exact two-sample KS statistic: sup |F_a - F_b| over the merged support."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_statistic needs non-empty samples")
    support = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, support, side="right") / a.size
    cdf_b = np.searchsorted(b, support, side="right") / b.size
    return float(np.abs(cdf_a - cdf_b).max())


def ks_pvalue(D: float, n: int, m: int) -> float:
    """Asymptotic two-sample KS p-value via the alternating Kolmogorov series.

    Evaluates Q(lam) = 2 * sum_{r>=1} (-1)^(r-1) exp(-2 r^2 lam^2) at
    lam = D * sqrt(nm/(n+m)), running at least 25 terms and stopping once a
    term falls below 1e-12.
    """
    if n < 1 or m < 1:
        raise ValueError("sample sizes must be >= 1")
    if not 0.0 <= D <= 1.0:
        raise ValueError(f"KS statistic must lie in [0, 1], got {D}")
    lam = D * math.sqrt(n * m / (n + m))
    if lam < 1e-3:
        return 1.0
    total = 0.0
    sign = 1.0
    r = 1
    while r <= 100_000:
        term = math.exp(-2.0 * lam * lam * r * r)
        total += sign * term
        if r >= 25 and term < 1e-12:
            break
        if term == 0.0:
            break
        sign = -sign
        r += 1
    return min(max(2.0 * total, 0.0), 1.0)


def monitor_statistic(residual) -> float:
    """Scalar fed to the detectors: mean absolute component of a residual."""
    return float(np.mean(np.abs(np.asarray(residual, dtype=float))))


class _Bucket:
    __slots__ = ("count", "total", "m2")

    def __init__(self, count: int, total: float, m2: float):
        self.count = count
        self.total = total
        self.m2 = m2


class AdwinDetector:
    """Adaptive-windowing mean-change detector with exponential histogram.

    Buckets at level i hold 2^i elements; at most max_buckets buckets are
    kept per level before the two oldest merge into the next level. Every
    update tests all admissible cuts and drops the oldest bucket while any
    cut violates the bound, so the retained window always looks stationary
    to the test.
    """

    MIN_WINDOW = 10
    MIN_SUBWINDOW = 5

    def __init__(self, delta: float = 0.002, max_buckets: int = 5):
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        self.delta = delta
        self.max_buckets = max_buckets
        # levels[i] is oldest-first; level 0 holds the newest single elements
        self._levels: list[deque[_Bucket]] = [deque()]
        self.width = 0
        self.total = 0.0
        self.m2 = 0.0

    @property
    def mean(self) -> float:
        return self.total / self.width if self.width else 0.0

    @property
    def variance(self) -> float:
        # m2 can round to a tiny negative after many bucket drops
        return max(self.m2, 0.0) / self.width if self.width else 0.0

    def update(self, v: float) -> bool:
        """Insert one value; True when the window was cut (drift alarm)."""
        v = float(v)
        if not math.isfinite(v):
            raise ValueError("detector input must be finite")
        if self.width > 0:
            gap = v - self.total / self.width
            self.m2 += self.width * gap * gap / (self.width + 1)
        self.width += 1
        self.total += v
        self._levels[0].append(_Bucket(1, v, 0.0))
        self._compress()
        return self._shrink()

    def iter_buckets(self):
        """Yield (count, total, m2) oldest-first; capacities are powers of two."""
        for level in range(len(self._levels) - 1, -1, -1):
            for b in self._levels[level]:
                yield (b.count, b.total, b.m2)

    def _compress(self):
        level = 0
        while level < len(self._levels):
            row = self._levels[level]
            if len(row) <= self.max_buckets:
                break
            if level + 1 == len(self._levels):
                self._levels.append(deque())
            a = row.popleft()
            b = row.popleft()
            mu_gap = a.total / a.count - b.total / b.count
            m2 = a.m2 + b.m2 + a.count * b.count * mu_gap * mu_gap / (a.count + b.count)
            self._levels[level + 1].append(_Bucket(a.count + b.count, a.total + b.total, m2))
            level += 1

    def _shrink(self) -> bool:
        changed = False
        if self.width <= self.MIN_WINDOW:
            return False
        reduced = True
        while reduced:
            reduced = False
            n0 = 0
            s0 = 0.0
            buckets = list(self.iter_buckets())
            for count, total, _ in buckets[:-1]:
                n0 += count
                s0 += total
                n1 = self.width - n0
                if n0 <= self.MIN_SUBWINDOW + 1 or n1 <= self.MIN_SUBWINDOW + 1:
                    continue
                if self._cut_violation(n0, s0, n1, self.total - s0):
                    self._drop_oldest()
                    changed = True
                    reduced = self.width > self.MIN_WINDOW
                    break
        return changed

    def _cut_violation(self, n0: int, s0: float, n1: int, s1: float) -> bool:
        inv_m = 1.0 / (n0 - self.MIN_SUBWINDOW + 1) + 1.0 / (n1 - self.MIN_SUBWINDOW + 1)
        dd = math.log(2.0 * math.log(self.width) / self.delta)
        var = max(self.m2, 0.0) / self.width
        eps = math.sqrt(2.0 * inv_m * var * dd) + (2.0 / 3.0) * inv_m * dd
        return abs(s0 / n0 - s1 / n1) > eps

    def _drop_oldest(self):
        for level in range(len(self._levels) - 1, -1, -1):
            row = self._levels[level]
            if row:
                b = row.popleft()
                rest = self.width - b.count
                if rest > 0:
                    mu_gap = b.total / b.count - (self.total - b.total) / rest
                    self.m2 -= b.m2 + b.count * rest * mu_gap * mu_gap / self.width
                else:
                    self.m2 = 0.0
                self.width = rest
                self.total -= b.total
                while len(self._levels) > 1 and not self._levels[-1]:
                    self._levels.pop()
                return
        raise RuntimeError("drop from empty window")


class KswinDetector:
    """Sliding-window two-sample KS drift detector.

    Once the buffer holds window_size values, the newest stat_size values
    are compared against stat_size values drawn without replacement from the
    older remainder; a p-value below alpha alarms and resets the buffer to
    the newest stat_size values.
    """

    def __init__(
        self,
        alpha: float = 0.05,
        window_size: int = 100,
        stat_size: int = 30,
        seed: int | None = None,
    ):
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if stat_size >= window_size:
            raise ValueError("stat_size must be smaller than window_size")
        if stat_size < 1:
            raise ValueError("stat_size must be >= 1")
        self.alpha = alpha
        self.window_size = window_size
        self.stat_size = stat_size
        self._rng = np.random.default_rng(seed)
        self._buffer: deque[float] = deque(maxlen=window_size)
        self.p_value: float | None = None
        self.tests_run = 0

    def __len__(self) -> int:
        return len(self._buffer)

    def update(self, v: float) -> bool:
        """Insert one value; True when the recent segment looks drifted."""
        v = float(v)
        if not math.isfinite(v):
            raise ValueError("detector input must be finite")
        self._buffer.append(v)
        if len(self._buffer) < self.window_size:
            return False
        values = np.fromiter(self._buffer, dtype=float, count=self.window_size)
        recent = values[-self.stat_size :]
        older = values[: -self.stat_size]
        idx = self._rng.choice(older.size, size=self.stat_size, replace=False)
        stat = ks_statistic(older[idx], recent)
        self.p_value = ks_pvalue(stat, self.stat_size, self.stat_size)
        self.tests_run += 1
        if self.p_value < self.alpha:
            self._buffer = deque(recent.tolist(), maxlen=self.window_size)
            return True
        return False
