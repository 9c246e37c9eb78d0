"""Stream sample types, the post-drift window buffer and window-local
normalization/split used by every downstream module.

All feature vectors are float64 numpy arrays. Normalization is a per-column
z-score computed inside the current window only; it exists to stabilize
distances for the locality kernel and is never shared across windows.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientWindowError, StreamError

SIGMA_FLOOR = 1e-8
DEFAULT_WINDOW_CAP = 4096


@dataclass(frozen=True)
class Sample:
    """One stream observation: time index ``t`` and feature vector ``x``."""

    t: int
    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or x.size < 1:
            raise StreamError(f"sample at t={self.t}: x must be a 1-d vector, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise StreamError(f"sample at t={self.t}: non-finite feature value")
        if self.t < 0:
            raise StreamError(f"negative time index {self.t}")
        object.__setattr__(self, "x", x)

    @property
    def dim(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class WindowStats:
    """Per-dimension mean and floored standard deviation of one window."""

    mu: np.ndarray
    sigma: np.ndarray


@dataclass(frozen=True)
class NormalizedSplit:
    """Reference pairs and query pair cut from a normalized window.

    ``Y_h[i]`` is the one-step successor of ``X_h[i]``; ``(x_q, y_q)`` is the
    most recent transition in the window.
    """

    X_h: np.ndarray
    Y_h: np.ndarray
    x_q: np.ndarray
    y_q: np.ndarray


class PostDriftWindow:
    """Bounded, time-ordered buffer of samples accumulated since a drift alarm.

    Time indices must be consecutive starting at the alarm time ``t_s``. When
    more than ``cap`` samples arrive the oldest are evicted and the window is
    flagged as capped.
    """

    def __init__(self, t_s: int, cap: int = DEFAULT_WINDOW_CAP):
        if cap < 1:
            raise ValueError(f"cap must be >= 1, got {cap}")
        self.t_s = t_s
        self.cap = cap
        self._xs: deque[np.ndarray] = deque(maxlen=cap)
        self._next_t = t_s
        self._dim: int | None = None
        self.capped = False

    def __len__(self) -> int:
        return len(self._xs)

    @property
    def dim(self) -> int:
        if self._dim is None:
            raise InsufficientWindowError("empty window has no dimension")
        return self._dim

    @property
    def last_t(self) -> int:
        return self._next_t - 1

    def push(self, s: Sample) -> "PostDriftWindow":
        """Append the next sample; evicts the oldest one when over cap."""
        if s.t != self._next_t:
            raise StreamError(f"expected sample at t={self._next_t}, got t={s.t}")
        if self._dim is None:
            self._dim = s.dim
        elif s.dim != self._dim:
            raise StreamError(f"dimension mismatch: window has d={self._dim}, sample has d={s.dim}")
        if len(self._xs) == self.cap:
            self.capped = True
        self._xs.append(s.x)
        self._next_t += 1
        return self

    def as_matrix(self) -> np.ndarray:
        """Window contents as an (n, d) array, oldest row first."""
        if not self._xs:
            raise InsufficientWindowError("empty window")
        return np.array(self._xs, dtype=float)


def push(window: PostDriftWindow, s: Sample) -> PostDriftWindow:
    """Functional alias for :meth:`PostDriftWindow.push`."""
    return window.push(s)


def normalize_window(window) -> tuple[np.ndarray, WindowStats]:
    """Z-score a window per dimension with population std and a variance floor.

    Accepts a :class:`PostDriftWindow`, a sequence of :class:`Sample`, or a
    raw (n, d) array. Constant columns get sigma floored so Z stays finite.
    """
    X = as_matrix(window)
    mu = X.mean(axis=0)
    sigma = np.maximum(X.std(axis=0), SIGMA_FLOOR)
    Z = (X - mu) / sigma
    return Z, WindowStats(mu=mu, sigma=sigma)


def denormalize(Z: np.ndarray, stats: WindowStats) -> np.ndarray:
    """Invert :func:`normalize_window` on rows or a single vector."""
    return np.asarray(Z, dtype=float) * stats.sigma + stats.mu


def split(Z: np.ndarray) -> NormalizedSplit:
    """Cut a normalized window into n-2 reference pairs plus the query pair."""
    Z = np.asarray(Z, dtype=float)
    n = Z.shape[0]
    if n < 3:
        raise InsufficientWindowError(f"need at least 3 samples to split, got {n}")
    return NormalizedSplit(X_h=Z[: n - 2], Y_h=Z[1 : n - 1], x_q=Z[n - 2], y_q=Z[n - 1])


def as_matrix(window) -> np.ndarray:
    """Coerce a window-like object to an (n, d) float array."""
    if isinstance(window, PostDriftWindow):
        return window.as_matrix()
    if isinstance(window, np.ndarray):
        X = np.asarray(window, dtype=float)
        if X.ndim != 2:
            raise StreamError(f"expected (n, d) array, got shape {X.shape}")
        return X
    seq = list(window)
    if not seq:
        raise InsufficientWindowError("empty window")
    if isinstance(seq[0], Sample):
        return np.array([s.x for s in seq], dtype=float)
    return np.array(seq, dtype=float).reshape(len(seq), -1)
