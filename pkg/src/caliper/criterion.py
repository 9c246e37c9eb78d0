"""Data-side stopping criterion for post-drift retraining.

Each update on a growing post-drift window runs: normalize -> split into
reference pairs and a query pair -> scaled query distances -> effective
sample size gate at the tightest locality -> one weighted local regression
per locality value -> cumulative proxy-error accumulation -> monotone
non-increase test across the locality grid. A sustained pass triggers
retraining on the current window.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .core import PostDriftWindow, WindowStats, normalize_window, split
from .errors import InsufficientWindowError, NumericalError

DEFAULT_DECAYS = (0.0, 0.1, 1.0, 2.0, 4.0, 8.0, 16.0)

# Proxy errors at or below this raw-unit magnitude are artifacts (solver
# roundoff, ridge-guard bias) rather than signal and accumulate as exact
# zeros, so exactly-predictable windows produce tied (hence non-increasing)
# cumulative curves. Far below any meaningful desk-scale error.
ERROR_FLOOR = 1e-6


@dataclass(frozen=True)
class LocalityGrid:
    """Strictly increasing kernel decay rates; the last entry is the tightest."""

    decays: tuple = DEFAULT_DECAYS

    def __post_init__(self):
        d = tuple(float(v) for v in self.decays)
        if len(d) < 2:
            raise ValueError("locality grid needs at least 2 entries")
        if any(b <= a for a, b in zip(d, d[1:])):
            raise ValueError(f"locality grid must be strictly increasing: {d}")
        if d[0] < 0 or d[-1] <= 0:
            raise ValueError(f"locality grid must be non-negative with positive maximum: {d}")
        object.__setattr__(self, "decays", d)

    def __len__(self) -> int:
        return len(self.decays)

    @property
    def max_decay(self) -> float:
        return self.decays[-1]


@dataclass(frozen=True)
class CaliperConfig:
    """Tuning knobs of the stopping criterion.

    ess_multiplier scales the gate threshold ess >= ess_multiplier * (d + 1);
    ridge_lambda is a scale-relative regularizer for the local solves;
    persistence is how many consecutive monotone passes are required;
    weight_cutoff maps decay rates to effective radii.
    """

    grid: LocalityGrid = field(default_factory=LocalityGrid)
    ess_multiplier: float = 3.0
    ridge_lambda: float = 1e-8
    persistence: int = 1
    weight_cutoff: float = 0.1

    def __post_init__(self):
        if self.ess_multiplier <= 0:
            raise ValueError("ess_multiplier must be positive")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be non-negative")
        if self.persistence < 1:
            raise ValueError("persistence must be >= 1")
        if not 0.0 < self.weight_cutoff < 1.0:
            raise ValueError("weight_cutoff must lie in (0, 1)")


@dataclass(frozen=True)
class CaliperState:
    """Cumulative proxy errors per grid entry plus the monotone pass streak."""

    cum_errors: np.ndarray
    pass_streak: int
    t_s: int

    @classmethod
    def fresh(cls, t_s: int, grid_size: int) -> "CaliperState":
        return cls(cum_errors=np.zeros(grid_size), pass_streak=0, t_s=t_s)


@dataclass(frozen=True)
class InsufficientWindow:
    """Fewer than 3 samples: no reference pair and query pair yet."""


@dataclass(frozen=True)
class EssGateFailed:
    """Effective sample size at the tightest locality is below the gate."""

    ess: float


@dataclass(frozen=True)
class NotMonotone:
    """Sustained monotone non-increase across the grid not (yet) established."""


@dataclass(frozen=True)
class Trigger:
    """Retraining triggered on the current window of this many samples."""

    window_size: int


Decision = Union[InsufficientWindow, EssGateFailed, NotMonotone, Trigger]


def decision_label(decision: Decision) -> str:
    """Short stable name for logs and CSV output."""
    return {
        InsufficientWindow: "insufficient_window",
        EssGateFailed: "ess_gate_failed",
        NotMonotone: "not_monotone",
        Trigger: "trigger",
    }[type(decision)]


def scaled_distances(X_h: np.ndarray, x_q: np.ndarray) -> np.ndarray:
    """Euclidean reference-to-query distances divided by their mean.

    A zero mean distance (all references equal the query) maps to all-zero
    scaled distances.
    """
    raw = np.linalg.norm(np.asarray(X_h, dtype=float) - np.asarray(x_q, dtype=float), axis=1)
    mean = raw.mean()
    if mean == 0.0:
        return np.zeros_like(raw)
    return raw / mean


def kernel_weights(r: np.ndarray, decay: float) -> np.ndarray:
    """Exponential kernel weights exp(-decay * r)."""
    return np.exp(-decay * np.asarray(r, dtype=float))


def ess(w: np.ndarray) -> float:
    """Effective sample size (sum w)^2 / sum(w^2); lies in [1, n]."""
    w = np.asarray(w, dtype=float)
    s2 = float(np.dot(w, w))
    if s2 == 0.0:
        return 0.0
    s1 = float(w.sum())
    return s1 * s1 / s2


def ess_gate(w_at_max_decay: np.ndarray, ess_multiplier: float, d: int) -> bool:
    """True when ess(w) >= ess_multiplier * (d + 1), boundary inclusive."""
    return ess(w_at_max_decay) >= ess_multiplier * (d + 1)


def wlr_fit(X_h: np.ndarray, Y_h: np.ndarray, w: np.ndarray, ridge_lambda: float) -> np.ndarray:
    """Weighted affine least squares via the normal equations.

    Returns beta of shape (d+1, d): feature rows first, bias row last.
    ridge_lambda is applied as ridge_lambda * trace(A) / p on the diagonal,
    keeping the guard unit-free; pass 0 to solve the raw system.
    """
    X_h = np.atleast_2d(np.asarray(X_h, dtype=float))
    Y_h = np.atleast_2d(np.asarray(Y_h, dtype=float))
    w = np.asarray(w, dtype=float)
    n, d = X_h.shape
    p = d + 1
    X_aug = np.hstack([X_h, np.ones((n, 1))])
    WX = X_aug * w[:, None]
    A = X_aug.T @ WX
    B = WX.T @ Y_h
    lam = ridge_lambda * np.trace(A) / p
    if lam > 0.0:
        A = A + lam * np.eye(p)
    try:
        beta = np.linalg.solve(A, B)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular weighted system (n={n}, d={d}): {exc}") from exc
    if not np.all(np.isfinite(beta)):
        raise NumericalError(f"non-finite solution of weighted system (n={n}, d={d})")
    return beta


def wlr_predict(beta: np.ndarray, x_q: np.ndarray) -> np.ndarray:
    """Evaluate the affine fit at the query: [x_q | 1] @ beta."""
    x_aug = np.append(np.asarray(x_q, dtype=float), 1.0)
    return x_aug @ beta


def proxy_error(y_q: np.ndarray, y_hat: np.ndarray, stats: WindowStats) -> float:
    """One-step prediction error in original units.

    Both vectors are de-normalized through the window stats before taking
    the Euclidean norm, so accumulated errors are comparable across updates.
    """
    diff = (np.asarray(y_q, dtype=float) - np.asarray(y_hat, dtype=float)) * stats.sigma
    return float(np.linalg.norm(diff))


def monotone_test(E: np.ndarray) -> bool:
    """True when E is non-increasing along the grid (ties allowed, no slack)."""
    E = np.asarray(E, dtype=float)
    if E.shape[0] < 2:
        raise ValueError("monotone test needs at least 2 grid entries")
    return bool(np.all(E[:-1] >= E[1:]))


def effective_radius(decay: float, weight_cutoff: float) -> float:
    """Radius beyond which kernel weight drops below the cutoff: ln(1/cutoff)/decay.

    A zero decay rate is the global limit and maps to +inf.
    """
    if not 0.0 < weight_cutoff < 1.0:
        raise ValueError("weight_cutoff must lie in (0, 1)")
    if decay < 0:
        raise ValueError("decay must be non-negative")
    if decay == 0.0:
        return float("inf")
    return float(np.log(1.0 / weight_cutoff) / decay)


def caliper_step(
    window: PostDriftWindow, state: CaliperState, config: CaliperConfig
) -> tuple[Decision, CaliperState]:
    """One criterion update on the current post-drift window.

    Pure function of its inputs: returns the decision and the successor
    state. On a failed gate the cumulative errors stay frozen; on a failed
    monotone test they are kept and the pass streak resets.
    """
    if window.t_s != state.t_s:
        raise ValueError(f"window alarm time {window.t_s} != state alarm time {state.t_s}")
    decays = config.grid.decays
    if state.cum_errors.shape[0] != len(decays):
        raise ValueError("state grid size does not match config grid")

    if len(window) < 3:
        return InsufficientWindow(), state

    Z, stats = normalize_window(window)
    parts = split(Z)
    d = Z.shape[1]
    r = scaled_distances(parts.X_h, parts.x_q)

    w_tight = kernel_weights(r, config.grid.max_decay)
    ess_tight = ess(w_tight)
    if ess_tight < config.ess_multiplier * (d + 1):
        return EssGateFailed(ess=ess_tight), replace(state, pass_streak=0)

    new_E = state.cum_errors.copy()
    for k, decay in enumerate(decays):
        w = w_tight if decay == config.grid.max_decay else kernel_weights(r, decay)
        beta = wlr_fit(parts.X_h, parts.Y_h, w, config.ridge_lambda)
        e = proxy_error(parts.y_q, wlr_predict(beta, parts.x_q), stats)
        if e > ERROR_FLOOR:
            new_E[k] += e

    if monotone_test(new_E):
        streak = min(state.pass_streak + 1, config.persistence)
        new_state = CaliperState(cum_errors=new_E, pass_streak=streak, t_s=state.t_s)
        if streak >= config.persistence:
            return Trigger(window_size=len(window)), new_state
        return NotMonotone(), new_state
    return NotMonotone(), CaliperState(cum_errors=new_E, pass_streak=0, t_s=state.t_s)
