"""Empirical state dependence: the probability that radius-r neighbors stay
c*r-neighbors after one step, estimated by exhaustive pair enumeration on a
window, and the triggered-vs-rejected comparison across effective radii.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import normalize_window
from .criterion import LocalityGrid, effective_radius
from .errors import UndefinedEstimateError


@dataclass(frozen=True)
class StateDepEstimate:
    """Fraction of conditioning pairs whose successors stayed c*r-close."""

    alpha_hat: float
    pairs_total: int
    r: float
    c: float


@dataclass(frozen=True)
class RadiusComparison:
    decay: float
    radius: float
    alpha_triggered: float | None
    alpha_rejected: float | None
    gap: float | None
    defined: bool


def _pair_distances(window):
    """Distances among predecessors and among their aligned successors."""
    Z, _ = normalize_window(window)
    n = Z.shape[0]
    if n < 3:
        raise UndefinedEstimateError(f"window of length {n} has too few transition pairs")
    states = Z[:-1]
    succ = Z[1:]
    d_state = np.linalg.norm(states[:, None, :] - states[None, :, :], axis=2)
    d_succ = np.linalg.norm(succ[:, None, :] - succ[None, :, :], axis=2)
    off_diag = ~np.eye(n - 1, dtype=bool)
    return d_state, d_succ, off_diag


def alpha_hat(window, r: float, c: float) -> StateDepEstimate:
    """Estimate state dependence over all ordered in-window pairs.

    Conditions on normalized state distance <= r; counts how often the
    one-step successors stay within c*r. Raises when no pair satisfies the
    condition.
    """
    if r <= 0 or c <= 0:
        raise ValueError("r and c must be positive")
    d_state, d_succ, off_diag = _pair_distances(window)
    cond = (d_state <= r) & off_diag
    total = int(cond.sum())
    if total == 0:
        raise UndefinedEstimateError(f"no pairs within radius {r}")
    hits = int((cond & (d_succ <= c * r)).sum())
    return StateDepEstimate(alpha_hat=hits / total, pairs_total=total, r=float(r), c=float(c))


def local_expansion_estimate(window, r: float) -> float:
    """Largest observed one-step expansion ratio among radius-r neighbors.

    Empirical stand-in for the (unknown) local Lipschitz constant; pairs at
    zero state distance are skipped.
    """
    d_state, d_succ, off_diag = _pair_distances(window)
    cond = (d_state <= r) & (d_state > 0) & off_diag
    if not cond.any():
        raise UndefinedEstimateError(f"no separated pairs within radius {r}")
    return float(np.max(d_succ[cond] / d_state[cond]))


def default_expansion_constant(window, r: float) -> float:
    """2x the empirical local expansion ratio, the default choice for c."""
    return 2.0 * local_expansion_estimate(window, r)


def compare_windows(
    triggered, rejected, grid: LocalityGrid, weight_cutoff: float, c: float
) -> list[RadiusComparison]:
    """Per-radius state-dependence gap between two windows.

    Radii come from the grid through the effective-radius map; entries where
    either estimate is undefined are flagged instead of raised.
    """
    out = []
    for decay in grid.decays:
        radius = effective_radius(decay, weight_cutoff)
        try:
            a_trig = alpha_hat(triggered, radius, c).alpha_hat
            a_rej = alpha_hat(rejected, radius, c).alpha_hat
        except UndefinedEstimateError:
            out.append(RadiusComparison(decay, radius, None, None, None, False))
            continue
        out.append(RadiusComparison(decay, radius, a_trig, a_rej, a_trig - a_rej, True))
    return out
