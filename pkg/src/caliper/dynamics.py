"""Synthetic stream generation from chaotic/contracting ODE systems with
sudden-drift injection via scheduled parameter or system switches.

Streams are sampled with a fixed step RK4 integrator; additive Gaussian
observation noise lands on the emitted samples only, never on the integrated
state. Everything is deterministic given the spec seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import Sample
from .errors import DivergenceError

DEFAULT_DT = 0.05
DEFAULT_BURN_IN = 500


@dataclass(frozen=True)
class OdeSystem:
    """Named right-hand side dx/dt = f(x, params) of dimension ``dim``."""

    name: str
    dim: int
    params: tuple
    rhs: Callable[[np.ndarray, tuple], np.ndarray]

    def with_params(self, params: Sequence[float]) -> "OdeSystem":
        return OdeSystem(self.name, self.dim, tuple(float(p) for p in params), self.rhs)


@dataclass(frozen=True)
class DriftEvent:
    """Regime switch applied from sample index ``time`` onward.

    Either swaps in a new system, or re-parameterizes the current one.
    ``reinit`` additionally draws a fresh initial state and burns it in,
    which models a segment-concatenation style of sudden drift.
    """

    time: int
    system: Optional[OdeSystem] = None
    params: Optional[tuple] = None
    reinit: bool = False


@dataclass(frozen=True)
class DriftSchedule:
    events: tuple = ()

    def __post_init__(self):
        ev = tuple(self.events)
        times = [e.time for e in ev]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"switch times must be strictly increasing: {times}")
        object.__setattr__(self, "events", ev)


@dataclass(frozen=True)
class StreamSpec:
    """Sampling plan: dt, warm-up/online lengths, observation noise, seed."""

    dt: float = DEFAULT_DT
    warmup_len: int = 1500
    online_len: int = 6000
    noise_sigma: float = 0.0
    seed: int = 0
    burn_in: int = DEFAULT_BURN_IN
    x0: Optional[tuple] = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if self.warmup_len < 0 or self.online_len < 0:
            raise ValueError("stream lengths must be non-negative")

    @property
    def total_len(self) -> int:
        return self.warmup_len + self.online_len


def rk4_step(sys: OdeSystem, x: np.ndarray, dt: float) -> np.ndarray:
    """Classical 4th-order Runge-Kutta step."""
    x = np.asarray(x, dtype=float)
    k1 = sys.rhs(x, sys.params)
    k2 = sys.rhs(x + 0.5 * dt * k1, sys.params)
    k3 = sys.rhs(x + 0.5 * dt * k2, sys.params)
    k4 = sys.rhs(x + dt * k3, sys.params)
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise DivergenceError(f"{sys.name}: non-finite state after step from {x}")
    return out


def generate_stream(
    spec: StreamSpec, base: OdeSystem, sched: DriftSchedule = DriftSchedule()
) -> list[Sample]:
    """Integrate ``base`` under the drift schedule and emit noisy samples.

    Sample index t counts emitted samples (warm-up first); a schedule event
    at time t changes the regime used to produce sample t and onward, so the
    prefix before the first event matches the un-switched run exactly.
    """
    rng = np.random.default_rng(spec.seed)
    system = base
    if spec.x0 is not None:
        x = np.asarray(spec.x0, dtype=float)
        if x.shape != (system.dim,):
            raise ValueError(f"x0 has shape {x.shape}, system dimension is {system.dim}")
    else:
        x = rng.uniform(-1.0, 1.0, size=system.dim)
    for _ in range(spec.burn_in):
        x = rk4_step(system, x, spec.dt)

    events = {e.time: e for e in sched.events}
    samples: list[Sample] = []
    for t in range(spec.total_len):
        if t in events:
            system, x = _apply_event(events[t], system, x, spec, rng)
        if t > 0:
            x = rk4_step(system, x, spec.dt)
        obs = x if spec.noise_sigma == 0.0 else x + spec.noise_sigma * rng.standard_normal(x.shape)
        samples.append(Sample(t=t, x=obs))
    return samples


def _apply_event(event: DriftEvent, system: OdeSystem, x, spec: StreamSpec, rng):
    if event.system is not None:
        system = event.system
    if event.params is not None:
        system = system.with_params(event.params)
    if event.reinit:
        x = rng.uniform(-1.0, 1.0, size=system.dim)
        for _ in range(spec.burn_in):
            x = rk4_step(system, x, spec.dt)
    elif event.system is not None and event.system.dim != len(x):
        raise ValueError("system switch without reinit requires matching dimension")
    return system, x


def _lorenz(x, p):
    s, r, b = p
    return np.array([s * (x[1] - x[0]), x[0] * (r - x[2]) - x[1], x[0] * x[1] - b * x[2]])


def _rossler(x, p):
    a, b, c = p
    return np.array([-x[1] - x[2], x[0] + a * x[1], b + x[2] * (x[0] - c)])


def _thomas(x, p):
    (b,) = p
    return np.array([np.sin(x[1]) - b * x[0], np.sin(x[2]) - b * x[1], np.sin(x[0]) - b * x[2]])


def _halvorsen(x, p):
    (a,) = p
    return np.array(
        [
            -a * x[0] - 4.0 * x[1] - 4.0 * x[2] - x[1] * x[1],
            -a * x[1] - 4.0 * x[2] - 4.0 * x[0] - x[2] * x[2],
            -a * x[2] - 4.0 * x[0] - 4.0 * x[1] - x[0] * x[0],
        ]
    )


def _linear_contraction(x, p):
    (a,) = p
    return -a * np.asarray(x, dtype=float)


_BUILTINS = {
    "lorenz": (3, (10.0, 28.0, 8.0 / 3.0), _lorenz),
    "rossler": (3, (0.2, 0.2, 5.7), _rossler),
    "thomas": (3, (0.208186,), _thomas),
    "halvorsen": (3, (1.89,), _halvorsen),
    "linear_contraction": (3, (1.0,), _linear_contraction),
}


def builtin_system(name: str, params: Sequence[float] | None = None, dim: int | None = None) -> OdeSystem:
    """Named system with canonical parameters; params/dim may be overridden.

    dim is only adjustable for linear_contraction, which is isotropic.
    """
    if name not in _BUILTINS:
        raise ValueError(f"unknown system {name!r}; choose from {sorted(_BUILTINS)}")
    d, default_params, rhs = _BUILTINS[name]
    if dim is not None:
        if name != "linear_contraction":
            raise ValueError(f"dimension of {name!r} is fixed at {d}")
        d = dim
    p = tuple(float(v) for v in params) if params is not None else default_params
    if len(p) != len(default_params):
        raise ValueError(f"{name!r} expects {len(default_params)} parameters, got {len(p)}")
    return OdeSystem(name=name, dim=d, params=p, rhs=rhs)
