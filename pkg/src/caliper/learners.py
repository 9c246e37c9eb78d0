"""Retrainable base learners on delay embeddings and the adaptation loop
that compares criterion-triggered, fixed-window and incremental strategies.

A learner for horizon h maps the concatenation of the last past_len samples
to the sample h steps ahead. Retraining always replaces the model with one
fit only on the post-alarm window; while a strategy waits for enough data
the stale model keeps serving predictions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .core import DEFAULT_WINDOW_CAP, PostDriftWindow, Sample, as_matrix
from .criterion import (
    CaliperConfig,
    CaliperState,
    Trigger,
    caliper_step,
    decision_label,
)
from .detectors import monitor_statistic

RIDGE_ALPHA_GRID = (1e-2, 1e-1, 1.0, 10.0)
KRR_ALPHA_GRID = (1e-2, 1e-1, 1.0, 10.0)
KRR_GAMMA_GRID = ("median", 1e-3, 1e-2, 1e-1, 1.0)


@dataclass(frozen=True)
class DelayEmbedding:
    """Input is the flattened last past_len samples; one learner per horizon."""

    past_len: int = 30
    horizons: tuple = (1, 15, 30)

    def __post_init__(self):
        if self.past_len < 1:
            raise ValueError("past_len must be >= 1")
        hs = tuple(sorted(int(h) for h in self.horizons))
        if not hs or hs[0] < 1:
            raise ValueError("horizons must be positive integers")
        object.__setattr__(self, "horizons", hs)

    @property
    def max_horizon(self) -> int:
        return self.horizons[-1]


def embed(series, past_len: int, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Delay-embed a series into (inputs, targets) for one horizon.

    Row i of inputs concatenates samples i .. i+past_len-1; the matching
    target is the sample horizon steps after the end of that block.
    """
    X = as_matrix(series)
    n, d = X.shape
    m = n - past_len - horizon + 1
    if m < 1:
        raise ValueError(f"series of length {n} too short for past_len={past_len}, horizon={horizon}")
    idx = np.arange(m)[:, None] + np.arange(past_len)[None, :]
    inputs = X[idx].reshape(m, past_len * d)
    targets = X[past_len - 1 + horizon : past_len - 1 + horizon + m]
    return inputs, targets


@dataclass
class RidgeLearner:
    """Affine least squares with an unpenalized intercept (bias row last)."""

    weights: np.ndarray
    alpha: float

    def predict(self, x: np.ndarray) -> np.ndarray:
        x_aug = np.append(np.asarray(x, dtype=float), 1.0)
        return x_aug @ self.weights


def fit_ridge(inputs: np.ndarray, targets: np.ndarray, alpha: float) -> RidgeLearner:
    """Solve the ridge normal equations; only feature weights are penalized."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    Y = np.atleast_2d(np.asarray(targets, dtype=float))
    n, p_in = X.shape
    X_aug = np.hstack([X, np.ones((n, 1))])
    A = X_aug.T @ X_aug
    A[np.arange(p_in), np.arange(p_in)] += alpha
    W = np.linalg.solve(A, X_aug.T @ Y)
    return RidgeLearner(weights=W, alpha=alpha)


@dataclass
class KrrLearner:
    """Kernel ridge regression with an RBF kernel in dual form."""

    inputs: np.ndarray
    dual: np.ndarray
    gamma: float
    alpha: float

    def predict(self, x: np.ndarray) -> np.ndarray:
        diff = self.inputs - np.asarray(x, dtype=float)
        k = np.exp(-self.gamma * np.einsum("ij,ij->i", diff, diff))
        return k @ self.dual


def median_heuristic_gamma(inputs: np.ndarray) -> float:
    """1 / (2 * median^2) of the pairwise Euclidean distances."""
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    n = X.shape[0]
    if n < 2:
        return 1.0
    sq = np.sum(X * X, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (X @ X.T), 0.0)
    med = float(np.median(np.sqrt(d2[np.triu_indices(n, k=1)])))
    if med == 0.0:
        return 1.0
    return 1.0 / (2.0 * med * med)


def fit_krr(inputs: np.ndarray, targets: np.ndarray, gamma, alpha: float) -> KrrLearner:
    """Solve (K + alpha I) c = Y with K_ij = exp(-gamma ||x_i - x_j||^2).

    gamma="median" resolves through the median heuristic on the inputs.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    Y = np.atleast_2d(np.asarray(targets, dtype=float))
    g = median_heuristic_gamma(X) if gamma == "median" else float(gamma)
    if g <= 0:
        raise ValueError("gamma must be positive")
    sq = np.sum(X * X, axis=1)
    K = np.exp(-g * np.maximum(sq[:, None] + sq[None, :] - 2.0 * (X @ X.T), 0.0))
    K[np.arange(K.shape[0]), np.arange(K.shape[0])] += alpha
    dual = np.linalg.solve(K, Y)
    return KrrLearner(inputs=X.copy(), dual=dual, gamma=g, alpha=alpha)


@dataclass
class IncrementalLearner:
    """Linear model updated by per-step squared-loss SGD.

    Inputs are standardized with frozen statistics (mu, sigma) taken from
    the initial fit so the step size stays meaningful across regimes.
    """

    weights: np.ndarray
    eta: float
    mu: np.ndarray
    sigma: np.ndarray

    def _augment(self, x: np.ndarray) -> np.ndarray:
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return np.append(z, 1.0)

    def predict(self, x: np.ndarray) -> np.ndarray:
        # a diverged model keeps reporting its (astronomical) errors honestly
        with np.errstate(over="ignore", invalid="ignore"):
            return self._augment(x) @ self.weights


def sgd_update(learner: IncrementalLearner, x: np.ndarray, y: np.ndarray) -> IncrementalLearner:
    """One squared-loss gradient step: W <- W - eta * x_aug (x_aug'W - y')."""
    x_aug = learner._augment(x)
    with np.errstate(over="ignore", invalid="ignore"):
        resid = x_aug @ learner.weights - np.asarray(y, dtype=float)
        learner.weights = learner.weights - learner.eta * np.outer(x_aug, resid)
    return learner


@dataclass(frozen=True)
class CaliperStrategy:
    """Accumulate a post-drift window until the stopping criterion triggers."""

    config: CaliperConfig = field(default_factory=CaliperConfig)
    window_cap: int = DEFAULT_WINDOW_CAP


@dataclass(frozen=True)
class FixedWindow:
    """Retrain on exactly n samples counted from each alarm."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("fixed window size must be >= 1")


@dataclass(frozen=True)
class Incremental:
    """Per-step SGD on the deployed linear model; alarms are ignored."""

    eta: float = 0.005

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")


AdaptationStrategy = Union[CaliperStrategy, FixedWindow, Incremental]


@dataclass
class RetrainEvent:
    """One retraining: trigger_t is when the window was consumed and the
    candidate trained; deploy_t is when (and whether) it replaced the
    serving model after its shadow evaluation."""

    alarm_t: int
    trigger_t: int
    window_size: int
    deployed: bool = False
    deploy_t: int = -1


@dataclass
class EpisodeReport:
    """Per-step adaptation log plus derived summary statistics.

    Arrays are aligned with ``t`` (one row per online step). Predictions are
    NaN rows until the first scored step of a horizon.
    """

    strategy: str
    learner_family: str
    horizons: tuple
    d: int
    warmup_len: int
    t: np.ndarray
    truth: np.ndarray
    preds: dict
    alarms: np.ndarray
    decisions: list
    model_version: np.ndarray
    retrain_flags: np.ndarray
    window_len: np.ndarray
    step_time_ns: np.ndarray
    retrains: list
    summary: dict

    def err_sq(self, horizon: int) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            diff = self.preds[horizon] - self.truth
            return np.mean(diff * diff, axis=1)

    def err_abs(self, horizon: int) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            return np.mean(np.abs(self.preds[horizon] - self.truth), axis=1)


def compute_summary(
    horizons,
    err_sq: dict,
    err_abs: dict,
    alarms: np.ndarray,
    retrain_flags: np.ndarray,
    step_time_ns: np.ndarray,
    retrains: list,
    t: np.ndarray,
) -> dict:
    """Summary statistics; shared by the live run and the verifier."""
    per_horizon = {}
    mse_values = []
    mae_values = []
    for h in horizons:
        sq = np.asarray(err_sq[h], dtype=float)
        ab = np.asarray(err_abs[h], dtype=float)
        mask = ~np.isnan(sq)
        n_scored = int(mask.sum())
        mse = float(sq[mask].mean()) if n_scored else None
        mae = float(ab[mask].mean()) if n_scored else None
        per_horizon[str(h)] = {"mse": mse, "mae": mae, "n_scored": n_scored}
        if mse is not None:
            mse_values.append(mse)
            mae_values.append(mae)

    # per-drift breakdown: segments delimited by alarm steps
    alarm_pos = np.flatnonzero(np.asarray(alarms, dtype=bool))
    bounds = [0] + [int(p) for p in alarm_pos] + [len(t)]
    segments = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        if a == b:
            continue
        seg = {"start_t": int(t[a]), "end_t": int(t[b - 1]), "per_horizon": {}}
        for h in horizons:
            sq = np.asarray(err_sq[h], dtype=float)[a:b]
            ab = np.asarray(err_abs[h], dtype=float)[a:b]
            mask = ~np.isnan(sq)
            cnt = int(mask.sum())
            seg["per_horizon"][str(h)] = {
                "mse": float(sq[mask].mean()) if cnt else None,
                "mae": float(ab[mask].mean()) if cnt else None,
                "n_scored": cnt,
            }
        segments.append(seg)

    times = np.asarray(step_time_ns, dtype=float)
    flags = np.asarray(retrain_flags, dtype=bool)
    quiet = times[~flags]
    timing = {
        "mean_ns": float(times.mean()) if times.size else None,
        "median_ns": float(np.median(times)) if times.size else None,
        "median_nonretrain_ns": float(np.median(quiet)) if quiet.size else None,
    }
    window_sizes = [ev.window_size for ev in retrains]
    return {
        "horizons": [int(h) for h in horizons],
        "steps": int(len(t)),
        "per_horizon": per_horizon,
        "mse_avg": float(np.mean(mse_values)) if mse_values else None,
        "mae_avg": float(np.mean(mae_values)) if mae_values else None,
        "alarm_count": int(np.asarray(alarms, dtype=bool).sum()),
        "retrain_count": len(retrains),
        "deployed_count": sum(1 for ev in retrains if ev.deployed),
        "retrains": [
            {
                "alarm_t": ev.alarm_t,
                "trigger_t": ev.trigger_t,
                "window_size": ev.window_size,
                "deployed": ev.deployed,
                "deploy_t": ev.deploy_t,
            }
            for ev in retrains
        ],
        "mean_window_size": float(np.mean(window_sizes)) if window_sizes else None,
        "timing": timing,
        "segments": segments,
    }


def _select_ridge(inputs, targets, alphas):
    n = inputs.shape[0]
    cut = max(1, int(round(0.8 * n)))
    if cut >= n:
        return float(max(alphas))  # nothing to validate on: regularize hard
    best_alpha, best_loss = None, np.inf
    for alpha in alphas:
        model = fit_ridge(inputs[:cut], targets[:cut], alpha)
        pred = np.hstack([inputs[cut:], np.ones((n - cut, 1))]) @ model.weights
        loss = float(np.mean((pred - targets[cut:]) ** 2))
        if loss < best_loss:
            best_alpha, best_loss = alpha, loss
    return float(best_alpha)


def _select_krr(inputs, targets, gammas, alphas):
    n = inputs.shape[0]
    cut = max(1, int(round(0.8 * n)))
    if cut >= n:
        return gammas[0], float(max(alphas))
    best, best_loss = (gammas[0], float(alphas[0])), np.inf
    for gamma in gammas:
        for alpha in alphas:
            model = fit_krr(inputs[:cut], targets[:cut], gamma, alpha)
            pred = np.vstack([model.predict(x) for x in inputs[cut:]])
            loss = float(np.mean((pred - targets[cut:]) ** 2))
            if loss < best_loss:
                best, best_loss = (gamma, float(alpha)), loss
    return best


class _LearnerFactory:
    """Grid-searched fits: hyperparameters come from a time-ordered tail
    split of whatever data is being fit, so small retrain windows pick their
    own (typically heavier) regularization instead of inheriting the
    warm-up choice."""

    def __init__(self, family: str, embedding: DelayEmbedding):
        if family not in ("ridge", "krr"):
            raise ValueError(f"unknown learner family {family!r}")
        self.family = family
        self.embedding = embedding

    def fit(self, X: np.ndarray, horizon: int):
        inputs, targets = embed(X, self.embedding.past_len, horizon)
        if self.family == "ridge":
            alpha = _select_ridge(inputs, targets, RIDGE_ALPHA_GRID)
            return fit_ridge(inputs, targets, alpha)
        gamma, alpha = _select_krr(inputs, targets, KRR_GAMMA_GRID, KRR_ALPHA_GRID)
        return fit_krr(inputs, targets, gamma, alpha)


# Steps a freshly trained candidate model runs in shadow against the
# incumbent before it may be deployed. Rejecting candidates that lose on
# live data keeps one bad window (e.g. one straddling a regime jump) from
# replacing a working model.
SHADOW_STEPS = 16


class _ShadowTrial:
    """Champion/challenger bookkeeping for one candidate model set."""

    def __init__(self, candidates: dict, event: "RetrainEvent"):
        self.candidates = candidates
        self.event = event
        self.cand_err = 0.0
        self.incumbent_err = 0.0
        self.elapsed = 0
        self.pending_cand: Optional[np.ndarray] = None

    def score(self, truth: np.ndarray, incumbent_pred: np.ndarray) -> None:
        self.elapsed += 1
        if self.pending_cand is None or not np.all(np.isfinite(incumbent_pred)):
            return
        with np.errstate(over="ignore", invalid="ignore"):
            self.cand_err += float(np.mean((self.pending_cand - truth) ** 2))
            self.incumbent_err += float(np.mean((incumbent_pred - truth) ** 2))

    @property
    def done(self) -> bool:
        # fixed trial length so the deploy step is reconstructible from logs
        return self.elapsed >= SHADOW_STEPS

    @property
    def accept(self) -> bool:
        return self.cand_err <= self.incumbent_err


def run_adaptation(
    stream,
    detector,
    strategy: AdaptationStrategy,
    embedding: DelayEmbedding,
    learner_family: str = "ridge",
    warmup_len: Optional[int] = None,
    monitor: str = "error",
) -> EpisodeReport:
    """Stream an episode under one adaptation strategy and log every step.

    The first warmup_len samples (default 20%) train the initial per-horizon
    models and select hyperparameters on their time-ordered tail. Online, the
    detector consumes the deployed model's one-step residual statistic (or
    the raw feature statistic when monitor="feature"); alarms start the
    strategy's accumulation, and alarms raised while a window is already
    accumulating are ignored. A retrain needs at least past_len+max_horizon
    samples so every horizon can embed at least one pair; criterion triggers
    below that floor retrain as soon as the window reaches it.
    """
    X = as_matrix(stream)
    n, d = X.shape
    L = embedding.past_len
    horizons = embedding.horizons
    min_train = L + embedding.max_horizon
    if warmup_len is None:
        warmup_len = int(round(0.2 * n))
    if warmup_len < min_train:
        raise ValueError(f"warmup_len={warmup_len} must be >= past_len+max_horizon={min_train}")
    if warmup_len >= n:
        raise ValueError("stream ends inside the warm-up phase")
    if monitor not in ("error", "feature"):
        raise ValueError(f"unknown monitor mode {monitor!r}")

    factory = _LearnerFactory(learner_family, embedding)
    models = {h: factory.fit(X[:warmup_len], h) for h in horizons}

    if isinstance(strategy, Incremental):
        inputs1, _ = embed(X[:warmup_len], L, horizons[0])
        mu = inputs1.mean(axis=0)
        sigma = np.maximum(inputs1.std(axis=0), 1e-8)
        sgd_models = {}
        for h in horizons:
            inputs, targets = embed(X[:warmup_len], L, h)
            scaled = (inputs - mu) / sigma
            init = fit_ridge(scaled, targets, RIDGE_ALPHA_GRID[0])
            sgd_models[h] = IncrementalLearner(
                weights=init.weights, eta=strategy.eta, mu=mu, sigma=sigma
            )
        models = sgd_models

    h_mon = horizons[0]
    pending = {h: {} for h in horizons}
    for h in horizons:
        for target in range(warmup_len, warmup_len + h):
            start = target - h - L + 1
            pending[h][target] = models[h].predict(X[start : start + L].ravel())

    n_online = n - warmup_len
    nan_row = np.full(d, np.nan)
    t_col = np.arange(warmup_len, n)
    truth = X[warmup_len:]
    preds = {h: np.full((n_online, d), np.nan) for h in horizons}
    alarms = np.zeros(n_online, dtype=bool)
    decisions = [""] * n_online
    versions = np.zeros(n_online, dtype=int)
    retrain_flags = np.zeros(n_online, dtype=bool)
    window_lens = np.full(n_online, -1, dtype=int)
    step_time_ns = np.zeros(n_online, dtype=np.int64)
    retrains: list[RetrainEvent] = []

    window: Optional[PostDriftWindow] = None
    cstate: Optional[CaliperState] = None
    fixed_buf: Optional[list] = None
    shadow: Optional[_ShadowTrial] = None
    alarm_t = -1
    pending_retrain = False
    version = 0

    for i in range(n_online):
        t = warmup_len + i
        t0 = time.perf_counter_ns()
        x_t = X[t]

        for h in horizons:
            p = pending[h].pop(t, None)
            preds[h][i] = nan_row if p is None else p

        if monitor == "error":
            ref = preds[h_mon][i]
            residual = x_t - ref if np.all(np.isfinite(ref)) else np.zeros(d)
        else:
            residual = x_t
        alarm = bool(detector.update(monitor_statistic(residual))) if detector is not None else False
        alarms[i] = alarm

        if shadow is not None:
            shadow.score(x_t, preds[h_mon][i])

        trained_now = False
        deployed_now = False
        if shadow is not None:
            if shadow.done:
                if shadow.accept:
                    models = shadow.candidates
                    shadow.event.deployed = True
                    shadow.event.deploy_t = t
                    deployed_now = True
                shadow = None
        elif isinstance(strategy, CaliperStrategy):
            if window is not None:
                window.push(Sample(t=t, x=x_t))
                window_lens[i] = len(window)
                if not pending_retrain:
                    decision, cstate = caliper_step(window, cstate, strategy.config)
                    decisions[i] = decision_label(decision)
                    if isinstance(decision, Trigger):
                        pending_retrain = True
                if pending_retrain and len(window) >= min_train:
                    W = window.as_matrix()
                    event = RetrainEvent(alarm_t, t, len(window))
                    retrains.append(event)
                    trained_now = True
                    shadow = _ShadowTrial({h: factory.fit(W, h) for h in horizons}, event)
                    window, cstate, pending_retrain = None, None, False
            elif alarm:
                alarm_t = t
                window = PostDriftWindow(t_s=t, cap=strategy.window_cap)
                window.push(Sample(t=t, x=x_t))
                window_lens[i] = 1
                cstate = CaliperState.fresh(t, len(strategy.config.grid))
                decision, cstate = caliper_step(window, cstate, strategy.config)
                decisions[i] = decision_label(decision)
        elif isinstance(strategy, FixedWindow):
            if fixed_buf is not None:
                fixed_buf.append(x_t)
                window_lens[i] = len(fixed_buf)
                if len(fixed_buf) >= max(strategy.n, min_train):
                    event = RetrainEvent(alarm_t, t, len(fixed_buf))
                    retrains.append(event)
                    trained_now = True
                    shadow = _ShadowTrial(
                        {h: factory.fit(np.asarray(fixed_buf), h) for h in horizons}, event
                    )
                    fixed_buf = None
            elif alarm:
                alarm_t = t
                fixed_buf = [x_t]
                window_lens[i] = 1
        else:  # Incremental
            for h in horizons:
                start = t - h - L + 1
                models[h] = sgd_update(models[h], X[start : start + L].ravel(), x_t)

        if deployed_now:
            version += 1
        versions[i] = version
        retrain_flags[i] = trained_now

        for h in horizons:
            pending[h][t + h] = models[h].predict(X[t - L + 1 : t + 1].ravel())
        if shadow is not None:
            shadow.pending_cand = shadow.candidates[h_mon].predict(X[t - L + 1 : t + 1].ravel())

        step_time_ns[i] = time.perf_counter_ns() - t0

    err_sq = {}
    err_abs = {}
    with np.errstate(over="ignore", invalid="ignore"):
        for h in horizons:
            diff = preds[h] - truth
            err_sq[h] = np.mean(diff * diff, axis=1)
            err_abs[h] = np.mean(np.abs(diff), axis=1)
    summary = compute_summary(
        horizons, err_sq, err_abs, alarms, retrain_flags, step_time_ns, retrains, t_col
    )

    strategy_name = {
        CaliperStrategy: "caliper",
        FixedWindow: f"fixed{getattr(strategy, 'n', '')}",
        Incremental: "incremental",
    }[type(strategy)]
    return EpisodeReport(
        strategy=strategy_name,
        learner_family=learner_family,
        horizons=horizons,
        d=d,
        warmup_len=warmup_len,
        t=t_col,
        truth=truth,
        preds=preds,
        alarms=alarms,
        decisions=decisions,
        model_version=versions,
        retrain_flags=retrain_flags,
        window_len=window_lens,
        step_time_ns=step_time_ns,
        retrains=retrains,
        summary=summary,
    )
