"""Experiment configuration: YAML schema, validation and run-object factories.

The file is a structured key-value document; every section has defaults so a
minimal config only names a stream source. See README for the full schema.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from ..criterion import CaliperConfig, LocalityGrid
from ..detectors import AdwinDetector, KswinDetector
from ..dynamics import DriftEvent, DriftSchedule, StreamSpec, builtin_system, generate_stream
from ..errors import ConfigError
from ..learners import CaliperStrategy, DelayEmbedding, FixedWindow, Incremental

KNOWN_SECTIONS = {
    "stream",
    "detector",
    "strategies",
    "embedding",
    "learner",
    "caliper",
    "incremental",
    "seeds",
    "out_dir",
    "workers",
}


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


@dataclass
class ExperimentConfig:
    """Validated experiment description; factories derive per-seed objects."""

    raw: dict

    def __post_init__(self):
        if not isinstance(self.raw, dict):
            raise ConfigError("config root must be a mapping")
        unknown = set(self.raw) - KNOWN_SECTIONS
        _require(not unknown, f"unknown config sections: {sorted(unknown)}")
        _require("stream" in self.raw, "config needs a 'stream' section")
        self.stream = dict(self.raw["stream"])
        self.detector = dict(self.raw.get("detector", {"kind": "adwin"}))
        self.embedding_cfg = dict(self.raw.get("embedding", {}))
        self.learner = dict(self.raw.get("learner", {}))
        self.caliper_cfg = dict(self.raw.get("caliper", {}))
        self.incremental_cfg = dict(self.raw.get("incremental", {}))
        self.seeds = list(self.raw.get("seeds", [0]))
        self.out_dir = str(self.raw.get("out_dir", "results"))
        self.workers = int(self.raw.get("workers", 1))

        _require(len(self.seeds) >= 1, "need at least one seed")
        _require(all(isinstance(s, int) for s in self.seeds), "seeds must be integers")
        _require(self.workers >= 1, "workers must be >= 1")

        source = self.stream.get("source", "builtin")
        _require(source in ("builtin", "csv"), f"unknown stream source {source!r}")
        if source == "builtin":
            _require("system" in self.stream, "builtin stream needs a 'system' name")
        else:
            _require("csv_path" in self.stream, "csv stream needs 'csv_path'")
            _require(Path(self.stream["csv_path"]).exists(), f"csv_path not found: {self.stream['csv_path']}")

        kind = self.detector.get("kind", "adwin")
        _require(kind in ("adwin", "kswin", "none"), f"unknown detector kind {kind!r}")
        _require(self.detector.get("monitor", "error") in ("error", "feature"), "monitor must be 'error' or 'feature'")

        names = self.raw.get("strategies", ["caliper"])
        _require(isinstance(names, list) and names, "strategies must be a non-empty list")
        self.strategy_names = [str(s) for s in names]
        for name in self.strategy_names:
            self.build_strategy(name)  # validates

        family = self.learner.get("family", "ridge")
        _require(family in ("ridge", "krr"), f"unknown learner family {family!r}")

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            raw = yaml.safe_load(p.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {p}: {exc}") from exc
        if raw is None:
            raise ConfigError(f"config file {p} is empty")
        return cls(raw=raw)

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.raw, sort_keys=True, default=str).encode("utf-8")
        ).hexdigest()

    # -- factories ---------------------------------------------------------

    def stream_spec(self, seed: int) -> StreamSpec:
        s = self.stream
        return StreamSpec(
            dt=float(s.get("dt", 0.05)),
            warmup_len=int(s.get("warmup_len", 1500)),
            online_len=int(s.get("online_len", 6000)),
            noise_sigma=float(s.get("noise_sigma", 0.0)),
            seed=seed,
            burn_in=int(s.get("burn_in", 500)),
            x0=tuple(s["x0"]) if "x0" in s else None,
        )

    def build_samples(self, seed: int):
        """Materialize the stream for one seed (builtin) or from disk (csv)."""
        from .io import ingest_csv

        if self.stream.get("source", "builtin") == "csv":
            return ingest_csv(self.stream["csv_path"])
        system = builtin_system(
            self.stream["system"],
            params=self.stream.get("params"),
            dim=self.stream.get("dim"),
        )
        events = []
        for ev in self.stream.get("schedule", []) or []:
            _require("time" in ev, "schedule events need a 'time'")
            sub = None
            if "system" in ev:
                sub = builtin_system(ev["system"], params=ev.get("system_params"), dim=ev.get("dim"))
            events.append(
                DriftEvent(
                    time=int(ev["time"]),
                    system=sub,
                    params=tuple(ev["params"]) if "params" in ev else None,
                    reinit=bool(ev.get("reinit", False)),
                )
            )
        try:
            schedule = DriftSchedule(tuple(events))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return generate_stream(self.stream_spec(seed), system, schedule)

    def warmup_len_for(self, n_samples: int) -> int:
        if self.stream.get("source", "builtin") == "csv":
            if "warmup_len" in self.stream:
                return int(self.stream["warmup_len"])
            return int(round(float(self.stream.get("warmup_frac", 0.2)) * n_samples))
        return int(self.stream.get("warmup_len", 1500))

    def build_detector(self, seed: int):
        kind = self.detector.get("kind", "adwin")
        if kind == "none":
            return None
        if kind == "adwin":
            return AdwinDetector(delta=float(self.detector.get("delta", 0.002)))
        return KswinDetector(
            alpha=float(self.detector.get("alpha", 0.05)),
            window_size=int(self.detector.get("window_size", 100)),
            stat_size=int(self.detector.get("stat_size", 30)),
            seed=seed,
        )

    def caliper_config(self) -> CaliperConfig:
        c = self.caliper_cfg
        try:
            grid = LocalityGrid(tuple(c.get("decays", LocalityGrid().decays)))
            return CaliperConfig(
                grid=grid,
                ess_multiplier=float(c.get("ess_multiplier", 3.0)),
                ridge_lambda=float(c.get("ridge_lambda", 1e-8)),
                persistence=int(c.get("persistence", 1)),
                weight_cutoff=float(c.get("weight_cutoff", 0.1)),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def build_strategy(self, name: str):
        if name == "caliper":
            return CaliperStrategy(
                config=self.caliper_config(),
                window_cap=int(self.caliper_cfg.get("window_cap", 4096)),
            )
        if name.startswith("fixed:") or name.startswith("fixed"):
            digits = name.split(":", 1)[1] if ":" in name else name[len("fixed") :]
            try:
                return FixedWindow(n=int(digits))
            except ValueError as exc:
                raise ConfigError(f"bad fixed-window strategy {name!r}") from exc
        if name == "incremental":
            return Incremental(eta=float(self.incremental_cfg.get("eta", 0.005)))
        raise ConfigError(f"unknown strategy {name!r}")

    def embedding(self) -> DelayEmbedding:
        try:
            return DelayEmbedding(
                past_len=int(self.embedding_cfg.get("past_len", 30)),
                horizons=tuple(self.embedding_cfg.get("horizons", (1, 15, 30))),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def with_override(self, **entries) -> "ExperimentConfig":
        """Copy with top-level entries replaced (used by sweeps)."""
        raw = json.loads(json.dumps(self.raw))
        raw.update(entries)
        return ExperimentConfig(raw=raw)
