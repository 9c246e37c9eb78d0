"""Experiment orchestration: (strategy x seed) runs, output layout, sweeps.

Layout under the output directory:

    manifest.json
    <strategy>/<seed>/steps.csv + timing.csv + summary.json
    stream_seed<K>.csv            (generate subcommand)
    sweep_<param>.csv             (sweep subcommand)

Runs are independent; with workers > 1 they execute in a process pool.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..errors import ConfigError
from ..learners import run_adaptation
from .config import ExperimentConfig
from .io import write_report, write_stream_csv

SWEEP_PARAMS = {"C": "ess_multiplier", "theta_max": "max_decay"}


def generate_streams(config: ExperimentConfig, out_dir, seed_offset: int = 0) -> list[Path]:
    """Write one stream CSV per seed; deterministic for a fixed config."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for seed in config.seeds:
        samples = config.build_samples(seed + seed_offset)
        path = out / f"stream_seed{seed + seed_offset}.csv"
        write_stream_csv(path, samples)
        paths.append(path)
    return paths


def run_one(config: ExperimentConfig, strategy_name: str, seed: int):
    """Run a single (strategy, seed) episode and return its report."""
    samples = config.build_samples(seed)
    warmup = config.warmup_len_for(len(samples))
    return run_adaptation(
        samples,
        config.build_detector(seed),
        config.build_strategy(strategy_name),
        config.embedding(),
        learner_family=config.learner.get("family", "ridge"),
        warmup_len=warmup,
        monitor=config.detector.get("monitor", "error"),
    )


def _run_and_write(raw_config: dict, strategy_name: str, seed: int, out_dir: str) -> str:
    config = ExperimentConfig(raw=raw_config)
    report = run_one(config, strategy_name, seed)
    run_dir = Path(out_dir) / strategy_name / str(seed)
    write_report(run_dir, report)
    return str(run_dir)


def run_experiment(config: ExperimentConfig, out_dir=None, workers=None, seed_offset: int = 0) -> Path:
    """Run every (strategy x seed) pair on identical stream realizations."""
    out = Path(out_dir if out_dir is not None else config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = [s + seed_offset for s in config.seeds]
    workers = workers if workers is not None else config.workers
    tasks = [(strategy, seed) for strategy in config.strategy_names for seed in seeds]

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_and_write, config.raw, strategy, seed, str(out))
                for strategy, seed in tasks
            ]
            for fut in futures:
                fut.result()
    else:
        for strategy, seed in tasks:
            _run_and_write(config.raw, strategy, seed, str(out))

    manifest = {
        "config_hash": config.config_hash(),
        "config": config.raw,
        "strategies": config.strategy_names,
        "seeds": seeds,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n"
    )
    return out


def sweep_config(config: ExperimentConfig, param: str, value: float) -> ExperimentConfig:
    """Copy of the config with one criterion hyperparameter replaced."""
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"unknown sweep parameter {param!r}; choose from {sorted(SWEEP_PARAMS)}")
    caliper_cfg = dict(config.raw.get("caliper", {}))
    if SWEEP_PARAMS[param] == "ess_multiplier":
        caliper_cfg["ess_multiplier"] = float(value)
    else:
        decays = list(caliper_cfg.get("decays", config.caliper_config().grid.decays))
        if float(value) <= decays[-2]:
            raise ConfigError(f"theta_max={value} must exceed the previous grid entry {decays[-2]}")
        decays[-1] = float(value)
        caliper_cfg["decays"] = decays
    return config.with_override(caliper=caliper_cfg)


def run_sweep(
    config: ExperimentConfig, param: str, values, out_dir=None, workers=None, seed_offset: int = 0
) -> list[dict]:
    """One full experiment per sweep value; returns the aggregated MAE table.

    The aggregate is the mean over seeds of the caliper run's summary MAE.
    """
    values = list(values)
    if not values:
        raise ConfigError("sweep needs a non-empty value list")
    if "caliper" not in config.strategy_names:
        raise ConfigError("sweep requires the 'caliper' strategy in the config")
    out = Path(out_dir if out_dir is not None else config.out_dir)
    rows = []
    for value in values:
        sub = sweep_config(config, param, value)
        sub_out = out / f"sweep_{param}" / _value_tag(value)
        run_experiment(sub, sub_out, workers=workers, seed_offset=seed_offset)
        maes = []
        for seed in [s + seed_offset for s in config.seeds]:
            with open(sub_out / "caliper" / str(seed) / "summary.json", encoding="utf-8") as fh:
                maes.append(json.load(fh)["mae_avg"])
        if any(m is None for m in maes):
            raise ConfigError(f"sweep value {value}: a run produced no scored steps")
        rows.append({"param": param, "value": value, "mae": sum(maes) / len(maes), "runs": len(maes)})

    table_path = out / f"sweep_{param}.csv"
    lines = ["param,value,mae,runs"]
    for row in rows:
        lines.append(f"{row['param']},{row['value']!r},{row['mae']!r},{row['runs']}")
    table_path.parent.mkdir(parents=True, exist_ok=True)
    table_path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return rows


def _value_tag(value) -> str:
    text = repr(float(value))
    return text.replace(".", "p").replace("-", "m")
