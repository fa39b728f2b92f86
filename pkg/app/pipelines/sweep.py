"""Parameter sweeps: one seeded trial per value of a numeric config key, written as CSV."""

import csv
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np

from app.core.config import ConfigError, load_config, numeric_keys
from app.devices.physics import DiagnosticsSink, fm_velocity_for

logger = logging.getLogger(__name__)

METRICS = ("velocity", "accuracy", "mean_weight")
VOLTAGE_KEYS = (
    "neuron.v_spike",
    "neuron.v_rest",
    "neuron.v_reset",
    "synapse.v_pot",
    "synapse.v_dep",
    "synapse.v_forget",
)


def parse_values(values: str | None = None, range_spec: str | None = None) -> list[float]:
    """Values from "a,b,c" or an inclusive linear range "start:stop:n"."""
    if (values is None) == (range_spec is None):
        raise ValueError("give exactly one of --values or --range")
    if values is not None:
        parts = [p.strip() for p in values.split(",") if p.strip()]
        try:
            return [float(p) for p in parts]
        except ValueError as e:
            raise ValueError(f"--values must be comma-separated numbers (got {values!r})") from e
    try:
        start, stop, n = range_spec.split(":")
        start, stop, n = float(start), float(stop), int(n)
    except ValueError as e:
        raise ValueError(f"--range must be start:stop:n (got {range_spec!r})") from e
    if n < 0:
        raise ValueError(f"--range count must be >= 0 (got {n})")
    return [float(v) for v in np.linspace(start, stop, n)]


def _override_value(raw: dict, param: str, value: float) -> Any:
    section, _, key = param.partition(".")
    current = raw[section][key] if key else raw[section]
    if isinstance(current, int) and not isinstance(current, bool):
        if not float(value).is_integer():
            raise ConfigError(f"{param}: expected an integer (got {value})")
        return int(value)
    return value


def _trial(config_path: Path | None, overrides: dict, param: str, value: float, metric: str, trial_dir: Path) -> float:
    from app.pipelines.evaluate import run_evaluation
    from app.pipelines.train import run_training

    base = load_config(config_path, overrides)
    if metric == "velocity":
        # device physics only; the swept voltage may lie beyond what a device config accepts
        return float(fm_velocity_for(value, base.geometry, base.merz, base.limits, DiagnosticsSink()))

    cfg = load_config(config_path, {**overrides, param: _override_value(base.raw, param, value)})
    trained = run_training(cfg, trial_dir)
    if metric == "mean_weight":
        return trained["mean_weight"]
    return run_evaluation(cfg, trial_dir, network=trained["network"])["accuracy"]


def run_sweep(
    param: str,
    values: list[float],
    metric: str,
    out_dir: Path,
    config_path: Path | None = None,
    overrides: dict | None = None,
) -> dict:
    """Run one trial per value and write sweep_<param>.csv (columns: value, metric).

    `velocity` evaluates the FM-DW velocity at the swept drive voltage directly; `accuracy`
    and `mean_weight` train (and evaluate) a network per value under trial_<i>/.

    Returns: {"csv": str, "param": str, "metric": str, "rows": [[value, metric], ...]}
    """
    overrides = dict(overrides or {})
    if metric not in METRICS:
        raise ConfigError(f"sweep metric must be one of {', '.join(METRICS)} (got {metric!r})")
    base = load_config(config_path, overrides)
    if param not in numeric_keys(base.raw):
        raise ConfigError(f"{param}: unknown or non-numeric config key")
    if metric == "velocity" and param not in VOLTAGE_KEYS:
        raise ConfigError(f"{param}: velocity sweeps need a drive voltage key ({', '.join(VOLTAGE_KEYS)})")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"sweep_{param}.csv"
    rows = []
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["value", metric])
        for i, value in enumerate(values):
            if not math.isfinite(value):
                raise ConfigError(f"{param}: sweep values must be finite (got {value})")
            result = _trial(config_path, overrides, param, value, metric, out_dir / f"trial_{i}")
            writer.writerow([repr(float(value)), repr(float(result))])
            rows.append([value, result])
            logger.info(f"sweep {param}={value:g}: {metric}={result:.6g}")
    return {"csv": str(csv_path), "param": param, "metric": metric, "rows": rows}
