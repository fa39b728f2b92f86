"""Application configuration loader.

configs/config.yaml holds every recognized key with its default. A run config only lists the
keys it changes; `load_config` merges it over the defaults, applies dotted overrides
(e.g. {"snn.workers": 4}), type-checks every value and builds the typed parameter objects.
Unknown keys, wrong types and violated device/network invariants raise ConfigError.
"""

import copy
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from app.devices.neuron import MembraneParams, NeuronParams
from app.devices.physics import DepinningLimits, DeviceGeometry, MerzParams, MtjParams, calibrate_merz
from app.devices.synapse import SynapseParams
from app.learning.rules import RULES, AspParams, StdpParams
from app.network.encoding import EncodingParams
from app.network.engine import SnnParams, Topology, network_membrane

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid configuration: unknown key, wrong type or violated invariant."""


def _find_repo_root() -> Path:
    """Find the repo root by looking for configs/config.yaml upward."""
    p = Path(__file__).resolve()
    for parent in [p] + list(p.parents):
        if (parent / "configs" / "config.yaml").exists():
            return parent
    # Fallback: assume repo/ is two levels up from app/core/
    return Path(__file__).resolve().parent.parent.parent


REPO_ROOT = _find_repo_root()


def resolve_path(rel: str | Path) -> Path:
    """Resolve a config-relative path to an absolute path."""
    return (REPO_ROOT / rel).resolve()


def _as_number(text: str) -> float | None:
    try:
        return float(text)
    except ValueError:
        return None


def load_defaults() -> dict[str, Any]:
    """The documented defaults in configs/config.yaml."""
    with open(REPO_ROOT / "configs" / "config.yaml") as f:
        defaults = yaml.safe_load(f)
    # YAML 1.1 reads exponents without a sign (2.0e6) as strings
    for section, body in defaults.items():
        leaves = body.items() if isinstance(body, dict) else [(None, body)]
        for key, value in leaves:
            if isinstance(value, str) and _as_number(value) is not None:
                name = f"{section}.{key}" if key else section
                raise ConfigError(f"{name}: default {value!r} is a string; write numbers with a signed exponent")
    return defaults


# --- typed sections -------------------------------------------------------------------


@dataclass(frozen=True)
class DataPaths:
    train_images: Path
    train_labels: Path
    test_images: Path
    test_labels: Path


@dataclass(frozen=True)
class Schedule:
    classes: tuple[int, ...]
    images_per_class: int


@dataclass(frozen=True)
class EvaluationParams:
    label_samples_per_class: int
    test_samples: int


@dataclass(frozen=True)
class DeviceTraceParams:
    dt: float
    duration: float
    neuron_pulse_starts: tuple[float, ...]
    synapse_pulses: tuple[tuple[float, float, float], ...]
    synapse_rest_voltage: float
    synapse_initial_position: float
    divider_vdd: float


@dataclass(frozen=True)
class OutputParams:
    dir: Path
    ledger_path: Path
    grid_cols: int
    log_every: int


@dataclass(frozen=True)
class SimConfig:
    seed: int
    geometry: DeviceGeometry
    merz: MerzParams
    limits: DepinningLimits
    mtj: MtjParams
    neuron: NeuronParams
    synapse: SynapseParams
    encoding: EncodingParams
    topology: Topology
    snn: SnnParams
    rule: str
    asp: AspParams
    data: DataPaths
    schedule: Schedule
    evaluation: EvaluationParams
    device_trace: DeviceTraceParams
    output: OutputParams
    raw: dict

    @property
    def stdp(self) -> StdpParams:
        return self.asp.stdp

    @property
    def membrane(self) -> MembraneParams:
        """Network-clock membrane constants derived from `neuron` and `snn`."""
        return network_membrane(self.neuron, self.snn)


# --- merging / validation -------------------------------------------------------------

# keys whose default is null; everything else takes its type from the default
_NULLABLE_TYPES = {("merz", "k_fe"): float, ("merz", "a"): float, ("neuron", "x_fire"): float}


def _check_type(key: str, value: Any, default: Any, nullable: type | None) -> Any:
    if value is None:
        if nullable is not None:
            return None
        raise ConfigError(f"{key}: value must not be null")
    expected = nullable or type(default)
    if expected is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected a boolean (got {value!r})")
        return value
    if expected is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer (got {value!r})")
        return value
    if expected is float:
        if isinstance(value, str) and _as_number(value) is not None:
            value = _as_number(value)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number (got {value!r})")
        if not math.isfinite(value):
            raise ConfigError(f"{key}: expected a finite number (got {value!r})")
        return float(value)
    if expected is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string (got {value!r})")
        return value
    if expected is list:
        if not isinstance(value, list):
            raise ConfigError(f"{key}: expected a list (got {value!r})")
        return value
    return value


def _merge(defaults: dict, doc: dict, origin: str) -> dict:
    merged = copy.deepcopy(defaults)
    for section, body in (doc or {}).items():
        if section not in defaults:
            raise ConfigError(f"{section}: unknown config section in {origin}")
        if not isinstance(defaults[section], dict):
            merged[section] = _check_type(section, body, defaults[section], None)
            continue
        if not isinstance(body, dict):
            raise ConfigError(f"{section}: expected a mapping in {origin}")
        for key, value in body.items():
            if key not in defaults[section]:
                raise ConfigError(f"{section}.{key}: unknown config key in {origin}")
            merged[section][key] = _check_type(
                f"{section}.{key}", value, defaults[section][key], _NULLABLE_TYPES.get((section, key))
            )
    return merged


def parse_override_value(text: str) -> Any:
    """Parse a command-line override value as YAML (numbers, booleans, lists)."""
    return yaml.safe_load(text)


def apply_overrides(raw: dict, overrides: dict[str, Any]) -> dict:
    """Apply dotted-key overrides to a merged config dict."""
    nested: dict[str, Any] = {}
    for dotted, value in overrides.items():
        section, _, key = dotted.partition(".")
        if not key:
            nested[section] = value
        else:
            nested.setdefault(section, {})[key] = value
    return _merge(raw, nested, "overrides")


def numeric_keys(raw: dict | None = None) -> list[str]:
    """Dotted names of every numeric config key (the sweepable parameters)."""
    raw = raw or load_defaults()
    keys = []
    for section, body in raw.items():
        if isinstance(body, dict):
            for key, value in body.items():
                nullable = _NULLABLE_TYPES.get((section, key))
                if nullable is float or (isinstance(value, (int, float)) and not isinstance(value, bool)):
                    keys.append(f"{section}.{key}")
        elif isinstance(body, (int, float)) and not isinstance(body, bool):
            keys.append(section)
    return keys


def _section(name: str, build):
    try:
        return build()
    except ConfigError:
        raise
    except (ValueError, TypeError) as e:
        raise ConfigError(f"{name}.{e}") from e


def _pulse_list(key: str, pulses: list) -> tuple[tuple[float, float, float], ...]:
    out = []
    for p in pulses:
        if not (isinstance(p, list) and len(p) == 3 and all(isinstance(v, (int, float)) for v in p)):
            raise ConfigError(f"{key}: each pulse must be [start, width, voltage] (got {p!r})")
        start, width, voltage = (float(v) for v in p)
        if start < 0 or width < 0:
            raise ConfigError(f"{key}: invalid schedule, pulse start and width must be >= 0 (got {p!r})")
        out.append((start, width, voltage))
    return tuple(out)


def build_config(raw: dict) -> SimConfig:
    """Validate a merged config dict and build the typed parameter objects."""
    seed = raw["seed"]
    if seed < 0:
        raise ConfigError(f"seed: must be >= 0 (got {seed})")

    geom = _section("geometry", lambda: DeviceGeometry(**raw["geometry"]))

    m = raw["merz"]
    if m["k_fe"] is not None and m["a"] is not None:
        merz = _section("merz", lambda: MerzParams(k_fe=m["k_fe"], a=m["a"]))
    elif m["k_fe"] is None and m["a"] is None:
        merz = _section(
            "merz",
            lambda: calibrate_merz(m["calib_v1"], m["calib_speed1"], m["calib_v2"], m["calib_speed2"], geom),
        )
    else:
        raise ConfigError("merz.k_fe: set both k_fe and a, or neither to calibrate from the anchor points")

    limits = _section("depinning", lambda: DepinningLimits(**raw["depinning"]))
    mtj = _section("mtj", lambda: MtjParams.from_tmr(raw["mtj"]["g_p"], raw["mtj"]["tmr"]))
    neuron = _section("neuron", lambda: NeuronParams(geom=geom, merz=merz, limits=limits, mtj=mtj, **raw["neuron"]))
    synapse = _section(
        "synapse", lambda: SynapseParams(geom=geom, merz=merz, limits=limits, mtj=mtj, **raw["synapse"])
    )
    encoding = _section("encoding", lambda: EncodingParams(**raw["encoding"]))
    topology = _section("topology", lambda: Topology(**raw["topology"]))
    snn = _section("snn", lambda: SnnParams(**raw["snn"]))
    if encoding.max_rate * encoding.intensity_scale * snn.dt > 1.0:
        raise ConfigError("encoding.max_rate: max_rate * intensity_scale * snn.dt must be <= 1")
    _section("snn", lambda: network_membrane(neuron, snn))

    p = dict(raw["plasticity"])
    rule = p.pop("rule")
    if rule not in RULES:
        raise ConfigError(f"plasticity.rule: expected one of {', '.join(RULES)} (got {rule!r})")
    asp_keys = ("lambda_base", "recovery_k", "tau_activity")
    stdp = _section("plasticity", lambda: StdpParams(**{k: v for k, v in p.items() if k not in asp_keys}))
    asp = _section("plasticity", lambda: AspParams(stdp=stdp, **{k: p[k] for k in asp_keys}))

    data = DataPaths(**{k: resolve_path(v) for k, v in raw["data"].items()})

    s = raw["schedule"]
    classes = s["classes"]
    if not classes or not all(isinstance(c, int) and not isinstance(c, bool) and 0 <= c <= 9 for c in classes):
        raise ConfigError(f"schedule.classes: expected a non-empty list of digits 0..9 (got {classes!r})")
    if len(set(classes)) != len(classes):
        raise ConfigError(f"schedule.classes: a class may appear only once (got {classes!r})")
    if s["images_per_class"] < 1:
        raise ConfigError(f"schedule.images_per_class: must be >= 1 (got {s['images_per_class']})")
    schedule = Schedule(classes=tuple(classes), images_per_class=s["images_per_class"])

    ev = raw["evaluation"]
    if ev["label_samples_per_class"] < 1 or ev["test_samples"] < 1:
        raise ConfigError("evaluation.label_samples_per_class: label and test sample counts must be >= 1")
    evaluation = EvaluationParams(**ev)

    t = raw["device_trace"]
    if not (t["dt"] > 0 and t["duration"] >= 0):
        raise ConfigError(f"device_trace.dt: need dt > 0 and duration >= 0 (got {t['dt']}, {t['duration']})")
    starts = t["neuron_pulse_starts"]
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) and v >= 0 for v in starts):
        raise ConfigError("device_trace.neuron_pulse_starts: invalid schedule, starts must be numbers >= 0")
    if not 0.0 <= t["synapse_initial_position"] <= 1.0:
        raise ConfigError("device_trace.synapse_initial_position: must lie in [0, 1]")
    device_trace = DeviceTraceParams(
        dt=t["dt"],
        duration=t["duration"],
        neuron_pulse_starts=tuple(float(v) for v in starts),
        synapse_pulses=_pulse_list("device_trace.synapse_pulses", t["synapse_pulses"]),
        synapse_rest_voltage=t["synapse_rest_voltage"],
        synapse_initial_position=t["synapse_initial_position"],
        divider_vdd=t["divider_vdd"],
    )

    o = raw["output"]
    if o["grid_cols"] < 1:
        raise ConfigError(f"output.grid_cols: must be >= 1 (got {o['grid_cols']})")
    output = OutputParams(
        dir=resolve_path(o["dir"]),
        ledger_path=resolve_path(o["ledger_path"]),
        grid_cols=o["grid_cols"],
        log_every=o["log_every"],
    )

    return SimConfig(
        seed=seed,
        geometry=geom,
        merz=merz,
        limits=limits,
        mtj=mtj,
        neuron=neuron,
        synapse=synapse,
        encoding=encoding,
        topology=topology,
        snn=snn,
        rule=rule,
        asp=asp,
        data=data,
        schedule=schedule,
        evaluation=evaluation,
        device_trace=device_trace,
        output=output,
        raw=raw,
    )


def load_config(path: Path | None = None, overrides: dict[str, Any] | None = None) -> SimConfig:
    """Load a run config (or just the defaults) and resolve relative paths against REPO_ROOT."""
    defaults = load_defaults()
    if path is None:
        raw = copy.deepcopy(defaults)
    else:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config not found: {path}")
        with open(path) as f:
            try:
                doc = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise ConfigError(f"{path.name}: not valid YAML ({e})") from e
        if doc is not None and not isinstance(doc, dict):
            raise ConfigError(f"{path.name}: top level must be a mapping")
        raw = _merge(defaults, doc or {}, path.name)
    if overrides:
        raw = apply_overrides(raw, overrides)
    cfg = build_config(raw)
    logger.debug(f"config loaded (seed={cfg.seed}, rule={cfg.rule}, n_exc={cfg.topology.n_exc})")
    return cfg
