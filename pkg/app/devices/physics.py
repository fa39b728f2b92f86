"""Voltage-driven FE-DW / FM-DW physics: velocity laws, wall position integration, MTJ conductance.

Every function here is a pure function of its inputs. Scalars return floats, numpy arrays
are accepted elementwise where noted.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeviceGeometry:
    """Magnet and contact dimensions shared by the neuron and synapse devices (metres)."""

    magnet_length: float = 1.5e-6
    magnet_width: float = 100e-9
    fe_thickness: float = 100e-9
    mtj_length: float = 0.5e-6

    def __post_init__(self):
        for name in ("magnet_length", "magnet_width", "fe_thickness", "mtj_length"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name}: DeviceGeometry requires {name} > 0 (got {value})")
        if not self.mtj_length < self.magnet_length:
            raise ValueError(
                f"mtj_length: DeviceGeometry requires mtj_length < magnet_length "
                f"(got {self.mtj_length} >= {self.magnet_length})"
            )


@dataclass(frozen=True)
class MerzParams:
    """Fitting constants of Merz's law v = K_FE * exp(a / E)."""

    k_fe: float
    a: float

    def __post_init__(self):
        if not self.k_fe > 0:
            raise ValueError(f"k_fe: MerzParams requires k_fe > 0 (got {self.k_fe})")
        if not self.a < 0:
            raise ValueError(f"a: MerzParams requires a < 0 so velocity grows with |E| (got {self.a})")


@dataclass(frozen=True)
class DepinningLimits:
    """Largest FE-DW speeds the pinned FM-DW can follow, per direction (m/s)."""

    v_dep_pos: float = 550.0
    v_dep_neg: float = 210.0

    def __post_init__(self):
        for name in ("v_dep_pos", "v_dep_neg"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name}: DepinningLimits requires {name} > 0 (got {value})")


@dataclass(frozen=True)
class MtjParams:
    """Parallel / anti-parallel conductances of the read MTJ (siemens)."""

    g_p: float
    g_ap: float

    def __post_init__(self):
        if not (self.g_p > self.g_ap > 0):
            raise ValueError(f"g_p: MtjParams requires g_p > g_ap > 0 (got g_p={self.g_p}, g_ap={self.g_ap})")

    @classmethod
    def from_tmr(cls, g_p: float, tmr: float) -> "MtjParams":
        if not tmr > 0:
            raise ValueError(f"tmr: MtjParams requires tmr > 0 (got {tmr})")
        return cls(g_p=g_p, g_ap=g_p / (1.0 + tmr))


@dataclass
class DiagnosticsSink:
    """In-process event sink for per-step device diagnostics (depinning clamps)."""

    counts: dict[str, int] = field(default_factory=dict)
    last: dict[str, tuple[float, float]] = field(default_factory=dict)

    def record(self, kind: str, value: float, bound: float, n: int = 1) -> None:
        if kind not in self.counts:
            logger.warning(f"{kind}: FE-DW velocity {value:.4g} m/s clamped to {bound:.4g} m/s")
        self.counts[kind] = self.counts.get(kind, 0) + n
        self.last[kind] = (value, bound)

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def fe_dw_velocity(voltage, geom: DeviceGeometry, merz: MerzParams):
    """Signed FE-DW velocity from Merz's law, E = V / t_FE.

    Zero voltage gives zero velocity; the sign follows the voltage. Accepts arrays.
    """
    if np.ndim(voltage) == 0:
        v = float(voltage)
        if v == 0.0:
            return 0.0
        e = abs(v) / geom.fe_thickness
        return math.copysign(merz.k_fe * math.exp(merz.a / e), v)

    v = np.asarray(voltage, dtype=np.float64)
    e = np.abs(v) / geom.fe_thickness
    safe_e = np.where(e > 0, e, 1.0)
    magnitude = np.where(e > 0, merz.k_fe * np.exp(merz.a / safe_e), 0.0)
    return np.sign(v) * magnitude


def fm_dw_velocity(v_fe, limits: DepinningLimits, sink: DiagnosticsSink | None = None):
    """FM-DW velocity: follows the FE-DW up to the depinning limits, saturates beyond them."""
    if np.ndim(v_fe) == 0:
        v = float(v_fe)
        if v > limits.v_dep_pos:
            if sink is not None:
                sink.record("depinning_pos", v, limits.v_dep_pos)
            return limits.v_dep_pos
        if v < -limits.v_dep_neg:
            if sink is not None:
                sink.record("depinning_neg", v, -limits.v_dep_neg)
            return -limits.v_dep_neg
        return v

    v = np.asarray(v_fe, dtype=np.float64)
    if sink is not None:
        above = v > limits.v_dep_pos
        below = v < -limits.v_dep_neg
        if above.any():
            sink.record("depinning_pos", float(v[above].max()), limits.v_dep_pos, int(above.sum()))
        if below.any():
            sink.record("depinning_neg", float(v[below].min()), -limits.v_dep_neg, int(below.sum()))
    return np.clip(v, -limits.v_dep_neg, limits.v_dep_pos)


def fm_velocity_for(
    voltage,
    geom: DeviceGeometry,
    merz: MerzParams,
    limits: DepinningLimits,
    sink: DiagnosticsSink | None = None,
):
    """Wall velocity actually seen by a device driven at `voltage`."""
    return fm_dw_velocity(fe_dw_velocity(voltage, geom, merz), limits, sink)


def velocity_sweep(voltages, geom: DeviceGeometry, merz: MerzParams, limits: DepinningLimits, sink=None):
    """Return (v_fe, v_fm) arrays over a voltage sweep."""
    v_fe = fe_dw_velocity(np.asarray(voltages, dtype=np.float64), geom, merz)
    return v_fe, fm_dw_velocity(v_fe, limits, sink)


def advance_dw(x, v, dt: float, geom: DeviceGeometry):
    """Explicit-Euler wall update, clamped to the region under the metal contact."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0 (got {dt})")
    if dt == 0:
        return x
    if np.ndim(x) == 0 and np.ndim(v) == 0:
        return min(max(float(x) + float(v) * dt, 0.0), geom.magnet_length)
    return np.clip(np.asarray(x, dtype=np.float64) + np.asarray(v) * dt, 0.0, geom.magnet_length)


def mtj_conductance(x, geom: DeviceGeometry, mtj: MtjParams):
    """MTJ conductance as the parallel combination of the P (x) and AP (L - x) regions."""
    if np.ndim(x) == 0:
        frac = float(x) / geom.magnet_length
    else:
        frac = np.asarray(x, dtype=np.float64) / geom.magnet_length
    # convex form keeps both endpoints exact
    return (1.0 - frac) * mtj.g_ap + frac * mtj.g_p


def calibrate_merz(v1: float, speed1: float, v2: float, speed2: float, geom: DeviceGeometry) -> MerzParams:
    """Fit (K_FE, a) so that |v(V1)| = speed1 and |v(V2)| = speed2.

    ln v = ln K_FE + a / E is linear in 1/E, so two points pin both constants.
    """
    if abs(v1) == abs(v2) or v1 == 0 or v2 == 0:
        raise ValueError(f"calibration voltages must be non-zero with distinct magnitudes (got {v1}, {v2})")
    if not (speed1 > 0 and speed2 > 0):
        raise ValueError(f"calibration speeds must be > 0 (got {speed1}, {speed2})")
    inv_e1 = geom.fe_thickness / abs(v1)
    inv_e2 = geom.fe_thickness / abs(v2)
    a = (math.log(speed1) - math.log(speed2)) / (inv_e1 - inv_e2)
    if not a < 0:
        raise ValueError(f"calibration gives a = {a:.4g} >= 0; the faster point must use the larger |V|")
    k_fe = math.exp(math.log(speed1) - a * inv_e1)
    return MerzParams(k_fe=k_fe, a=a)
