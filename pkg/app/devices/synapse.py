"""DW programmable synapse: potentiation, depression and voltage-driven forgetting.

The wall position sets the MTJ conductance, and the normalized weight is that position as a
fraction of the magnet length. State is kept in this normalized form so the weight <-> position
map is exact; `DwSynapseState.x_m` gives the physical position.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from app.devices.physics import (
    DepinningLimits,
    DeviceGeometry,
    MerzParams,
    MtjParams,
    advance_dw,
    fe_dw_velocity,
    fm_velocity_for,
    mtj_conductance,
)


@dataclass(frozen=True)
class SynapseParams:
    geom: DeviceGeometry
    merz: MerzParams
    limits: DepinningLimits
    mtj: MtjParams
    v_pot: float = 2.0
    v_dep: float = -2.0
    v_forget: float = -0.5

    def __post_init__(self):
        if not self.v_pot > 0:
            raise ValueError(f"v_pot: SynapseParams requires v_pot > 0 (got {self.v_pot})")
        if not self.v_dep < 0:
            raise ValueError(f"v_dep: SynapseParams requires v_dep < 0 (got {self.v_dep})")
        if not self.v_forget < 0:
            raise ValueError(f"v_forget: SynapseParams requires v_forget < 0 (got {self.v_forget})")
        for name in ("v_pot", "v_dep", "v_forget"):
            v = fe_dw_velocity(getattr(self, name), self.geom, self.merz)
            if v > self.limits.v_dep_pos or v < -self.limits.v_dep_neg:
                raise ValueError(f"{name}: drive gives FE-DW velocity {v:.4g} m/s beyond depinning")
        forget_speed = abs(fe_dw_velocity(self.v_forget, self.geom, self.merz))
        dep_speed = abs(fe_dw_velocity(self.v_dep, self.geom, self.merz))
        if not (abs(self.v_forget) < abs(self.v_dep) and forget_speed <= 0.1 * dep_speed):
            raise ValueError(
                f"v_forget: SynapseParams requires a small leak drive, |v_forget| << |v_dep| "
                f"(got {forget_speed:.4g} m/s against {dep_speed:.4g} m/s)"
            )


@dataclass(frozen=True)
class DwSynapseState:
    """`position` is x / L in [0, 1]; `post_index` links to the owning post-neuron trace."""

    position: float = 0.0
    pre_trace: float = 0.0
    post_index: int | None = None

    def x_m(self, geom: DeviceGeometry) -> float:
        return self.position * geom.magnet_length


def position_of(w: float) -> DwSynapseState:
    """Synapse state holding normalized weight `w`."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"weight must lie in [0, 1] (got {w})")
    return DwSynapseState(position=float(w))


def synapse_weight(state: DwSynapseState) -> float:
    """w = x / L = (G - G_AP) / (G_P - G_AP)."""
    return state.position


def synapse_conductance(state: DwSynapseState, geom: DeviceGeometry, mtj: MtjParams) -> float:
    return mtj_conductance(state.x_m(geom), geom, mtj)


def _drive(state: DwSynapseState, voltage: float, displacement: float, params: SynapseParams) -> DwSynapseState:
    """Apply `voltage` for as long as it takes to move the wall by `displacement` metres."""
    geom = params.geom
    v = fm_velocity_for(voltage, geom, params.merz, params.limits)
    duration = displacement / abs(v)
    x = advance_dw(state.x_m(geom), v, duration, geom)
    return replace(state, position=x / geom.magnet_length)


def apply_weight_update(state: DwSynapseState, dw: float, params: SynapseParams) -> DwSynapseState:
    """Realize a weight change as a v_pot / v_dep pulse of width |dw| * L / |v_FM|."""
    if not math.isfinite(dw):
        raise ValueError(f"weight update must be finite (got {dw})")
    if dw == 0:
        return state
    voltage = params.v_pot if dw > 0 else params.v_dep
    return _drive(state, voltage, abs(dw) * params.geom.magnet_length, params)


def apply_forgetting(state: DwSynapseState, dt: float, rate: float, params: SynapseParams) -> DwSynapseState:
    """w' = w * exp(-rate * dt), realized by a v_forget drive receding the wall."""
    if rate < 0 or dt < 0:
        raise ValueError(f"forgetting needs rate >= 0 and dt >= 0 (got rate={rate}, dt={dt})")
    if rate == 0 or dt == 0 or state.position == 0:
        return state
    target = state.position * math.exp(-rate * dt)
    return _drive(state, params.v_forget, (state.position - target) * params.geom.magnet_length, params)


def weight_domain_update(w: np.ndarray, dw: np.ndarray) -> np.ndarray:
    """Network form of `apply_weight_update`: w' = clamp(w + dw, 0, 1)."""
    return np.clip(w + dw, 0.0, 1.0)


def weight_domain_forget(w: np.ndarray, rate, dt: float) -> np.ndarray:
    """Network form of `apply_forgetting`; `rate` may be per column."""
    return w * np.exp(-np.asarray(rate) * dt)
