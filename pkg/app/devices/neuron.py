"""DW leaky-integrate-fire neuron.

The FM-DW position is the membrane variable. Input pulses (v_spike) push the wall toward the
MTJ, the negative resting voltage pulls it back (leak), and once the MTJ majority flips the
neuron fires and a negative reset drive walks the wall home. The walk-back time is the
refractory period.

Two views of the same device live here: `neuron_step` integrates a single device at
nanosecond resolution, and the `*_membranes` helpers advance arrays of neurons one network
step in the normalized (weight) domain, with device velocities mapped through a time scale.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from app.devices.physics import (
    DepinningLimits,
    DeviceGeometry,
    DiagnosticsSink,
    MerzParams,
    MtjParams,
    advance_dw,
    fe_dw_velocity,
    fm_velocity_for,
)


@dataclass(frozen=True)
class NeuronParams:
    geom: DeviceGeometry
    merz: MerzParams
    limits: DepinningLimits
    mtj: MtjParams
    v_spike: float = 2.0
    t_pulse: float = 1e-9
    v_rest: float = -1.0
    v_reset: float = -2.0
    x_fire: float | None = None
    theta_plus: float = 0.0
    tau_theta: float = 100e-9

    def __post_init__(self):
        if self.x_fire is None:
            object.__setattr__(self, "x_fire", self.geom.magnet_length - self.geom.mtj_length / 2.0)
        if not self.v_spike > 0:
            raise ValueError(f"v_spike: NeuronParams requires v_spike > 0 (got {self.v_spike})")
        if not self.v_rest < 0:
            raise ValueError(f"v_rest: NeuronParams requires v_rest < 0 (got {self.v_rest})")
        if not self.v_reset < 0:
            raise ValueError(f"v_reset: NeuronParams requires v_reset < 0 (got {self.v_reset})")
        if not self.t_pulse > 0:
            raise ValueError(f"t_pulse: NeuronParams requires t_pulse > 0 (got {self.t_pulse})")
        if not 0 < self.x_fire <= self.geom.magnet_length:
            raise ValueError(f"x_fire: NeuronParams requires 0 < x_fire <= magnet_length (got {self.x_fire})")
        if not self.theta_plus >= 0:
            raise ValueError(f"theta_plus: NeuronParams requires theta_plus >= 0 (got {self.theta_plus})")
        if not self.tau_theta > 0:
            raise ValueError(f"tau_theta: NeuronParams requires tau_theta > 0 (got {self.tau_theta})")
        for name in ("v_spike", "v_rest", "v_reset"):
            _check_sub_depinning(name, getattr(self, name), self.geom, self.merz, self.limits)
        if self.theta_plus > 0:
            # firings are at least one reset walk apart, so theta accumulates as a geometric series
            min_gap = self.x_fire / self.reset_speed
            theta_ceiling = self.theta_plus / (1.0 - math.exp(-min_gap / self.tau_theta))
            if not self.x_fire + theta_ceiling < self.geom.magnet_length:
                raise ValueError(
                    f"theta_plus: NeuronParams requires x_fire + max accumulated theta < magnet_length "
                    f"(got {self.x_fire + theta_ceiling:.4g} >= {self.geom.magnet_length})"
                )

    @property
    def integrate_speed(self) -> float:
        return fe_dw_velocity(self.v_spike, self.geom, self.merz)

    @property
    def leak_speed(self) -> float:
        return abs(fe_dw_velocity(self.v_rest, self.geom, self.merz))

    @property
    def reset_speed(self) -> float:
        return abs(fe_dw_velocity(self.v_reset, self.geom, self.merz))


def _check_sub_depinning(name, voltage, geom, merz, limits):
    v = fe_dw_velocity(voltage, geom, merz)
    if v > limits.v_dep_pos or v < -limits.v_dep_neg:
        raise ValueError(
            f"{name}: drive {voltage} V gives FE-DW velocity {v:.4g} m/s beyond depinning "
            f"(+{limits.v_dep_pos} / -{limits.v_dep_neg} m/s)"
        )


@dataclass(frozen=True)
class DwNeuronState:
    x: float = 0.0
    refractory_until: float = 0.0
    theta: float = 0.0
    fired_count: int = 0
    resetting: bool = False  # a firing's walk home has not finished yet


def neuron_step(
    state: DwNeuronState,
    input_voltage: float,
    dt: float,
    params: NeuronParams,
    now: float,
    sink: DiagnosticsSink | None = None,
) -> tuple[DwNeuronState, bool]:
    """Advance one device through the interval [now, now + dt) under a constant drive.

    While resetting, the reset drive replaces the input and nothing fires. A firing sets the
    refractory window to end at now + dt + x / |v_reset| (the wall walks home after this step).
    The wall is at x = 0 once the window closes, even when the next step starts later than
    that; the input then drives it only for the part of the step after the window.
    """
    if dt < 0:
        raise ValueError(f"dt must be >= 0 (got {dt})")
    if dt == 0:
        return state, False

    theta = state.theta * math.exp(-dt / params.tau_theta)
    geom = params.geom

    x, drive_time = state.x, dt
    if state.resetting or now < state.refractory_until:
        if now + dt < state.refractory_until:
            v = fm_velocity_for(params.v_reset, geom, params.merz, params.limits, sink)
            return replace(state, x=advance_dw(x, v, dt, geom), theta=theta, resetting=True), False
        # the window closes inside this step (or closed before it): the wall is home from then on
        x = 0.0
        drive_time = now + dt - max(now, state.refractory_until)
        if drive_time <= 0:
            return replace(state, x=x, theta=theta, resetting=False), False

    v = fm_velocity_for(input_voltage, geom, params.merz, params.limits, sink)
    x = advance_dw(x, v, drive_time, geom)
    if x >= params.x_fire + theta:
        reset_duration = x / params.reset_speed
        fired = DwNeuronState(
            x=x,
            refractory_until=now + dt + reset_duration,
            theta=theta + params.theta_plus,
            fired_count=state.fired_count + 1,
            resetting=True,
        )
        return fired, True
    return replace(state, x=x, theta=theta, resetting=False), False


def critical_rate(params: NeuronParams) -> float:
    """Periodic input rate above which the net wall drift per period turns positive."""
    up = params.integrate_speed
    down = params.leak_speed
    return down / (params.t_pulse * (up + down))


# --- network (weight-domain) view -------------------------------------------------------


@dataclass(frozen=True)
class MembraneParams:
    """Normalized DW-neuron constants for clock-driven network runs.

    Positions are x / L in [0, 1]; speeds are in units of L per network second.
    """

    u_fire: float
    leak_speed: float
    reset_speed: float
    input_gain: float
    adaptive: bool = True
    theta_plus: float = 0.001
    tau_theta: float = 20.0
    theta_max: float = 0.15

    def __post_init__(self):
        if not self.u_fire + self.theta_max < 1.0:
            raise ValueError(
                f"theta_max: firing threshold plus theta_max must stay below the magnet end "
                f"(got {self.u_fire + self.theta_max:.4g})"
            )


def membrane_params(
    neuron: NeuronParams,
    time_scale: float,
    input_gain: float,
    adaptive: bool = True,
    theta_plus: float = 0.001,
    tau_theta: float = 20.0,
    theta_max: float = 0.15,
) -> MembraneParams:
    """Map device speeds (m/s) onto the network clock: one network second = time_scale device seconds."""
    length = neuron.geom.magnet_length
    return MembraneParams(
        u_fire=neuron.x_fire / length,
        leak_speed=neuron.leak_speed / length / time_scale,
        reset_speed=neuron.reset_speed / length / time_scale,
        input_gain=input_gain,
        adaptive=adaptive,
        theta_plus=theta_plus,
        tau_theta=tau_theta,
        theta_max=theta_max,
    )


def integrate_membranes(u: np.ndarray, drive: np.ndarray, refractory: np.ndarray, dt: float, mp: MembraneParams):
    """Integrate weighted input minus leak; resetting neurons ignore input and walk home."""
    moved = np.where(refractory, u - mp.reset_speed * dt, u + drive - mp.leak_speed * dt)
    return np.clip(moved, 0.0, 1.0)


def threshold_crossings(u: np.ndarray, theta: np.ndarray, refractory: np.ndarray, mp: MembraneParams) -> np.ndarray:
    return ~refractory & (u >= mp.u_fire + theta)


def decay_theta(theta: np.ndarray, dt: float, mp: MembraneParams) -> np.ndarray:
    return theta * math.exp(-dt / mp.tau_theta)


def bump_theta(theta: np.ndarray, fired: np.ndarray, mp: MembraneParams) -> np.ndarray:
    return np.where(fired, np.minimum(theta + mp.theta_plus, mp.theta_max), theta)


def reset_durations(u: np.ndarray, mp: MembraneParams) -> np.ndarray:
    return u / mp.reset_speed
