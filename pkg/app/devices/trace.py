"""Nanosecond-resolution single-device traces (neuron and synapse) on a fixed step grid."""

import logging
from dataclasses import dataclass

import numpy as np

from app.devices.neuron import DwNeuronState, NeuronParams, neuron_step
from app.devices.physics import DiagnosticsSink, advance_dw, fm_velocity_for, mtj_conductance
from app.devices.readout import magnetization_under_mtj
from app.devices.synapse import SynapseParams

logger = logging.getLogger(__name__)

# two bursts: the first decays away below threshold, the second drives the neuron to fire
DEFAULT_NEURON_PULSES = tuple(t * 1e-9 for t in (5, 7, 9, 11, *range(30, 51, 2)))
DEFAULT_SYNAPSE_PULSES = ((5e-9, 4e-9, 2.0), (20e-9, 2e-9, -2.0), (30e-9, 30e-9, -0.5))


@dataclass(frozen=True)
class TraceRow:
    t: float
    x: float
    value: float
    fired: bool = False


def _n_steps(duration: float, dt: float) -> int:
    if not dt > 0:
        raise ValueError(f"dt must be > 0 (got {dt})")
    if duration < 0:
        raise ValueError(f"duration must be >= 0 (got {duration})")
    return int(round(duration / dt))


def drive_schedule(pulses, rest_voltage: float, dt: float, n_steps: int) -> np.ndarray:
    """Per-step drive voltage from (start, width, voltage) pulses; later pulses win on overlap."""
    drive = np.full(n_steps, rest_voltage, dtype=np.float64)
    for start, width, voltage in pulses:
        if start < 0 or width < 0:
            raise ValueError(f"invalid pulse (start={start}, width={width}): both must be >= 0")
        first = int(round(start / dt))
        drive[first : first + int(round(width / dt))] = voltage
    return drive


def periodic_schedule(period: float, duration: float, offset: float = 0.0) -> list[float]:
    """Pulse start times offset, offset + period, ... before `duration`."""
    if not period > 0:
        raise ValueError(f"period must be > 0 (got {period})")
    return [float(t) for t in np.arange(offset, duration, period)]


def simulate_neuron(
    pulse_starts,
    params: NeuronParams,
    dt: float = 0.1e-9,
    duration: float = 70e-9,
    sink: DiagnosticsSink | None = None,
) -> list[TraceRow]:
    """Drive one neuron with v_spike pulses of width t_pulse over a v_rest background.

    Row k holds the state at t = k * dt; `fired` marks the step that ended there.
    """
    n = _n_steps(duration, dt)
    pulses = [(start, params.t_pulse, params.v_spike) for start in pulse_starts]
    drive = drive_schedule(pulses, params.v_rest, dt, n)

    state = DwNeuronState()
    rows = [TraceRow(t=0.0, x=state.x, value=magnetization_under_mtj(state.x, params.geom))]
    for k in range(n):
        state, fired = neuron_step(state, drive[k], dt, params, now=k * dt, sink=sink)
        if fired:
            logger.debug(f"neuron fired at {(k + 1) * dt:.3e} s (x={state.x:.4e} m)")
        rows.append(
            TraceRow(t=(k + 1) * dt, x=state.x, value=magnetization_under_mtj(state.x, params.geom), fired=fired)
        )
    return rows


def simulate_synapse(
    pulses,
    params: SynapseParams,
    dt: float = 0.1e-9,
    duration: float = 70e-9,
    rest_voltage: float = 0.0,
    initial_position: float = 0.0,
    sink: DiagnosticsSink | None = None,
) -> list[TraceRow]:
    """Drive one synapse with explicit (start, width, voltage) pulses; `value` is the MTJ conductance."""
    geom = params.geom
    if not 0.0 <= initial_position <= 1.0:
        raise ValueError(f"initial_position must lie in [0, 1] (got {initial_position})")
    n = _n_steps(duration, dt)
    drive = drive_schedule(pulses, rest_voltage, dt, n)
    velocity = fm_velocity_for(drive, geom, params.merz, params.limits, sink)

    x = initial_position * geom.magnet_length
    rows = [TraceRow(t=0.0, x=x, value=mtj_conductance(x, geom, params.mtj))]
    for k in range(n):
        x = advance_dw(x, float(velocity[k]), dt, geom)
        rows.append(TraceRow(t=(k + 1) * dt, x=x, value=mtj_conductance(x, geom, params.mtj)))
    return rows


def summarize_trace(rows: list[TraceRow], kind: str) -> dict:
    """Returns: {"kind", "steps", "fire_count", "fire_times", "x_max", "x_final", "value_start", "value_end"}"""
    fire_times = [r.t for r in rows if r.fired]
    return {
        "kind": kind,
        "steps": len(rows) - 1,
        "fire_count": len(fire_times),
        "fire_times": fire_times,
        "x_max": max(r.x for r in rows),
        "x_final": rows[-1].x,
        "value_start": rows[0].value,
        "value_end": rows[-1].value,
    }
