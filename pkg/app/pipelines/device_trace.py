"""Single-device trace pipeline: neuron (x, m_x, fire) or synapse (x, G) waveforms to CSV."""

import logging
from pathlib import Path

from app.core.config import SimConfig
from app.devices.neuron import critical_rate
from app.devices.physics import DiagnosticsSink
from app.devices.readout import read_spike_divider
from app.devices.trace import simulate_neuron, simulate_synapse, summarize_trace
from app.pipelines.exporter import write_summary, write_trace_csv

logger = logging.getLogger(__name__)

KINDS = ("neuron", "synapse")


def run_device_trace(cfg: SimConfig, kind: str, out_dir: Path) -> dict:
    """Simulate one device under the configured pulse schedule.

    Returns: {"kind", "csv", "summary_path", "fire_count", "fire_times", "x_max", "x_final",
              "value_start", "value_end", "depinning_clamps", ...}
    """
    if kind not in KINDS:
        raise ValueError(f"unknown device kind {kind!r} (expected one of {', '.join(KINDS)})")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t = cfg.device_trace
    sink = DiagnosticsSink()

    if kind == "neuron":
        rows = simulate_neuron(t.neuron_pulse_starts, cfg.neuron, dt=t.dt, duration=t.duration, sink=sink)
    else:
        rows = simulate_synapse(
            t.synapse_pulses,
            cfg.synapse,
            dt=t.dt,
            duration=t.duration,
            rest_voltage=t.synapse_rest_voltage,
            initial_position=t.synapse_initial_position,
            sink=sink,
        )

    csv_path = write_trace_csv(rows, out_dir / f"trace_{kind}.csv")
    summary = summarize_trace(rows, kind)
    summary["depinning_clamps"] = sink.total
    if kind == "neuron":
        summary["critical_rate_hz"] = critical_rate(cfg.neuron)
        summary["divider_fire_at_peak"] = read_spike_divider(summary["x_max"], cfg.geometry, cfg.mtj, t.divider_vdd)

    lines = {k: v for k, v in summary.items() if k != "fire_times"}
    lines["fire_times_s"] = " ".join(f"{v:.4e}" for v in summary["fire_times"]) or "-"
    summary_path = write_summary(lines, out_dir / f"trace_{kind}_summary.txt")
    logger.info(f"{kind} trace: {summary['steps']} steps, {summary['fire_count']} firings -> {csv_path.name}")
    return {**summary, "csv": str(csv_path), "summary_path": str(summary_path)}
