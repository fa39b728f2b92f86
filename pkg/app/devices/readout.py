"""Spike readout of the DW neuron: MTJ footprint, reference-MTJ voltage divider, inverter."""

import numpy as np

from app.devices.physics import DeviceGeometry, MtjParams


def _switched_overlap(x, geom: DeviceGeometry):
    """Length of the MTJ footprint already swept by the wall (parallel region)."""
    unswept = np.clip(geom.magnet_length - np.asarray(x, dtype=np.float64), 0.0, geom.mtj_length)
    return geom.mtj_length - unswept


def magnetization_under_mtj(x, geom: DeviceGeometry):
    """Average x-magnetization under the MTJ: -1 fully anti-parallel, +1 fully parallel."""
    m = 2.0 * _switched_overlap(x, geom) / geom.mtj_length - 1.0
    return float(m) if np.ndim(m) == 0 else m


def footprint_conductance(x, geom: DeviceGeometry, mtj: MtjParams):
    frac = _switched_overlap(x, geom) / geom.mtj_length
    g = (1.0 - frac) * mtj.g_ap + frac * mtj.g_p
    return float(g) if np.ndim(g) == 0 else g


def read_spike(x, geom: DeviceGeometry) -> bool:
    """True once the majority of the MTJ area is parallel, i.e. x >= L - mtj_length/2."""
    return bool(x >= geom.magnet_length - geom.mtj_length / 2.0)


def reference_conductance(mtj: MtjParams) -> float:
    """Reference MTJ sized at the midpoint so the divider trips at half-switched."""
    return 0.5 * (mtj.g_p + mtj.g_ap)


def divider_voltage(g_mtj, g_ref: float, v_dd: float):
    """Voltage across the device MTJ in the reference-over-device divider."""
    return v_dd * g_ref / (g_ref + g_mtj)


def read_spike_divider(x, geom: DeviceGeometry, mtj: MtjParams, v_dd: float = 1.0) -> bool:
    """Ideal-inverter readout: output goes high when the divider node drops below v_dd / 2."""
    v_in = divider_voltage(footprint_conductance(x, geom, mtj), reference_conductance(mtj), v_dd)
    return bool(v_in <= v_dd / 2.0)
