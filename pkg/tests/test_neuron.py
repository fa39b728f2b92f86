"""Tests for the DW-LIF neuron, its readout and device traces."""

import inspect
import math

import numpy as np
import pytest

from app.devices.neuron import (
    DwNeuronState,
    NeuronParams,
    critical_rate,
    integrate_membranes,
    membrane_params,
    neuron_step,
    threshold_crossings,
)
from app.devices.physics import DepinningLimits, DeviceGeometry, MtjParams, calibrate_merz
from app.devices.readout import (
    footprint_conductance,
    magnetization_under_mtj,
    read_spike,
    read_spike_divider,
    reference_conductance,
)
from app.devices.trace import (
    DEFAULT_NEURON_PULSES,
    drive_schedule,
    periodic_schedule,
    simulate_neuron,
    summarize_trace,
)

GEOM = DeviceGeometry()
MERZ = calibrate_merz(2.0, 150.0, -1.0, 15.0, GEOM)
MTJ = MtjParams.from_tmr(2e-4, 1.5)


def make_params(**kw) -> NeuronParams:
    return NeuronParams(geom=GEOM, merz=MERZ, limits=DepinningLimits(), mtj=MTJ, **kw)


class TestNeuronParams:
    def test_default_threshold(self):
        """x_fire defaults to the MTJ half-switched point."""
        assert make_params().x_fire == pytest.approx(1.25e-6)

    def test_speeds(self):
        """Integrate / leak / reset speeds follow the calibrated law."""
        p = make_params()
        assert p.integrate_speed == pytest.approx(150.0)
        assert p.leak_speed == pytest.approx(15.0)
        assert p.reset_speed == pytest.approx(150.0)

    def test_positive_rest_rejected(self):
        """The resting drive must pull the wall back."""
        with pytest.raises(ValueError, match="v_rest"):
            make_params(v_rest=0.5)

    def test_beyond_depinning_rejected(self):
        """Drives above depinning are outside the operating regime."""
        with pytest.raises(ValueError, match="v_spike"):
            make_params(v_spike=8.0)

    def test_theta_ceiling(self):
        """An adaptive threshold that could push past the magnet end is rejected."""
        with pytest.raises(ValueError, match="theta_plus"):
            make_params(theta_plus=0.3e-6, tau_theta=1e-6)


class TestNeuronStep:
    def test_pulse_moves_wall(self):
        """One 1 ns v_spike step advances the wall by 150 nm."""
        p = make_params()
        s, fired = neuron_step(DwNeuronState(), p.v_spike, 1e-9, p, now=0.0)
        assert s.x == pytest.approx(150e-9)
        assert not fired

    def test_rest_leaks(self):
        """Resting voltage pulls the wall back."""
        p = make_params()
        s, _ = neuron_step(DwNeuronState(x=300e-9), p.v_rest, 1e-9, p, now=0.0)
        assert s.x == pytest.approx(285e-9)

    def test_dt_zero(self):
        """dt = 0 leaves the state untouched."""
        p = make_params()
        state = DwNeuronState(x=1e-7)
        assert neuron_step(state, p.v_spike, 0.0, p, now=0.0) == (state, False)

    def test_fires_at_threshold(self):
        """Crossing x_fire fires and starts a refractory window equal to the walk-home time."""
        p = make_params()
        s, fired = neuron_step(DwNeuronState(x=1.2e-6), p.v_spike, 1e-9, p, now=5e-9)
        assert fired
        assert s.fired_count == 1
        assert s.refractory_until == pytest.approx(6e-9 + s.x / 150.0)

    def test_refractory_ignores_input(self):
        """During reset the input is ignored and the wall recedes."""
        p = make_params()
        state = DwNeuronState(x=1.0e-6, refractory_until=10e-9)
        s, fired = neuron_step(state, p.v_spike, 1e-9, p, now=2e-9)
        assert not fired
        assert s.x == pytest.approx(0.85e-6)

    def test_no_fire_while_refractory_even_above_threshold(self):
        """A refractory neuron above threshold does not fire again."""
        p = make_params()
        s, fired = neuron_step(DwNeuronState(x=1.4e-6, refractory_until=1.0), p.v_spike, 1e-9, p, now=0.0)
        assert not fired

    def test_adaptive_threshold_rises_and_decays(self):
        """theta grows by theta_plus per firing and decays with tau_theta."""
        p = make_params(theta_plus=10e-9, tau_theta=100e-9)
        s, fired = neuron_step(DwNeuronState(x=1.24e-6), p.v_spike, 1e-9, p, now=0.0)
        assert fired and s.theta == pytest.approx(10e-9)
        s2, _ = neuron_step(s, p.v_rest, 1e-9, p, now=1.0)
        assert s2.theta == pytest.approx(10e-9 * math.exp(-0.01))

    def test_late_step_after_fire_starts_from_home(self):
        """A step that begins after the refractory window sees the wall at home, so it cannot re-fire."""
        p = make_params()
        s, fired = neuron_step(DwNeuronState(x=1.24e-6), p.v_spike, 1e-9, p, now=0.0)
        assert fired and s.resetting
        s2, fired2 = neuron_step(s, p.v_spike, 1e-9, p, now=1.0)
        assert not fired2
        assert not s2.resetting
        assert s2.x == pytest.approx(150e-9, rel=1e-6)
        assert s2.fired_count == 1

    def test_window_closing_mid_step(self):
        """Input only drives the part of the step after the window closes."""
        p = make_params()
        state = DwNeuronState(x=30e-9, refractory_until=5.5e-9, resetting=True)
        s, fired = neuron_step(state, p.v_spike, 1e-9, p, now=5e-9)
        assert not fired
        assert s.x == pytest.approx(75e-9)


class TestCriticalRate:
    def test_formula(self):
        """r* = v_leak / (t_pulse * (v_int + v_leak))."""
        assert critical_rate(make_params()) == pytest.approx(15.0 / (1e-9 * 165.0))

    def test_fires_above_critical_rate(self):
        """Periodic input at ~1.2 r* fires."""
        p = make_params()
        dt = 0.1e-9
        period = 92 * dt
        assert 1.0 / period > critical_rate(p) * 1.15
        rows = simulate_neuron(periodic_schedule(period, 1e-6), p, dt=dt, duration=1e-6)
        assert summarize_trace(rows, "neuron")["fire_count"] >= 1

    def test_never_fires_below_critical_rate(self):
        """Periodic input at <= 0.9 r* never fires."""
        p = make_params()
        dt = 0.1e-9
        steps = math.ceil(1.0 / (0.9 * critical_rate(p)) / dt) + 1
        period = steps * dt
        rows = simulate_neuron(periodic_schedule(period, 2e-6), p, dt=dt, duration=2e-6)
        summary = summarize_trace(rows, "neuron")
        assert summary["fire_count"] == 0
        assert summary["x_max"] < 0.2e-6


class TestReadout:
    def test_magnetization_range(self):
        """m_x runs from -1 (anti-parallel) to +1 (parallel)."""
        assert magnetization_under_mtj(0.0, GEOM) == -1.0
        assert magnetization_under_mtj(GEOM.magnet_length, GEOM) == 1.0

    def test_spike_inclusive_at_half_switched(self):
        """x exactly at L - mtj_length/2 reads as a spike; one ulp below does not."""
        boundary = GEOM.magnet_length - GEOM.mtj_length / 2
        assert read_spike(boundary, GEOM)
        assert not read_spike(np.nextafter(boundary, 0.0), GEOM)
        assert magnetization_under_mtj(boundary, GEOM) == pytest.approx(0.0, abs=1e-12)

    def test_majority_read_takes_geometry_only(self):
        """The majority read needs no MTJ constants; the divider read is the one that takes them."""
        assert list(inspect.signature(read_spike).parameters) == ["x", "geom"]

    def test_spike_matches_majority(self):
        """read_spike, m_x >= 0 and the divider readout agree away from the boundary."""
        rng = np.random.default_rng(5)
        boundary = GEOM.magnet_length - GEOM.mtj_length / 2
        for x in rng.uniform(0, GEOM.magnet_length, 2000):
            if abs(x - boundary) < 1e-12:
                continue
            expected = x > boundary
            assert read_spike(x, GEOM) == expected
            assert (magnetization_under_mtj(x, GEOM) >= 0) == expected
            assert read_spike_divider(x, GEOM, MTJ) == expected

    def test_reference_between_states(self):
        """The reference MTJ sits between G_AP and G_P."""
        assert MTJ.g_ap < reference_conductance(MTJ) < MTJ.g_p
        assert footprint_conductance(GEOM.magnet_length, GEOM, MTJ) == pytest.approx(MTJ.g_p)


class TestNeuronTrace:
    def _trace(self):
        p = make_params()
        dt = 0.1e-9
        rows = simulate_neuron(DEFAULT_NEURON_PULSES, p, dt=dt, duration=70e-9)
        pulses = [(s, p.t_pulse, p.v_spike) for s in DEFAULT_NEURON_PULSES]
        drive = drive_schedule(pulses, p.v_rest, dt, len(rows) - 1)
        return p, rows, drive

    def test_single_fire(self):
        """The clustered schedule fires exactly once, in the second burst."""
        _, rows, _ = self._trace()
        fired = [r for r in rows if r.fired]
        assert len(fired) == 1
        assert 30e-9 < fired[0].t < 52e-9

    def test_rise_and_decay_before_fire(self):
        """The wall rises during every pulse step and strictly decays between pulses."""
        p, rows, drive = self._trace()
        fire_idx = next(i for i, r in enumerate(rows) if r.fired)
        for k in range(fire_idx):
            x0, x1 = rows[k].x, rows[k + 1].x
            if drive[k] == p.v_spike:
                assert x1 > x0
            elif x0 > 0:
                assert x1 < x0

    def test_reset_ramp_ignores_pulses(self):
        """After firing the wall walks monotonically back to 0 despite further pulses."""
        _, rows, _ = self._trace()
        fire_idx = next(i for i, r in enumerate(rows) if r.fired)
        after = [r.x for r in rows[fire_idx:]]
        assert all(b <= a for a, b in zip(after, after[1:]))
        assert after[-1] == 0.0

    def test_first_burst_subthreshold(self):
        """The first burst alone peaks below threshold and decays to rest."""
        p, rows, _ = self._trace()
        early = [r.x for r in rows if r.t <= 29e-9]
        assert max(early) < p.x_fire
        assert early[-1] < max(early)

    def test_empty_schedule(self):
        """No pulses gives a flat trace at the initial position."""
        rows = simulate_neuron([], make_params(), duration=5e-9)
        assert len(rows) == 51
        assert all(r.x == 0.0 and not r.fired for r in rows)


class TestMembranes:
    def test_network_mapping(self):
        """Normalized threshold and speeds follow the time scale."""
        mp = membrane_params(make_params(), time_scale=2e6, input_gain=0.01)
        assert mp.u_fire == pytest.approx(1.25e-6 / 1.5e-6)
        assert mp.leak_speed == pytest.approx(15.0 / 1.5e-6 / 2e6)
        assert mp.reset_speed == pytest.approx(150.0 / 1.5e-6 / 2e6)

    def test_integrate_and_threshold(self):
        """Refractory neurons walk home; others integrate drive minus leak."""
        mp = membrane_params(make_params(), time_scale=2e6, input_gain=0.01)
        u = np.array([0.5, 0.5])
        out = integrate_membranes(u, np.array([0.4, 0.4]), np.array([False, True]), 1e-3, mp)
        assert out[0] == pytest.approx(0.9 - mp.leak_speed * 1e-3)
        assert out[1] == pytest.approx(0.5 - mp.reset_speed * 1e-3)
        crossed = threshold_crossings(out, np.zeros(2), np.array([False, True]), mp)
        assert crossed.tolist() == [True, False]
