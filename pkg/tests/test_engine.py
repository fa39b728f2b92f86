"""Tests for the clock-driven network step, inhibition and worker determinism."""

from dataclasses import replace

import numpy as np
import pytest

from app.core.config import load_config
from app.learning.rules import make_rule
from app.network.engine import (
    Network,
    Topology,
    TopologyError,
    apply_lateral_inhibition,
    build_network,
    run_presentation,
    step_network,
)


def make_net(n_input=16, n_exc=4, seed=0, **snn) -> Network:
    cfg = load_config()
    params = replace(cfg.snn, **snn)
    return build_network(Topology(n_input=n_input, n_exc=n_exc), params, cfg.neuron, seed)


class TestBuild:
    def test_initial_state(self):
        """Weights are drawn in [init_w_low, init_w_high]; everything else starts at zero."""
        net = make_net()
        assert net.weights.shape == (16, 4)
        assert net.weights.min() >= 0.2 and net.weights.max() <= 0.4
        assert not net.membrane.any() and not net.theta.any()
        assert net.step == 0

    def test_seeded(self):
        """Same seed, same weights."""
        np.testing.assert_array_equal(make_net(seed=4).weights, make_net(seed=4).weights)

    def test_snn_settings_reach_membranes(self):
        """input_gain and time_scale set on SnnParams are the ones the membranes use."""
        net = make_net(input_gain=0.07, time_scale=4e6)
        base = make_net()
        assert net.membrane_params.input_gain == 0.07
        assert net.membrane_params.leak_speed == pytest.approx(base.membrane_params.leak_speed / 2, rel=1e-12)
        assert load_config().membrane.input_gain == load_config().snn.input_gain

    def test_topology_invariants(self):
        """Inhibition must be negative."""
        with pytest.raises(ValueError, match="inhibition_strength"):
            Topology(inhibition_strength=0.5)


class TestStep:
    def test_silent_input(self):
        """All-zero input leaves the network unchanged apart from the step counter."""
        net = make_net()
        _, fired = step_network(net, np.zeros(16, dtype=bool))
        assert not fired.any()
        assert not net.membrane.any()
        assert net.step == 1
        assert len(net.events) == 0

    def test_input_integrates(self):
        """Input spikes add gain * sum of weights to each membrane, minus leak."""
        net = make_net(input_gain=0.01)
        spikes = np.zeros(16, dtype=bool)
        spikes[[1, 5]] = True
        expected = 0.01 * (net.weights[1] + net.weights[5]) - net.membrane_params.leak_speed * net.params.dt
        step_network(net, spikes)
        np.testing.assert_allclose(net.membrane, np.clip(expected, 0, 1), rtol=1e-12)

    def test_shape_mismatch(self):
        """Wrong input length is a topology error."""
        with pytest.raises(TopologyError):
            step_network(make_net(), np.zeros(15, dtype=bool))

    def test_fire_sets_refractory_and_queues_inhibition(self):
        """A neuron driven past threshold fires, resets, and inhibits its peers next step."""
        net = make_net(input_gain=1.0)
        net.weights[:, 2] = 1.0
        net.membrane[:] = 0.5
        spikes = np.zeros(16, dtype=bool)
        spikes[0] = True
        _, fired = step_network(net, spikes)
        assert fired.tolist() == [False, False, True, False]
        assert net.refractory_until[2] > net.params.dt
        assert net.theta[2] > 0
        assert net.events.count("exc") == 1 and net.events.count("inh") == 1
        before = net.membrane.copy()
        step_network(net, np.zeros(16, dtype=bool))
        # peers dropped by |inhibition_strength| (clamped at 0) before leaking
        assert np.all(net.membrane[[0, 1, 3]] <= np.maximum(before[[0, 1, 3]] - 0.5, 0.0))
        assert net.membrane[2] < before[2]

    def test_single_winner(self):
        """With inhibition on, only the largest overshoot fires."""
        net = make_net(input_gain=1.0)
        net.membrane[:] = [0.9, 0.95, 0.9, 0.0]
        net.weights[:] = 0.0
        _, fired = step_network(net, np.ones(16, dtype=bool))
        assert fired.tolist() == [False, True, False, False]

    def test_all_fire_without_single_winner(self):
        """single_winner off lets every crossing neuron fire."""
        net = make_net(input_gain=1.0, single_winner=False)
        net.membrane[:] = [0.9, 0.95, 0.9, 0.0]
        net.weights[:] = 0.0
        _, fired = step_network(net, np.ones(16, dtype=bool))
        assert fired.tolist() == [True, True, True, False]


class TestInhibition:
    def test_multiple_firings_stack(self):
        """Two fired neurons lower every other membrane twice and each other once."""
        net = make_net()
        net.membrane[:] = 1.0
        fired = np.array([True, True, False, False])
        apply_lateral_inhibition(net, fired)
        np.testing.assert_allclose(net.membrane, [0.5, 0.5, 0.0, 0.0])

    def test_no_firing_noop(self):
        """Nothing fired, nothing inhibited."""
        net = make_net()
        net.membrane[:] = 0.3
        apply_lateral_inhibition(net, np.zeros(4, dtype=bool))
        np.testing.assert_array_equal(net.membrane, 0.3)


class TestPresentation:
    def test_step_count(self):
        """One presentation runs presentation + rest steps."""
        cfg = load_config()
        net = make_net()
        enc = replace(cfg.encoding, presentation_time=0.01, rest_time=0.005)
        run_presentation(net, np.full(16, 255, dtype=np.uint8), enc)
        assert net.step == 30

    def test_wrong_image_size(self):
        """Image pixel count must match n_input."""
        cfg = load_config()
        with pytest.raises(TopologyError):
            run_presentation(make_net(), np.zeros(10), cfg.encoding)

    def test_blank_image_is_silent(self):
        """A black image produces no input spikes and no firings."""
        cfg = load_config()
        net = make_net(input_gain=1.0, log_input_events=True)
        enc = replace(cfg.encoding, presentation_time=0.05, rest_time=0.01)
        _, counts = run_presentation(net, np.zeros(16, dtype=np.uint8), enc)
        assert not counts.any()
        assert len(net.events) == 0

    def test_counts_match_event_log(self):
        """Per-neuron spike counts equal the excitatory events recorded for the presentation."""
        cfg = load_config()
        net = make_net(input_gain=0.2, single_winner=False)
        enc = replace(cfg.encoding, presentation_time=0.1, rest_time=0.01)
        _, counts = run_presentation(net, np.full(16, 255, dtype=np.uint8), enc)
        exc = [e.index for e in net.events.events() if e.layer == "exc"]
        assert counts.sum() > 0
        assert counts.sum() == net.events.count("exc")
        np.testing.assert_array_equal(np.bincount(exc, minlength=4), counts)

    def test_refractory_bounds_firing_rate(self):
        """Consecutive firings of one neuron are at least one step plus the walk home apart."""
        cfg = load_config()
        net = make_net(input_gain=1.0, inhibition=False, adaptive_threshold=False)
        enc = replace(cfg.encoding, presentation_time=0.2, rest_time=0.01)
        _, counts = run_presentation(net, np.full(16, 255, dtype=np.uint8), enc)
        mp, dt = net.membrane_params, net.params.dt
        min_gap = 1 + mp.u_fire / (mp.reset_speed * dt)
        assert counts.max() > 1
        assert counts.max() <= 1 + (net.step - 1) / min_gap

    def test_identical_neurons_fire_alike(self):
        """With inhibition off and equal weight columns, every neuron fires the same number of times."""
        cfg = load_config()
        net = make_net(input_gain=0.1, inhibition=False)
        net.weights[:] = 0.3
        enc = replace(cfg.encoding, presentation_time=0.1, rest_time=0.01)
        _, counts = run_presentation(net, np.full(16, 255, dtype=np.uint8), enc)
        assert counts[0] > 0
        assert np.all(counts == counts[0])

    def test_events_in_time_order(self):
        """The event log never goes back in time."""
        cfg = load_config()
        net = make_net(input_gain=0.2, log_input_events=True)
        enc = replace(cfg.encoding, presentation_time=0.05, rest_time=0.01)
        rng = np.random.default_rng(5)
        for _ in range(3):
            run_presentation(net, rng.integers(0, 256, 16), enc)
        times = [e.t for e in net.events.events()]
        assert len(times) > 0
        assert all(a <= b for a, b in zip(times, times[1:]))


class TestDeterminism:
    def _run(self, workers: int):
        cfg = load_config()
        net = make_net(n_input=36, n_exc=7, seed=11, input_gain=0.1, workers=workers)
        enc = replace(cfg.encoding, presentation_time=0.05, rest_time=0.01)
        rule = make_rule("asp", cfg.asp)
        rng = np.random.default_rng(3)
        for _ in range(4):
            run_presentation(net, rng.integers(0, 256, 36), enc, hooks=rule)
        net.close()
        return net

    def test_worker_count_invariant(self):
        """Any worker count reproduces the single-worker events and weights bit for bit."""
        one = self._run(1)
        three = self._run(3)
        assert one.events.events() == three.events.events()
        np.testing.assert_array_equal(one.weights, three.weights)
        np.testing.assert_array_equal(one.theta, three.theta)

    def test_same_seed_same_run(self):
        """Reruns with the same seed are identical."""
        a, b = self._run(1), self._run(1)
        assert a.events.events() == b.events.events()
        assert len(a.events) > 0
