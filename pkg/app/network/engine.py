"""Clock-driven spiking network: Poisson inputs -> DW-LIF excitatory layer <-> 1:1 inhibitory partners.

One step of length dt runs, in order:
  1. inhibition queued by the previous step's firings
  2. plasticity decay hook (traces, forgetting)
  3. input spikes -> weighted drive -> membrane integration
  4. threshold test, winner selection, reset bookkeeping
  5. plasticity pre / post hooks

Per-column work can be split across a thread pool (`SnnParams.workers`). Every column is
computed with the same elementwise arithmetic in the same row order, so results are
bit-identical for any worker count.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from app.core.rng import input_streams, named_generator
from app.devices.neuron import (
    MembraneParams,
    NeuronParams,
    bump_theta,
    decay_theta,
    integrate_membranes,
    membrane_params,
    reset_durations,
    threshold_crossings,
)
from app.network.encoding import EncodingParams, encode_image
from app.network.events import EventLog

logger = logging.getLogger(__name__)


class TopologyError(ValueError):
    """Input or stored arrays do not match the network dimensions."""


@dataclass(frozen=True)
class Topology:
    n_input: int = 784
    n_exc: int = 100
    inhibition_strength: float = -0.5

    def __post_init__(self):
        if self.n_input < 1 or self.n_exc < 1:
            raise ValueError(f"n_exc: Topology requires n_input >= 1 and n_exc >= 1 (got {self.n_input}, {self.n_exc})")
        if not self.inhibition_strength < 0:
            raise ValueError(
                f"inhibition_strength: Topology requires inhibition_strength < 0 (got {self.inhibition_strength})"
            )

    @property
    def n_inh(self) -> int:
        return self.n_exc


@dataclass(frozen=True)
class SnnParams:
    dt: float = 0.5e-3
    time_scale: float = 2e6
    input_gain: float = 0.01
    inhibition: bool = True
    single_winner: bool = True
    adaptive_threshold: bool = True
    theta_plus: float = 0.001
    tau_theta: float = 20.0
    theta_max: float = 0.15
    init_w_low: float = 0.2
    init_w_high: float = 0.4
    workers: int = 1
    log_input_events: bool = False

    def __post_init__(self):
        for name in ("dt", "time_scale", "input_gain", "tau_theta"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name}: SnnParams requires {name} > 0 (got {value})")
        if not 0.0 <= self.init_w_low <= self.init_w_high <= 1.0:
            raise ValueError(
                f"init_w_low: SnnParams requires 0 <= init_w_low <= init_w_high <= 1 "
                f"(got {self.init_w_low}, {self.init_w_high})"
            )
        if self.theta_plus < 0 or self.theta_max < 0:
            raise ValueError("theta_plus: SnnParams requires theta_plus >= 0 and theta_max >= 0")
        if self.workers < 1:
            raise ValueError(f"workers: SnnParams requires workers >= 1 (got {self.workers})")


def network_membrane(neuron: NeuronParams, params: SnnParams) -> MembraneParams:
    """Membrane constants for `neuron` on the network clock; gain and threshold settings come from `params`."""
    return membrane_params(
        neuron,
        params.time_scale,
        params.input_gain,
        adaptive=params.adaptive_threshold,
        theta_plus=params.theta_plus,
        tau_theta=params.tau_theta,
        theta_max=params.theta_max,
    )


class PlasticityHooks(Protocol):
    def on_decay(self, net: "Network", dt: float) -> None: ...

    def on_pre(self, net: "Network", pre_spikes: np.ndarray) -> None: ...

    def on_post(self, net: "Network", post_spikes: np.ndarray) -> None: ...


@dataclass(eq=False)
class Network:
    topology: Topology
    params: SnnParams
    neuron: NeuronParams
    weights: np.ndarray
    streams: list[np.random.Generator]
    membrane_params: MembraneParams = field(init=False, default=None)
    membrane: np.ndarray = None
    refractory_until: np.ndarray = None
    theta: np.ndarray = None
    fired_count: np.ndarray = None
    pending_inhibition: np.ndarray = None
    pre_trace: np.ndarray = None
    post_trace: np.ndarray = None
    activity: np.ndarray = None
    step: int = 0
    events: EventLog = None
    _executor: ThreadPoolExecutor | None = field(default=None, repr=False)

    def __post_init__(self):
        self.membrane_params = network_membrane(self.neuron, self.params)
        n_in, n_exc = self.topology.n_input, self.topology.n_exc
        if self.weights.shape != (n_in, n_exc):
            raise TopologyError(f"weights shape {self.weights.shape} != ({n_in}, {n_exc})")
        if len(self.streams) != n_in:
            raise TopologyError(f"{len(self.streams)} input streams for {n_in} inputs")
        for name, size in (
            ("membrane", n_exc),
            ("refractory_until", n_exc),
            ("theta", n_exc),
            ("post_trace", n_exc),
            ("activity", n_exc),
            ("pre_trace", n_in),
        ):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(size, dtype=np.float64))
            elif getattr(self, name).shape != (size,):
                raise TopologyError(f"{name} shape {getattr(self, name).shape} != ({size},)")
        if self.fired_count is None:
            self.fired_count = np.zeros(n_exc, dtype=np.int64)
        if self.pending_inhibition is None:
            self.pending_inhibition = np.zeros(n_exc, dtype=bool)
        if self.events is None:
            self.events = EventLog(self.params.dt)

    @property
    def clock(self) -> float:
        return self.step * self.params.dt

    def column_blocks(self) -> list[slice]:
        n = self.topology.n_exc
        k = min(self.params.workers, n)
        bounds = np.linspace(0, n, k + 1).astype(int)
        return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

    def for_columns(self, fn: Callable[[slice], None]) -> None:
        """Run `fn` over disjoint column blocks, in parallel when workers > 1."""
        blocks = self.column_blocks()
        if len(blocks) == 1:
            fn(blocks[0])
            return
        if self._executor is None:
            self._executor = ThreadPoolExecutor(max_workers=len(blocks), thread_name_prefix="snn")
        list(self._executor.map(fn, blocks))

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None


def build_network(topology: Topology, params: SnnParams, neuron: NeuronParams, seed: int) -> Network:
    """Fresh network with uniform random weights from the seed's "weights" stream."""
    rng = named_generator(seed, "weights")
    weights = rng.uniform(params.init_w_low, params.init_w_high, size=(topology.n_input, topology.n_exc))
    logger.debug(f"built network {topology.n_input}x{topology.n_exc} (seed={seed})")
    return Network(
        topology=topology,
        params=params,
        neuron=neuron,
        weights=weights,
        streams=input_streams(seed, topology.n_input),
    )


def apply_lateral_inhibition(net: Network, fired: np.ndarray) -> None:
    """Each fired neuron's partner lowers every other excitatory membrane by |inhibition_strength|."""
    n_fired = int(fired.sum())
    if n_fired == 0:
        return
    hits = n_fired - fired.astype(np.int64)
    net.membrane = np.clip(net.membrane + net.topology.inhibition_strength * hits, 0.0, 1.0)


def step_network(
    net: Network,
    input_spikes: np.ndarray,
    hooks: PlasticityHooks | None = None,
    adapt: bool = True,
) -> tuple[Network, np.ndarray]:
    """Advance the network one dt. Returns (net, fired mask of the excitatory layer)."""
    input_spikes = np.asarray(input_spikes, dtype=bool)
    n_in, n_exc = net.topology.n_input, net.topology.n_exc
    if input_spikes.shape != (n_in,):
        raise TopologyError(f"input spike vector shape {input_spikes.shape} != ({n_in},)")

    dt = net.params.dt
    mp = net.membrane_params
    t0 = net.clock

    if net.pending_inhibition.any():
        apply_lateral_inhibition(net, net.pending_inhibition)
        net.pending_inhibition = np.zeros(n_exc, dtype=bool)

    if hooks is not None:
        hooks.on_decay(net, dt)

    rows = np.flatnonzero(input_spikes)
    refractory = t0 < net.refractory_until
    adaptive = adapt and mp.adaptive
    u_new = np.empty(n_exc, dtype=np.float64)

    def _integrate(cols: slice) -> None:
        drive = np.zeros(cols.stop - cols.start, dtype=np.float64)
        for r in rows:
            drive += net.weights[r, cols]
        drive *= mp.input_gain
        u_new[cols] = integrate_membranes(net.membrane[cols], drive, refractory[cols], dt, mp)
        if adaptive:
            net.theta[cols] = decay_theta(net.theta[cols], dt, mp)

    net.for_columns(_integrate)

    fired = threshold_crossings(u_new, net.theta, refractory, mp)
    if fired.sum() > 1 and net.params.inhibition and net.params.single_winner:
        overshoot = np.where(fired, u_new - (mp.u_fire + net.theta), -np.inf)
        winner = int(np.argmax(overshoot))
        fired = np.zeros(n_exc, dtype=bool)
        fired[winner] = True

    if fired.any():
        net.refractory_until = np.where(fired, t0 + dt + reset_durations(u_new, mp), net.refractory_until)
        net.fired_count = net.fired_count + fired
        if adaptive:
            net.theta = bump_theta(net.theta, fired, mp)
        idx = np.flatnonzero(fired)
        net.events.record(net.step, "exc", idx)
        if net.params.inhibition:
            net.events.record(net.step, "inh", idx)
            net.pending_inhibition = fired.copy()
    net.membrane = u_new

    if net.params.log_input_events:
        net.events.record(net.step, "input", rows)

    if hooks is not None:
        hooks.on_pre(net, input_spikes)
        hooks.on_post(net, fired)

    net.step += 1
    return net, fired


def presentation_steps(enc: EncodingParams, dt: float) -> tuple[int, int]:
    """(stimulus steps, rest steps) for one image."""
    return int(round(enc.presentation_time / dt)), int(round(enc.rest_time / dt))


def run_presentation(
    net: Network,
    image: np.ndarray,
    enc: EncodingParams,
    hooks: PlasticityHooks | None = None,
    adapt: bool = True,
) -> tuple[Network, np.ndarray]:
    """Present one image then rest with zero input. Returns (net, spike counts per excitatory neuron)."""
    image = np.asarray(image).reshape(-1)
    if image.size != net.topology.n_input:
        raise TopologyError(f"image has {image.size} pixels, network expects {net.topology.n_input}")
    dt = net.params.dt
    n_on, n_rest = presentation_steps(enc, dt)
    raster = encode_image(image, enc, net.streams, dt, n_on)
    counts = np.zeros(net.topology.n_exc, dtype=np.int64)
    for k in range(n_on):
        _, fired = step_network(net, raster[k], hooks, adapt)
        counts += fired
    silence = np.zeros(net.topology.n_input, dtype=bool)
    for _ in range(n_rest):
        _, fired = step_network(net, silence, hooks, adapt)
        counts += fired
    return net, counts
