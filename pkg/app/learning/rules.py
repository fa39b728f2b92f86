"""Online plasticity: trace-based STDP and activity-dependent forgetting (ASP).

Both rules plug into `step_network` as hooks and act on the weight matrix in the normalized
DW-synapse domain (w = x / L). Every update touches one post-neuron column at a time.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from app.devices.synapse import weight_domain_forget, weight_domain_update

logger = logging.getLogger(__name__)

RULES = ("stdp", "asp")


@dataclass(frozen=True)
class StdpParams:
    eta_post: float = 0.01
    eta_pre: float = 0.001
    tau_pre: float = 0.02
    tau_post: float = 0.02
    w_max: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        for name in ("eta_post", "eta_pre", "mu"):
            value = getattr(self, name)
            if not value >= 0:
                raise ValueError(f"{name}: StdpParams requires {name} >= 0 (got {value})")
        for name in ("tau_pre", "tau_post"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name}: StdpParams requires {name} > 0 (got {value})")
        if self.w_max != 1.0:
            raise ValueError(f"w_max: weights are normalized DW positions, w_max must be 1.0 (got {self.w_max})")


@dataclass(frozen=True)
class AspParams:
    stdp: StdpParams = field(default_factory=StdpParams)
    lambda_base: float = 0.1
    recovery_k: float = 10.0
    tau_activity: float = 1.0

    def __post_init__(self):
        if not self.lambda_base >= 0:
            raise ValueError(f"lambda_base: AspParams requires lambda_base >= 0 (got {self.lambda_base})")
        if not self.recovery_k >= 0:
            raise ValueError(f"recovery_k: AspParams requires recovery_k >= 0 (got {self.recovery_k})")
        if not self.tau_activity > 0:
            raise ValueError(f"tau_activity: AspParams requires tau_activity > 0 (got {self.tau_activity})")


def stdp_on_post(w, pre_trace, params: StdpParams):
    """Potentiation at a post spike: eta_post * pre_trace * (w_max - w)^mu."""
    return params.eta_post * pre_trace * (params.w_max - w) ** params.mu


def stdp_on_pre(w, post_trace, params: StdpParams):
    """Depression at a pre spike: -eta_pre * post_trace * w^mu."""
    return -params.eta_pre * post_trace * w**params.mu


def asp_decay_rate(post_activity, params: AspParams):
    """Per-column forgetting rate; recently active post-neurons forget slower."""
    return params.lambda_base / (1.0 + params.recovery_k * np.asarray(post_activity, dtype=np.float64))


class StdpRule:
    """Trace STDP. Pre and post traces live on the network so checkpoints carry them."""

    name = "stdp"

    def __init__(self, params: StdpParams):
        self.params = params

    def on_decay(self, net, dt: float) -> None:
        net.pre_trace *= math.exp(-dt / self.params.tau_pre)
        net.post_trace *= math.exp(-dt / self.params.tau_post)

    def on_pre(self, net, pre_spikes: np.ndarray) -> None:
        rows = np.flatnonzero(pre_spikes)
        if rows.size == 0:
            return
        if self.params.eta_pre > 0 and net.post_trace.any():

            def _depress(cols: slice) -> None:
                w = net.weights[rows, cols]
                net.weights[rows, cols] = weight_domain_update(w, stdp_on_pre(w, net.post_trace[cols], self.params))

            net.for_columns(_depress)
        net.pre_trace[rows] += 1.0

    def on_post(self, net, post_spikes: np.ndarray) -> None:
        cols = np.flatnonzero(post_spikes)
        if cols.size == 0:
            return
        # coincident pre spikes already bumped pre_trace in on_pre, so they count as causal
        w = net.weights[:, cols]
        net.weights[:, cols] = weight_domain_update(w, stdp_on_post(w, net.pre_trace[:, None], self.params))
        net.post_trace[cols] += 1.0


class AspRule(StdpRule):
    """STDP plus exponential weight decay whose rate falls with post-neuron activity."""

    name = "asp"

    def __init__(self, params: AspParams):
        super().__init__(params.stdp)
        self.asp = params

    def on_decay(self, net, dt: float) -> None:
        super().on_decay(net, dt)
        net.activity *= math.exp(-dt / self.asp.tau_activity)
        if self.asp.lambda_base == 0:
            return
        rate = asp_decay_rate(net.activity, self.asp)

        def _forget(cols: slice) -> None:
            net.weights[:, cols] = weight_domain_forget(net.weights[:, cols], rate[cols], dt)

        net.for_columns(_forget)

    def on_post(self, net, post_spikes: np.ndarray) -> None:
        super().on_post(net, post_spikes)
        net.activity[np.flatnonzero(post_spikes)] += 1.0


def make_rule(name: str, params: AspParams) -> StdpRule:
    """Build the hook object for `name` ("stdp" or "asp")."""
    if name == "stdp":
        return StdpRule(params.stdp)
    if name == "asp":
        return AspRule(params)
    raise ValueError(f"unknown plasticity rule {name!r} (expected one of {', '.join(RULES)})")
