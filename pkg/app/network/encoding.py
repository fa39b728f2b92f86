"""Rate coding of pixel intensities into Bernoulli-per-step (Poisson-approximating) spike trains."""

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EncodingParams:
    max_rate: float = 63.75
    presentation_time: float = 0.35
    rest_time: float = 0.15
    intensity_scale: float = 1.0

    def __post_init__(self):
        for name in ("max_rate", "presentation_time", "rest_time", "intensity_scale"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name}: EncodingParams requires {name} > 0 (got {value})")


def spike_probability(pixel, params: EncodingParams, dt: float):
    """Per-step spike probability rate * dt with rate = max_rate * intensity_scale * pixel / 255."""
    rate = params.max_rate * params.intensity_scale * (np.asarray(pixel, dtype=np.float64) / 255.0)
    p = rate * dt
    if np.any(p > 1.0):
        raise ValueError(f"spike probability per step exceeds 1 (max {float(np.max(p)):.3g}); reduce dt or max_rate")
    return float(p) if np.ndim(p) == 0 else p


def encode_poisson(pixel, params: EncodingParams, stream: np.random.Generator, dt: float) -> bool:
    """One input step for one pixel. Always consumes exactly one uniform from `stream`."""
    return bool(stream.random() < spike_probability(pixel, params, dt))


def encode_image(
    image,
    params: EncodingParams,
    streams: list[np.random.Generator],
    dt: float,
    n_steps: int,
) -> np.ndarray:
    """Spike raster of shape (n_steps, n_input); column i comes from streams[i] alone."""
    p = spike_probability(np.asarray(image).reshape(-1), params, dt)
    if p.size != len(streams):
        raise ValueError(f"image has {p.size} pixels but {len(streams)} input streams")
    raster = np.empty((n_steps, p.size), dtype=bool)
    for i, stream in enumerate(streams):
        raster[:, i] = stream.random(n_steps) < p[i]
    return raster
