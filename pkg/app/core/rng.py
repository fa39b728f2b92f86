"""Seeded, named random streams.

All randomness flows from the single config seed. Each component asks for a stream by name,
and every input neuron owns its own counter-based (Philox) stream, so results never depend on
call order between components or on how many workers step the network.
"""

import zlib

import numpy as np


def stream_seed(seed: int, name: str) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(zlib.crc32(name.encode("utf-8")),))


def named_generator(seed: int, name: str) -> np.random.Generator:
    """Generator for one named component, e.g. "weights"."""
    return np.random.Generator(np.random.Philox(stream_seed(seed, name)))


def input_streams(seed: int, n: int) -> list[np.random.Generator]:
    """One independent Philox stream per input neuron."""
    children = stream_seed(seed, "input").spawn(n)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


def stream_state_arrays(streams: list[np.random.Generator]) -> dict[str, np.ndarray]:
    """Pack the Philox states of `streams` into flat arrays (checkpoint payload)."""
    states = [g.bit_generator.state for g in streams]
    return {
        "rng_counter": np.array([s["state"]["counter"] for s in states], dtype="<u8").reshape(len(states), 4),
        "rng_key": np.array([s["state"]["key"] for s in states], dtype="<u8").reshape(len(states), 2),
        "rng_buffer": np.array([s["buffer"] for s in states], dtype="<u8").reshape(len(states), 4),
        "rng_buffer_pos": np.array([s["buffer_pos"] for s in states], dtype="<i8"),
        "rng_has_uint32": np.array([s["has_uint32"] for s in states], dtype="<i8"),
        "rng_uinteger": np.array([s["uinteger"] for s in states], dtype="<u8"),
    }


def restore_streams(arrays: dict[str, np.ndarray]) -> list[np.random.Generator]:
    """Inverse of `stream_state_arrays`."""
    streams = []
    for i in range(arrays["rng_counter"].shape[0]):
        bit_gen = np.random.Philox(0)
        bit_gen.state = {
            "bit_generator": "Philox",
            "state": {
                "counter": np.array(arrays["rng_counter"][i], dtype=np.uint64),
                "key": np.array(arrays["rng_key"][i], dtype=np.uint64),
            },
            "buffer": np.array(arrays["rng_buffer"][i], dtype=np.uint64),
            "buffer_pos": int(arrays["rng_buffer_pos"][i]),
            "has_uint32": int(arrays["rng_has_uint32"][i]),
            "uinteger": int(arrays["rng_uinteger"][i]),
        }
        streams.append(np.random.Generator(bit_gen))
    return streams
