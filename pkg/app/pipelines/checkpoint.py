"""Versioned binary checkpoints of the full network state.

Layout (all integers little-endian):

    b"MEDWCKPT"                       8-byte magic
    u32 version                       FORMAT_VERSION
    u32 header_len
    header                            UTF-8 JSON, sorted keys: dims, step, dt, progress, arrays[name, dtype, shape]
    array payloads                    raw C-order bytes, in header order
    sha256                            32-byte digest of everything before it

`progress` is the training position (schedule, next batch and image, finished batch
summaries) for checkpoints written by the training pipeline, null otherwise.

Saving the same state twice produces identical bytes.
"""

import hashlib
import json
import logging
import struct
from pathlib import Path

import numpy as np

from app.core.rng import restore_streams, stream_state_arrays
from app.devices.neuron import NeuronParams
from app.network.engine import Network, SnnParams, Topology, TopologyError

logger = logging.getLogger(__name__)

MAGIC = b"MEDWCKPT"
FORMAT_VERSION = 1
_DIGEST_LEN = 32

_STATE_ARRAYS = (
    ("weights", "<f8"),
    ("membrane", "<f8"),
    ("refractory_until", "<f8"),
    ("theta", "<f8"),
    ("fired_count", "<i8"),
    ("pending_inhibition", "|b1"),
    ("pre_trace", "<f8"),
    ("post_trace", "<f8"),
    ("activity", "<f8"),
)


class CheckpointError(ValueError):
    """Unreadable checkpoint: wrong magic or version, or failed checksum."""


def _encode(net: Network, progress: dict | None) -> bytes:
    arrays = [(name, np.ascontiguousarray(getattr(net, name), dtype=dtype)) for name, dtype in _STATE_ARRAYS]
    arrays += [(name, np.ascontiguousarray(arr)) for name, arr in stream_state_arrays(net.streams).items()]
    header = {
        "dims": {"n_input": net.topology.n_input, "n_exc": net.topology.n_exc},
        "step": net.step,
        "dt": net.params.dt,
        "progress": progress,
        "arrays": [{"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape)} for name, arr in arrays],
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = MAGIC + struct.pack("<II", FORMAT_VERSION, len(header_bytes)) + header_bytes
    body += b"".join(arr.tobytes(order="C") for _, arr in arrays)
    return body + hashlib.sha256(body).digest()


def save_checkpoint(net: Network, path: Path, progress: dict | None = None) -> dict:
    """Returns: {"path": str, "bytes": int, "sha256": str}"""
    data = _encode(net, progress)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    digest = data[-_DIGEST_LEN:].hex()
    logger.info(f"checkpoint saved: {path} ({len(data)} bytes, step {net.step})")
    return {"path": str(path), "bytes": len(data), "sha256": digest}


def read_checkpoint(path: Path) -> tuple[dict, dict[str, np.ndarray]]:
    """Parse and verify a checkpoint. Returns (header, arrays)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    data = path.read_bytes()
    fixed = len(MAGIC) + 8
    if len(data) < fixed + _DIGEST_LEN or data[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path.name}: not a checkpoint file")
    version, header_len = struct.unpack("<II", data[len(MAGIC) : fixed])
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path.name}: version mismatch, file has {version}, expected {FORMAT_VERSION}")
    body, digest = data[:-_DIGEST_LEN], data[-_DIGEST_LEN:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError(f"{path.name}: checksum mismatch, file is corrupt")

    header = json.loads(body[fixed : fixed + header_len].decode("utf-8"))
    arrays = {}
    offset = fixed + header_len
    for spec in header["arrays"]:
        dtype = np.dtype(spec["dtype"])
        shape = tuple(spec["shape"])
        size = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        chunk = body[offset : offset + size]
        if len(chunk) != size:
            raise CheckpointError(f"{path.name}: payload shorter than header declares")
        arrays[spec["name"]] = np.frombuffer(chunk, dtype=dtype).reshape(shape).copy()
        offset += size
    if offset != len(body):
        raise CheckpointError(f"{path.name}: {len(body) - offset} unexpected bytes after payload")
    return header, arrays


def load_training_checkpoint(
    path: Path, topology: Topology, params: SnnParams, neuron: NeuronParams
) -> tuple[Network, dict | None]:
    """Rebuild a network from `path` and return it with the stored training position."""
    header, arrays = read_checkpoint(path)
    dims = header["dims"]
    if (dims["n_input"], dims["n_exc"]) != (topology.n_input, topology.n_exc):
        raise TopologyError(
            f"checkpoint has {dims['n_input']}x{dims['n_exc']} network, config expects "
            f"{topology.n_input}x{topology.n_exc}"
        )
    if header["dt"] != params.dt:
        logger.warning(f"checkpoint dt {header['dt']} differs from config dt {params.dt}")
    net = Network(
        topology=topology,
        params=params,
        neuron=neuron,
        streams=restore_streams(arrays),
        step=int(header["step"]),
        **{name: arrays[name] for name, _ in _STATE_ARRAYS},
    )
    logger.info(f"checkpoint loaded: {Path(path).name} (step {net.step})")
    return net, header.get("progress")


def load_checkpoint(path: Path, topology: Topology, params: SnnParams, neuron: NeuronParams) -> Network:
    """Rebuild a network from `path`; dimensions must match `topology`."""
    return load_training_checkpoint(path, topology, params, neuron)[0]
