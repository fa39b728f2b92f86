"""Spike event log with CSV export (t_s, layer, index)."""

import csv
from dataclasses import dataclass
from typing import IO

import numpy as np

LAYERS = ("input", "exc", "inh")


@dataclass(frozen=True)
class SpikeEvent:
    t: float
    layer: str
    index: int


class EventLog:
    """Append-only spike record, stored per step as index arrays.

    Times are derived from the integer step counter, so they are exact multiples of dt.
    """

    def __init__(self, dt: float):
        self.dt = dt
        self._records: list[tuple[int, str, np.ndarray]] = []

    def record(self, step: int, layer: str, indices: np.ndarray) -> None:
        if layer not in LAYERS:
            raise ValueError(f"unknown layer {layer!r}")
        if len(indices):
            self._records.append((step, layer, np.asarray(indices, dtype=np.int64)))

    def __len__(self) -> int:
        return sum(len(idx) for _, _, idx in self._records)

    def count(self, layer: str) -> int:
        return sum(len(idx) for _, lay, idx in self._records if lay == layer)

    def events(self) -> list[SpikeEvent]:
        return [
            SpikeEvent(t=step * self.dt, layer=layer, index=int(i))
            for step, layer, idx in self._records
            for i in idx
        ]

    def mark(self) -> int:
        """Position to pass to `truncate` later."""
        return len(self._records)

    def truncate(self, mark: int) -> None:
        """Drop everything recorded after `mark`."""
        del self._records[mark:]

    def clear(self) -> None:
        self._records.clear()

    def write_csv(self, handle: IO[str], header: bool = False) -> int:
        """Write rows to an open text handle; returns the number of rows written."""
        writer = csv.writer(handle, lineterminator="\n")
        if header:
            writer.writerow(["t_s", "layer", "index"])
        n = 0
        for ev in self.events():
            writer.writerow([f"{ev.t:.9f}", ev.layer, ev.index])
            n += 1
        return n
