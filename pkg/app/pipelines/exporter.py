"""Result export: weight-map PGM images, device traces, evaluation metrics."""

import csv
import logging
from pathlib import Path
from typing import Any

import numpy as np

from app.devices.trace import TraceRow
from app.learning.evaluation import ABSTAIN, EvaluationResult

logger = logging.getLogger(__name__)

TILE = 28


class ExportError(ValueError):
    """Weights cannot be laid out as requested."""


def weight_map_pixels(weights: np.ndarray, grid_cols: int, grid_rows: int | None = None) -> np.ndarray:
    """Tile each neuron's 28x28 receptive field row-major into a uint8 image, no padding.

    Pixel = floor(w * 255 + 0.5); tiles past the last neuron stay black.
    """
    weights = np.asarray(weights, dtype=np.float64)
    n_input, n = weights.shape
    if n_input != TILE * TILE:
        raise ExportError(f"weight maps need {TILE * TILE} inputs per neuron (got {n_input})")
    if grid_cols < 1:
        raise ExportError(f"grid_cols must be >= 1 (got {grid_cols})")
    if grid_rows is None:
        grid_rows = -(-n // grid_cols)
    if grid_cols * grid_rows < n:
        raise ExportError(f"grid {grid_cols}x{grid_rows} holds {grid_cols * grid_rows} tiles, need {n}")

    pixels = np.floor(np.clip(weights, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    image = np.zeros((grid_rows * TILE, grid_cols * TILE), dtype=np.uint8)
    for j in range(n):
        r, c = divmod(j, grid_cols)
        image[r * TILE : (r + 1) * TILE, c * TILE : (c + 1) * TILE] = pixels[:, j].reshape(TILE, TILE)
    return image


def export_weight_map(weights: np.ndarray, grid_cols: int, path: Path, grid_rows: int | None = None) -> dict[str, Any]:
    """Write a binary (P5) PGM of the tiled receptive fields.

    Returns: {"path": str, "width": int, "height": int}
    """
    image = weight_map_pixels(weights, grid_cols, grid_rows)
    height, width = image.shape
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(f"P5\n{width} {height}\n255\n".encode("ascii") + image.tobytes())
    logger.info(f"weight map written: {path.name} ({width}x{height})")
    return {"path": str(path), "width": width, "height": height}


def write_trace_csv(rows: list[TraceRow], path: Path) -> Path:
    """Columns: t_s, x_m, value, fired."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["t_s", "x_m", "value", "fired"])
        for r in rows:
            writer.writerow([f"{r.t:.4e}", repr(float(r.x)), repr(float(r.value)), int(r.fired)])
    return path


def write_metrics_csv(result: EvaluationResult, path: Path) -> Path:
    """One row per class plus an "all" row: class, samples, correct, accuracy."""
    path = Path(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["class", "samples", "correct", "accuracy"])
        for c in result.classes:
            mask = result.targets == c
            correct = int((result.predictions[mask] == c).sum())
            writer.writerow([c, int(mask.sum()), correct, f"{result.per_class[c]:.6f}"])
        writer.writerow(
            ["all", result.n_samples, int((result.predictions == result.targets).sum()), f"{result.accuracy:.6f}"]
        )
    return path


def write_predictions_csv(result: EvaluationResult, path: Path) -> Path:
    """One row per test sample: sample, true, predicted, abstained."""
    path = Path(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["sample", "true", "predicted", "abstained"])
        for i, (t, p) in enumerate(zip(result.targets, result.predictions)):
            writer.writerow([i, int(t), int(p), int(p == ABSTAIN)])
    return path


def write_confusion_csv(result: EvaluationResult, path: Path) -> Path:
    """Rows are true classes; columns predicted classes then abstain."""
    path = Path(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["true", *[str(c) for c in result.classes], "abstain"])
        for c, row in zip(result.classes, result.confusion):
            writer.writerow([c, *[int(v) for v in row]])
    return path


def write_summary(lines: dict[str, Any], path: Path) -> Path:
    """Plain `key: value` lines, in insertion order."""
    path = Path(path)
    path.write_text("".join(f"{k}: {v}\n" for k, v in lines.items()), encoding="utf-8")
    return path
