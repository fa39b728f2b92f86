"""Receptive-field analytics: how closely each neuron's weights match the digit classes."""

import logging

import numpy as np

logger = logging.getLogger(__name__)


def class_prototypes(images: np.ndarray, labels: np.ndarray, classes) -> np.ndarray:
    """Mean image per class scaled to [0, 1], shape (n_classes, n_pixels)."""
    images = np.asarray(images, dtype=np.float64).reshape(len(images), -1)
    rows = []
    for c in classes:
        members = images[np.asarray(labels) == c]
        if len(members) == 0:
            raise ValueError(f"no images of class {c} to build a prototype")
        rows.append(members.mean(axis=0) / 255.0)
    return np.stack(rows)


def field_similarity(weights: np.ndarray, prototypes: np.ndarray) -> np.ndarray:
    """Cosine similarity (n_exc, n_classes) between each weight column and each prototype."""
    from sklearn.metrics.pairwise import cosine_similarity

    return cosine_similarity(np.asarray(weights).T, prototypes)


def summarize_fields(weights: np.ndarray, prototypes: np.ndarray, classes) -> dict:
    """Which class each receptive field resembles most.

    Returns: {"dominant": [class per neuron], "dominant_counts": {class: n}, "mean_similarity": {class: s},
              "mean_margin": float, "mean_weight": float}
    """
    classes = [int(c) for c in classes]
    sim = field_similarity(weights, prototypes)
    order = np.argsort(sim, axis=1)
    best = order[:, -1]
    if sim.shape[1] > 1:
        margin = sim[np.arange(len(sim)), best] - sim[np.arange(len(sim)), order[:, -2]]
    else:
        margin = np.zeros(len(sim))
    dominant = [classes[i] for i in best]
    return {
        "dominant": dominant,
        "dominant_counts": {c: dominant.count(c) for c in classes},
        "mean_similarity": {c: float(sim[:, i].mean()) for i, c in enumerate(classes)},
        "mean_margin": float(margin.mean()),
        "mean_weight": float(np.mean(weights)),
    }
