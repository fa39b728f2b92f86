"""Unsupervised readout: label neurons by their strongest class, classify by summed votes.

Evaluation runs with plasticity and threshold adaptation frozen.
"""

import logging
from dataclasses import dataclass

import numpy as np
from sklearn.metrics import accuracy_score, confusion_matrix

from app.network.encoding import EncodingParams
from app.network.engine import Network, run_presentation

logger = logging.getLogger(__name__)

UNASSIGNED = -1
ABSTAIN = -1


@dataclass(frozen=True)
class NeuronLabels:
    labels: np.ndarray
    classes: tuple[int, ...]

    @property
    def assigned(self) -> int:
        return int((self.labels != UNASSIGNED).sum())


@dataclass(frozen=True)
class EvaluationResult:
    predictions: np.ndarray
    targets: np.ndarray
    classes: tuple[int, ...]
    accuracy: float
    per_class: dict[int, float]
    abstentions: int
    confusion: np.ndarray

    @property
    def n_samples(self) -> int:
        return int(self.targets.size)


def _frozen_counts(net: Network, image: np.ndarray, enc: EncodingParams) -> np.ndarray:
    """One presentation with learning and adaptation off; its spike events are not kept."""
    mark = net.events.mark()
    _, counts = run_presentation(net, image, enc, hooks=None, adapt=False)
    net.events.truncate(mark)
    return counts


def response_counts(net: Network, images: np.ndarray, enc: EncodingParams) -> np.ndarray:
    """Spike counts (n_samples, n_exc) with learning and adaptation off."""
    counts = np.zeros((len(images), net.topology.n_exc), dtype=np.int64)
    for i, image in enumerate(images):
        counts[i] = _frozen_counts(net, image, enc)
    return counts


def assign_labels(counts: np.ndarray, sample_labels: np.ndarray) -> NeuronLabels:
    """Label each neuron with the class of its highest mean response; silent neurons stay unassigned."""
    sample_labels = np.asarray(sample_labels)
    if sample_labels.size == 0:
        raise ValueError("labeling needs at least one sample")
    classes = tuple(int(c) for c in np.unique(sample_labels))
    means = np.stack([counts[sample_labels == c].mean(axis=0) for c in classes])
    labels = np.asarray(classes, dtype=np.int64)[np.argmax(means, axis=0)]
    labels[counts.sum(axis=0) == 0] = UNASSIGNED
    return NeuronLabels(labels=labels, classes=classes)


def label_neurons(net: Network, images: np.ndarray, sample_labels: np.ndarray, enc: EncodingParams) -> NeuronLabels:
    result = assign_labels(response_counts(net, images, enc), sample_labels)
    logger.info(f"labeled {result.assigned}/{result.labels.size} neurons over classes {list(result.classes)}")
    return result


def predict(counts: np.ndarray, labels: NeuronLabels) -> int:
    """Class whose assigned neurons fired most (lowest id on ties); ABSTAIN on silence."""
    counts = np.asarray(counts)
    if counts.sum() == 0:
        return ABSTAIN
    votes = [counts[labels.labels == c].sum() for c in labels.classes]
    if max(votes) == 0:
        return ABSTAIN
    return int(labels.classes[int(np.argmax(votes))])


def classify(net: Network, labels: NeuronLabels, image: np.ndarray, enc: EncodingParams) -> int:
    return predict(_frozen_counts(net, image, enc), labels)


def score(predictions: np.ndarray, targets: np.ndarray, classes) -> EvaluationResult:
    """Accuracy (abstentions count as errors), per-class accuracy and a confusion matrix.

    The confusion matrix has one row per class and an extra final column for abstentions.
    """
    predictions = np.asarray(predictions, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.int64)
    classes = tuple(int(c) for c in classes)
    per_class = {}
    for c in classes:
        mask = targets == c
        per_class[c] = float((predictions[mask] == c).mean()) if mask.any() else 0.0
    cm = confusion_matrix(targets, predictions, labels=[*classes, ABSTAIN])
    return EvaluationResult(
        predictions=predictions,
        targets=targets,
        classes=classes,
        accuracy=float(accuracy_score(targets, predictions)) if targets.size else 0.0,
        per_class=per_class,
        abstentions=int((predictions == ABSTAIN).sum()),
        confusion=cm[: len(classes)],
    )


def evaluate(
    net: Network,
    labels: NeuronLabels,
    images: np.ndarray,
    targets: np.ndarray,
    enc: EncodingParams,
    log_every: int = 0,
) -> EvaluationResult:
    predictions = np.empty(len(images), dtype=np.int64)
    for i, image in enumerate(images):
        predictions[i] = classify(net, labels, image, enc)
        if log_every and (i + 1) % log_every == 0:
            logger.info(f"  classified {i + 1}/{len(images)}")
    result = score(predictions, targets, labels.classes)
    logger.info(f"accuracy {result.accuracy:.4f} over {result.n_samples} samples ({result.abstentions} abstained)")
    return result
