"""Evaluation pipeline: label neurons on held-out training images, classify the test set."""

import logging
from pathlib import Path

import numpy as np

from app.core.config import SimConfig
from app.learning.evaluation import evaluate, label_neurons
from app.network.engine import Network
from app.pipelines.checkpoint import load_checkpoint
from app.pipelines.exporter import write_confusion_csv, write_metrics_csv, write_predictions_csv, write_summary
from app.pipelines.idx import MnistSet, select_per_class, select_test
from app.pipelines.train import load_test_set, load_train_set, network_from_config

logger = logging.getLogger(__name__)


def labeling_subset(cfg: SimConfig, train: MnistSet) -> MnistSet:
    """The `label_samples_per_class` images of each class right after the training images."""
    picked = select_per_class(
        train.labels,
        cfg.schedule.classes,
        cfg.evaluation.label_samples_per_class,
        offset=cfg.schedule.images_per_class,
    )
    return train.subset(np.sort(np.concatenate(list(picked.values()))))


def run_evaluation(
    cfg: SimConfig,
    out_dir: Path,
    checkpoint: Path | None = None,
    untrained: bool = False,
    network: Network | None = None,
    train_set: MnistSet | None = None,
    test_set: MnistSet | None = None,
) -> dict:
    """Label, classify and write metrics.csv, predictions.csv, confusion.csv and summary.txt.

    Returns: {"accuracy", "per_class", "abstentions", "samples", "assigned_neurons", "source", "metrics_path"}
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if network is not None:
        net, source = network, "network"
    elif untrained:
        net, source = network_from_config(cfg), "untrained"
    else:
        checkpoint = Path(checkpoint) if checkpoint is not None else cfg.output.dir / "checkpoint.ckpt"
        net, source = load_checkpoint(checkpoint, cfg.topology, cfg.snn, cfg.neuron), checkpoint.name

    train_set = train_set if train_set is not None else load_train_set(cfg)
    test_set = test_set if test_set is not None else load_test_set(cfg)

    labeling = labeling_subset(cfg, train_set)
    if len(labeling) == 0:
        raise ValueError("no labeling images left after the training images; lower images_per_class")
    testing = test_set.subset(select_test(test_set.labels, cfg.schedule.classes, cfg.evaluation.test_samples))
    if len(testing) == 0:
        raise ValueError(f"test set has no images of classes {list(cfg.schedule.classes)}")

    labels = label_neurons(net, labeling.images, labeling.labels, cfg.encoding)
    result = evaluate(net, labels, testing.images, testing.labels, cfg.encoding, log_every=cfg.output.log_every)
    net.close()

    metrics_path = write_metrics_csv(result, out_dir / "metrics.csv")
    write_confusion_csv(result, out_dir / "confusion.csv")
    write_predictions_csv(result, out_dir / "predictions.csv")
    lines = {
        "source": source,
        "rule": cfg.rule,
        "seed": cfg.seed,
        "classes": " ".join(str(c) for c in result.classes),
        "samples": result.n_samples,
        "accuracy": f"{result.accuracy:.4f}",
        "abstentions": result.abstentions,
        "abstention_rate": f"{result.abstentions / result.n_samples:.4f}",
        "assigned_neurons": f"{labels.assigned}/{labels.labels.size}",
    }
    for c in result.classes:
        lines[f"accuracy_class_{c}"] = f"{result.per_class[c]:.4f}"
    write_summary(lines, out_dir / "summary.txt")

    return {
        "accuracy": result.accuracy,
        "per_class": result.per_class,
        "abstentions": result.abstentions,
        "samples": result.n_samples,
        "assigned_neurons": labels.assigned,
        "source": source,
        "metrics_path": str(metrics_path),
    }
