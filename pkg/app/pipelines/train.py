"""Sequential (class-incremental) training pipeline.

Classes are shown one batch at a time in schedule order and never revisited. After each
batch the pipeline writes a weight map and records receptive-field statistics, so the
forgetting of earlier classes can be followed batch by batch.
"""

import json
import logging
from pathlib import Path

import numpy as np

from app.analytics.receptive_fields import class_prototypes, summarize_fields
from app.core.config import SimConfig
from app.learning.rules import make_rule
from app.network.engine import Network, build_network, run_presentation
from app.pipelines.checkpoint import CheckpointError, load_training_checkpoint, save_checkpoint
from app.pipelines.exporter import export_weight_map
from app.pipelines.idx import MnistSet, load_idx, select_per_class

logger = logging.getLogger(__name__)


def network_from_config(cfg: SimConfig) -> Network:
    return build_network(cfg.topology, cfg.snn, cfg.neuron, cfg.seed)


def load_train_set(cfg: SimConfig) -> MnistSet:
    return load_idx(cfg.data.train_images, cfg.data.train_labels)


def load_test_set(cfg: SimConfig) -> MnistSet:
    return load_idx(cfg.data.test_images, cfg.data.test_labels)


def _check_progress(progress: dict | None, cfg: SimConfig, path: Path) -> dict:
    if progress is None:
        raise CheckpointError(f"{Path(path).name}: no training position stored, cannot resume")
    expected = {
        "rule": cfg.rule,
        "seed": cfg.seed,
        "classes": list(cfg.schedule.classes),
        "images_per_class": cfg.schedule.images_per_class,
    }
    for key, value in expected.items():
        if progress.get(key) != value:
            raise CheckpointError(
                f"{Path(path).name}: written for {key}={progress.get(key)!r}, config has {value!r}"
            )
    return progress


def run_training(
    cfg: SimConfig,
    out_dir: Path,
    dataset: MnistSet | None = None,
    resume: Path | None = None,
    max_images: int | None = None,
) -> dict:
    """Train on the class schedule and write weight maps, events.csv, checkpoint and summary.

    `resume` continues from a checkpoint written by an earlier call, appending to its
    events.csv. `max_images` stops after that many presentations; the checkpoint then holds
    the position to resume from. A split run reproduces an uninterrupted one byte for byte.

    Returns: {"rule", "seed", "classes", "images_per_class", "batches": [...], "checkpoint", "steps",
              "mean_weight", "complete", "position": [batch, image], "network": Network}
    """
    if max_images is not None and max_images < 0:
        raise ValueError(f"max_images must be >= 0 (got {max_images})")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = dataset if dataset is not None else load_train_set(cfg)

    start_batch, start_image, carried_spikes, batches = 0, 0, 0, []
    if resume is not None:
        net, progress = load_training_checkpoint(resume, cfg.topology, cfg.snn, cfg.neuron)
        progress = _check_progress(progress, cfg, resume)
        start_batch, start_image = progress["batch"], progress["image"]
        carried_spikes, batches = progress["batch_spikes"], list(progress["batches"])
        logger.info(f"resuming at batch {start_batch}, image {start_image} (step {net.step})")
    else:
        net = network_from_config(cfg)
    if dataset.images.shape[1] != net.topology.n_input:
        n_pixels = dataset.images.shape[1]
        raise ValueError(f"dataset images have {n_pixels} pixels, network expects {net.topology.n_input}")

    classes = cfg.schedule.classes
    rule = make_rule(cfg.rule, cfg.asp)
    selection = select_per_class(dataset.labels, classes, cfg.schedule.images_per_class)
    prototypes = class_prototypes(dataset.images, dataset.labels, classes)
    log_every = cfg.output.log_every

    logger.info(
        f"training {cfg.rule} on classes {list(classes)}, {cfg.schedule.images_per_class} images each, "
        f"{net.topology.n_exc} neurons"
    )
    events_path = out_dir / "events.csv"
    append = resume is not None and events_path.exists()
    budget = max_images
    position = (len(classes), 0)
    spikes = 0
    with open(events_path, "a" if append else "w", newline="") as events:
        net.events.write_csv(events, header=not append)
        net.events.clear()
        for k in range(start_batch, len(classes)):
            cls = classes[k]
            first = start_image if k == start_batch else 0
            spikes = carried_spikes if k == start_batch else 0
            for n in range(first, len(selection[cls])):
                if budget == 0:
                    position = (k, n)
                    break
                _, counts = run_presentation(net, dataset.images[selection[cls][n]], cfg.encoding, hooks=rule)
                spikes += int(counts.sum())
                net.events.write_csv(events)
                net.events.clear()
                if budget is not None:
                    budget -= 1
                if log_every and (n + 1) % log_every == 0:
                    logger.info(f"  class {cls}: {n + 1}/{len(selection[cls])} images")
            if position != (len(classes), 0):
                break

            map_name = f"weights_batch{k}_class{cls}.pgm"
            if net.topology.n_input == 784:
                export_weight_map(net.weights, cfg.output.grid_cols, out_dir / map_name)
            else:
                map_name = None
            fields = summarize_fields(net.weights, prototypes, classes)
            batches.append(
                {
                    "batch": k,
                    "class": cls,
                    "images": int(len(selection[cls])),
                    "excitatory_spikes": spikes,
                    "weight_map": map_name,
                    "mean_weight": fields["mean_weight"],
                    "dominant_counts": fields["dominant_counts"],
                    "mean_similarity": fields["mean_similarity"],
                    "mean_margin": fields["mean_margin"],
                }
            )
            logger.info(
                f"batch {k} (class {cls}): {spikes} spikes, mean weight {fields['mean_weight']:.4f}, "
                f"fields {fields['dominant_counts']}"
            )

    complete = position == (len(classes), 0)
    progress = {
        "rule": cfg.rule,
        "seed": cfg.seed,
        "classes": list(classes),
        "images_per_class": cfg.schedule.images_per_class,
        "batch": position[0],
        "image": position[1],
        "batch_spikes": 0 if complete else spikes,
        "batches": batches,
    }
    ckpt = save_checkpoint(net, out_dir / "checkpoint.ckpt", progress)
    net.close()
    if not complete:
        logger.info(f"stopped at batch {position[0]}, image {position[1]}; resume from {ckpt['path']}")
    summary = {
        "rule": cfg.rule,
        "seed": cfg.seed,
        "classes": list(classes),
        "images_per_class": cfg.schedule.images_per_class,
        "batches": batches,
        "checkpoint": Path(ckpt["path"]).name,
        "checkpoint_sha256": ckpt["sha256"],
        "steps": net.step,
        "mean_weight": float(np.mean(net.weights)),
        "complete": complete,
        "position": list(position),
    }
    (out_dir / "train_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return {**summary, "network": net}
