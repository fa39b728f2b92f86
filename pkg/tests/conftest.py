"""Test fixtures."""

import numpy as np
import pytest
import yaml

from app.pipelines.idx import write_idx_images, write_idx_labels

# 28x28 stripe patterns, one per synthetic class
_PATTERNS = {
    0: (slice(4, 10), slice(4, 24)),  # horizontal bar, top
    1: (slice(2, 26), slice(12, 17)),  # vertical bar
    2: (slice(18, 24), slice(4, 24)),  # horizontal bar, bottom
}


def synthetic_digits(n_per_class: int, classes=(0, 1, 2), seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Interleaved bar images with light pixel dropout, shape (n, 28, 28) uint8."""
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for i in range(n_per_class):
        for c in classes:
            img = np.zeros((28, 28), dtype=np.uint8)
            rows, cols = _PATTERNS[c]
            img[rows, cols] = 255
            img[rng.random((28, 28)) < 0.05] = 0
            images.append(img)
            labels.append(c)
    return np.stack(images), np.asarray(labels, dtype=np.uint8)


@pytest.fixture
def tmp_ledger(tmp_path):
    """Fresh run-ledger database in tmp_path."""
    from app.core.db import get_session, init_db, reset_engine

    reset_engine()
    db_path = tmp_path / "ledger.sqlite"
    init_db(db_path)
    session = get_session(db_path)

    yield db_path

    session.close()
    reset_engine()


@pytest.fixture
def mnist_dir(tmp_path):
    """Synthetic train/test IDX files (3 classes) under tmp_path/mnist."""
    d = tmp_path / "mnist"
    train_x, train_y = synthetic_digits(20, seed=1)
    test_x, test_y = synthetic_digits(6, seed=2)
    write_idx_images(train_x, d / "train-images-idx3-ubyte")
    write_idx_labels(train_y, d / "train-labels-idx1-ubyte")
    write_idx_images(test_x, d / "t10k-images-idx3-ubyte")
    write_idx_labels(test_y, d / "t10k-labels-idx1-ubyte")
    return d


@pytest.fixture
def small_config(tmp_path, mnist_dir):
    """Path to a small, fast run config over the synthetic dataset."""
    from app.core.db import reset_engine

    reset_engine()
    doc = {
        "seed": 3,
        "topology": {"n_exc": 4},
        "encoding": {"presentation_time": 0.05, "rest_time": 0.01},
        "snn": {"input_gain": 0.05},
        "plasticity": {"rule": "asp", "lambda_base": 0.01},
        "data": {
            "train_images": str(mnist_dir / "train-images-idx3-ubyte"),
            "train_labels": str(mnist_dir / "train-labels-idx1-ubyte"),
            "test_images": str(mnist_dir / "t10k-images-idx3-ubyte"),
            "test_labels": str(mnist_dir / "t10k-labels-idx1-ubyte"),
        },
        "schedule": {"classes": [0, 1, 2], "images_per_class": 3},
        "evaluation": {"label_samples_per_class": 2, "test_samples": 6},
        "output": {
            "dir": str(tmp_path / "out"),
            "ledger_path": str(tmp_path / "ledger.sqlite"),
            "grid_cols": 2,
            "log_every": 0,
        },
    }
    path = tmp_path / "small.yaml"
    path.write_text(yaml.safe_dump(doc), encoding="utf-8")
    yield path
    reset_engine()


@pytest.fixture
def cfg(small_config):
    from app.core.config import load_config

    return load_config(small_config)
