"""From-scratch multinomial softmax classifier and the end-to-end protocol.

The model is deliberately minimal: raw intensities scaled to [0, 1], a dense
weight matrix per class, mini-batch gradient descent on the cross-entropy
with optional L2 on the weights. Everything is seeded and single-threaded so
a (dataset, config) pair always produces bit-identical parameters.

Model file format (all integers and reals little-endian)::

    magic  b"PBSM"
    u32    format version (1)
    u32    class_count
    u32    feature_count
    u32    width, u32 height, u32 channels
    f64 *  weights, class_count x feature_count row-major
    f64 *  bias, class_count

``run_training_protocol`` replays the full train-on-corrupted /
test-on-69-groups experiment on an in-memory dataset and returns one
accuracy vector per training condition.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, FormatError, StructureError
from .raster import (
    GROUP_CHANNEL_TRAINER,
    LabeledDataset,
    RasterImage,
    SeedSpec,
    load_png,
    sample_indices,
)
from .report import ClassifierRun, PredictionRecord
from .suite import SuiteManifest, corrupt_dataset, enumerate_groups, group_by_name, parse_group_name

MODEL_MAGIC = b"PBSM"
MODEL_FORMAT_VERSION = 1

# Training-set corruption must not reuse the exact noise realizations of the
# test suite, so its master seed is salted with this constant.
TRAIN_SEED_SALT = 0x7065727475726201


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 40
    l2: float = 1e-4
    batch_size: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.epochs < 0 or self.batch_size <= 0:
            raise DomainError("learning rate and batch size must be positive, epochs >= 0")
        if self.l2 < 0:
            raise DomainError("l2 penalty must be >= 0")


@dataclass(frozen=True)
class SoftmaxModel:
    weights: np.ndarray  # (classes, features) float64
    bias: np.ndarray     # (classes,) float64
    width: int
    height: int
    channels: int

    @property
    def class_count(self) -> int:
        return self.weights.shape[0]

    @property
    def feature_count(self) -> int:
        return self.weights.shape[1]


def _features(images: tuple[RasterImage, ...] | list[RasterImage]) -> np.ndarray:
    stack = np.stack([img.to_array() for img in images])
    return stack.reshape(stack.shape[0], -1).astype(np.float64) / 255.0


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def loss_and_grads(
    weights: np.ndarray,
    bias: np.ndarray,
    x: np.ndarray,
    labels: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus 0.5*l2*||W||^2, with analytic gradients."""
    m = x.shape[0]
    probs = _softmax(x @ weights.T + bias)
    eps = 1e-300  # guards log(0) for saturated wrong predictions
    ce = -np.log(probs[np.arange(m), labels] + eps).mean()
    loss = ce + 0.5 * l2 * float((weights * weights).sum())
    delta = probs
    delta[np.arange(m), labels] -= 1.0
    grad_w = delta.T @ x / m + l2 * weights
    grad_b = delta.sum(axis=0) / m
    return float(loss), grad_w, grad_b


def train(dataset: LabeledDataset, cfg: TrainConfig) -> SoftmaxModel:
    """Mini-batch gradient descent; bit-reproducible for a fixed config."""
    if len(set(dataset.labels)) < 2:
        raise DomainError("training requires at least 2 distinct classes")
    first = dataset.images[0]
    x = _features(dataset.images)
    y = np.asarray(dataset.labels, dtype=np.int64)
    n_classes = len(dataset.class_names)
    n_features = x.shape[1]

    seeds = SeedSpec(cfg.seed)
    init_rng = seeds.stream(GROUP_CHANNEL_TRAINER, 0, 0)
    shuffle_rng = seeds.stream(GROUP_CHANNEL_TRAINER, 0, 1)
    weights = init_rng.standard_normal((n_classes, n_features)) * 0.01
    bias = np.zeros(n_classes)

    for _ in range(cfg.epochs):
        order = shuffle_rng.permutation(len(dataset))
        for start in range(0, len(dataset), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            _, grad_w, grad_b = loss_and_grads(weights, bias, x[batch], y[batch], cfg.l2)
            weights -= cfg.learning_rate * grad_w
            bias -= cfg.learning_rate * grad_b

    return SoftmaxModel(
        weights=weights, bias=bias,
        width=first.width, height=first.height, channels=first.channels,
    )


def predict_batch(model: SoftmaxModel, x: np.ndarray) -> np.ndarray:
    """Argmax of the logits; ties resolve to the lower class index."""
    logits = x @ model.weights.T + model.bias
    return logits.argmax(axis=1)


def predict(model: SoftmaxModel, image: RasterImage) -> int:
    if (image.width, image.height, image.channels) != (model.width, model.height, model.channels):
        raise StructureError(
            f"image is {image.width}x{image.height}x{image.channels}, model expects "
            f"{model.width}x{model.height}x{model.channels}"
        )
    return int(predict_batch(model, _features([image]))[0])


def evaluate_arrays(
    model: SoftmaxModel,
    dataset: LabeledDataset,
    group_id: int,
) -> tuple[float, list[PredictionRecord]]:
    """Accuracy percent plus one prediction record per image."""
    first = dataset.images[0]
    if (first.width, first.height, first.channels) != (model.width, model.height, model.channels):
        raise StructureError(
            f"group {group_id}: images are {first.width}x{first.height}x{first.channels}, "
            f"model expects {model.width}x{model.height}x{model.channels}"
        )
    preds = predict_batch(model, _features(dataset.images))
    records = [
        PredictionRecord(group_id=group_id, image_index=i,
                         true_label=int(t), predicted_label=int(p))
        for i, (t, p) in enumerate(zip(dataset.labels, preds))
    ]
    # same arithmetic as the CSV ingestion path, so round trips are exact
    correct = int((preds == np.asarray(dataset.labels)).sum())
    return 100.0 * correct / len(records), records


def load_group_dir(group_dir: str | Path, class_names: tuple[str, ...]) -> LabeledDataset:
    gdir = Path(group_dir)
    labels_path = gdir / "labels.txt"
    if not labels_path.is_file():
        raise FormatError(f"{gdir}: missing labels.txt")
    with open(labels_path, "r", encoding="utf-8") as fh:
        labels = tuple(int(line) for line in fh if line.strip())
    images = tuple(load_png(str(gdir / f"{i}.png")) for i in range(len(labels)))
    return LabeledDataset(images=images, labels=labels, class_names=class_names)


def evaluate_group_dir(
    model: SoftmaxModel, group_dir: str | Path, group_id: int, class_names: tuple[str, ...]
) -> tuple[float, list[PredictionRecord]]:
    return evaluate_arrays(model, load_group_dir(group_dir, class_names), group_id)


def evaluate_suite(
    model: SoftmaxModel, manifest: SuiteManifest, suite_dir: str | Path
) -> tuple[dict[int, float], list[PredictionRecord]]:
    """Accuracy for every group in the manifest plus the flat prediction list."""
    accuracies: dict[int, float] = {}
    records: list[PredictionRecord] = []
    base = Path(suite_dir)
    for spec in manifest.groups:
        acc, recs = evaluate_group_dir(
            model, base / manifest.group_dir_name(spec), spec.group_id,
            manifest.source.class_names,
        )
        accuracies[spec.group_id] = acc
        records.extend(recs)
    return accuracies, records


def gradient_check(
    model: SoftmaxModel,
    dataset: LabeledDataset,
    l2: float = 1e-4,
    samples: int = 32,
    step: float = 1e-5,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Checks ``samples`` randomly chosen weight entries plus every bias entry.
    The error scale is floored at 1e-4 so near-zero entries, whose central
    differences bottom out at float64 cancellation noise (~1e-10 absolute),
    do not drown the signal; a genuinely wrong gradient term still exceeds
    any sane tolerance by orders of magnitude.
    """
    x = _features(dataset.images)
    y = np.asarray(dataset.labels, dtype=np.int64)
    weights = model.weights.copy()
    bias = model.bias.copy()
    _, grad_w, grad_b = loss_and_grads(weights, bias, x, y, l2)

    rng = SeedSpec(seed).stream(GROUP_CHANNEL_TRAINER, 0, 2)
    flat_idx = rng.choice(weights.size, size=min(samples, weights.size), replace=False)
    worst = 0.0

    def rel_err(analytic: float, numeric: float) -> float:
        scale = max(abs(analytic), abs(numeric), 1e-4)
        return abs(analytic - numeric) / scale

    for idx in flat_idx:
        r, c = divmod(int(idx), weights.shape[1])
        keep = weights[r, c]
        weights[r, c] = keep + step
        up, _, _ = loss_and_grads(weights, bias, x, y, l2)
        weights[r, c] = keep - step
        down, _, _ = loss_and_grads(weights, bias, x, y, l2)
        weights[r, c] = keep
        worst = max(worst, rel_err(grad_w[r, c], (up - down) / (2 * step)))
    for j in range(bias.size):
        keep = bias[j]
        bias[j] = keep + step
        up, _, _ = loss_and_grads(weights, bias, x, y, l2)
        bias[j] = keep - step
        down, _, _ = loss_and_grads(weights, bias, x, y, l2)
        bias[j] = keep
        worst = max(worst, rel_err(grad_b[j], (up - down) / (2 * step)))
    return worst


def save_model(model: SoftmaxModel, path: str | Path) -> None:
    header = MODEL_MAGIC + struct.pack(
        "<6I",
        MODEL_FORMAT_VERSION,
        model.class_count,
        model.feature_count,
        model.width,
        model.height,
        model.channels,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(model.weights, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.bias, dtype="<f8").tobytes())


def load_model(path: str | Path) -> SoftmaxModel:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4 + 24 or raw[:4] != MODEL_MAGIC:
        raise FormatError(f"{path}: not a model file")
    version, classes, features, width, height, channels = struct.unpack("<6I", raw[4:28])
    if version != MODEL_FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported model format version {version}")
    expected = 28 + 8 * (classes * features + classes)
    if len(raw) != expected:
        raise FormatError(f"{path}: length {len(raw)}, expected {expected}")
    if features != width * height * channels:
        raise FormatError(f"{path}: feature count {features} != {width}x{height}x{channels}")
    floats = np.frombuffer(raw, dtype="<f8", offset=28)
    weights = floats[: classes * features].reshape(classes, features).astype(np.float64)
    bias = floats[classes * features:].astype(np.float64)
    return SoftmaxModel(weights=weights, bias=bias, width=width, height=height, channels=channels)


# The nine training conditions of the replication protocol: clean plus eight
# corrupted variants covering single- and two-factor noise and rotation.
PROTOCOL_TRAIN_GROUPS = (
    "clean",
    "SP0.1",
    "GA0.1",
    "SP0.1GA0.1",
    "GA0.1SP0.1",
    "SP0.1RL30",
    "SP0.1RR30",
    "RL30",
    "RR30",
)


def make_training_set(
    pool: LabeledDataset, training_group: str, master_seed: int
) -> LabeledDataset:
    """Corrupt a training pool with one named chain, on the salted seed."""
    chain = parse_group_name(training_group)
    if len(chain) == 0:
        return pool
    gid = group_by_name(training_group).group_id
    seeds = SeedSpec(master_seed ^ TRAIN_SEED_SALT)
    return corrupt_dataset(pool, chain, seeds, gid)


def run_training_protocol(
    pool: LabeledDataset,
    master_seed: int,
    n_train: int,
    n_test: int,
    cfg: TrainConfig,
    train_groups: tuple[str, ...] = PROTOCOL_TRAIN_GROUPS,
    classifier_name: str = "softmax",
) -> list[ClassifierRun]:
    """Train one model per training condition and score each on all 69 groups.

    Train and test images are disjoint windows of a seeded shuffle of the
    pool. The 69 corrupted test views are built once and shared by every
    model.
    """
    seeds = SeedSpec(master_seed)
    train_idx = sample_indices(len(pool), n_train, seeds, skip=0)
    test_idx = sample_indices(len(pool), n_test, seeds, skip=n_train)
    train_base = pool.subset(train_idx)
    test_base = pool.subset(test_idx)

    test_groups = {
        spec.group_id: corrupt_dataset(test_base, spec.chain, seeds, spec.group_id)
        for spec in enumerate_groups()
    }

    runs: list[ClassifierRun] = []
    for group_name in train_groups:
        train_set = make_training_set(train_base, group_name, master_seed)
        model = train(train_set, cfg)
        accuracies = {
            gid: evaluate_arrays(model, grp, gid)[0] for gid, grp in test_groups.items()
        }
        runs.append(
            ClassifierRun(
                classifier_name=classifier_name,
                training_group=group_name,
                accuracies=accuracies,
            )
        )
    return runs
