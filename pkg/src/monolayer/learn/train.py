"""Training loop, train/test degradation grid and checkpoint I/O."""
import csv
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import __version__
from ..degrade import LEVELS, DegradationSpec, canonical_kind, degrade_batch
from ..m6 import PARAM_NAMES
from .data import DatasetSpec, Split, Splits, load_dataset
from .model import ModelSpec, ModelState, cross_entropy, init_model, logits, loss_grads_logits
from .optim import adam_step

log = logging.getLogger(__name__)

HISTORY_FIELDS = ("epoch", "loss", "val_loss", "acc", "val_acc") + PARAM_NAMES
EVAL_CHUNK = 500


class TrainingError(FloatingPointError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    dataset: DatasetSpec
    top: str = "m6"
    hidden: int = 64
    lr: float = 0.001
    epochs: int = 100
    batch: int = 128
    seed: int = 0
    kind: str = "scale"
    train_level: str = "d0"
    encoding: str = "rgb"

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.batch < 1:
            raise ValueError("batch must be at least 1")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        if self.train_level not in LEVELS:
            raise ValueError(f"unknown level {self.train_level!r}")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["dataset"] = DatasetSpec(**d["dataset"])
        return cls(**d)

    def to_dict(self):
        return asdict(self)

    def hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def model_spec_for(config, x, classes):
    return ModelSpec(top=config.top, hidden=config.hidden, classes=classes,
                     input_shape=x.shape[1:], encoding=config.encoding)


# split-specific offsets keep airlight draws of train/val/test images apart
_SPLIT_SEED = {"train": 0, "val": 1, "test": 2}


def degrade_splits(splits, kind, level, seed):
    def one(name, split):
        spec = DegradationSpec(kind, level, rng_seed=seed * 3 + _SPLIT_SEED[name])
        return Split(degrade_batch(split.x, spec, keep_channels=True), split.y)

    return Splits(*(one(name, s) for name, s in zip(Splits._fields, splits)))


def evaluate(spec, state, x, y):
    """(accuracy, mean cross-entropy) over a dataset, in fixed-size chunks."""
    correct, total_loss = 0, 0.0
    for start in range(0, len(x), EVAL_CHUNK):
        out = logits(spec, state, x[start:start + EVAL_CHUNK])
        yb = y[start:start + EVAL_CHUNK]
        correct += int((out.argmax(axis=1) == yb).sum())
        total_loss += cross_entropy(out, yb, reduction="sum")
    return correct / len(x), total_loss / len(x)


def train(config, splits=None, classes=None):
    """Train one model from scratch on the ``train_level`` degradation.

    Returns ``(spec, state, history)``; history rows carry the per-epoch
    loss/accuracy pairs and the M6 parameters (NaN for conv tops).
    """
    if splits is None:
        splits = degrade_splits(load_dataset(config.dataset, config.seed), config.kind, config.train_level, config.seed)
    train_set, val_set = splits.train, splits.val
    if classes is None:
        classes = int(max(train_set.y.max(), val_set.y.max(), splits.test.y.max())) + 1
    spec = model_spec_for(config, train_set.x, max(classes, 2))
    state = init_model(spec, config.seed)
    rng = np.random.default_rng([config.seed, 1])
    history = []
    n = len(train_set.x)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        loss_sum, correct = 0.0, 0
        for b, start in enumerate(range(0, n, config.batch)):
            idx = order[start:start + config.batch]
            xb, yb = train_set.x[idx], train_set.y[idx]
            try:
                loss, grads, out = loss_grads_logits(spec, state.params, xb, yb)
            except FloatingPointError as exc:
                raise TrainingError(f"epoch {epoch}, batch {b}: {exc}") from exc
            if not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise TrainingError(f"epoch {epoch}, batch {b}: non-finite gradient")
            loss_sum += loss * len(idx)
            correct += int((out.argmax(axis=1) == yb).sum())
            state = adam_step(state, grads, config.lr)
            if not all(np.all(np.isfinite(p)) for p in state.params.values()):
                raise TrainingError(f"epoch {epoch}, batch {b}: non-finite parameters after update")
        val_acc, val_loss = evaluate(spec, state, val_set.x, val_set.y) if len(val_set.x) else (float("nan"),) * 2
        m6 = state.params["m6"] if "m6" in state.params else np.full(4, np.nan)
        row = dict(epoch=epoch, loss=float(loss_sum / n), val_loss=float(val_loss), acc=correct / n, val_acc=val_acc,
                   **dict(zip(PARAM_NAMES, (float(v) for v in m6))))
        history.append(row)
        log.info("epoch %d loss %.4f acc %.4f val_loss %.4f val_acc %.4f", epoch, row["loss"], row["acc"],
                 val_loss, val_acc)
    return spec, state, history


@dataclass
class GridResult:
    kind: str
    top: str
    matrix: list  # matrix[train_level][test_level] of test accuracies
    seed: int
    config_hash: str
    hidden: int
    levels: tuple = LEVELS
    meta: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def write(self, directory):
        directory = Path(directory)
        (directory / "grid.json").write_text(self.to_json() + "\n")
        with (directory / "grid.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["train\\test", *self.levels])
            for lvl, row in zip(self.levels, self.matrix):
                w.writerow([lvl, *(f"{v:.6f}" for v in row)])


def run_grid(kind, config, splits=None):
    """Train one fresh model per training level and test it on every level."""
    kind = canonical_kind(kind)
    config = replace(config, kind=kind)
    if splits is None:
        splits = load_dataset(config.dataset, config.seed)
    classes = int(max(splits.train.y.max(), splits.val.y.max(), splits.test.y.max())) + 1
    degraded = {lvl: degrade_splits(splits, kind, lvl, config.seed) for lvl in LEVELS}
    matrix = []
    for train_lvl in LEVELS:
        spec, state, _ = train(replace(config, train_level=train_lvl), degraded[train_lvl], classes)
        row = [evaluate(spec, state, degraded[t].test.x, degraded[t].test.y)[0] for t in LEVELS]
        log.info("%s %s train=%s test accuracies %s", config.top, kind, train_lvl, row)
        matrix.append(row)
    return GridResult(kind=kind, top=config.top, matrix=matrix, seed=config.seed,
                      config_hash=config.hash(), hidden=config.hidden,
                      meta={"version": __version__, "epochs": config.epochs, "n_train": len(splits.train.x),
                            "n_test": len(splits.test.x)})


def _cell(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "" if np.isnan(v) else repr(v)


def write_history(history, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=HISTORY_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in history:
            w.writerow({k: _cell(v) for k, v in row.items()})


# -- checkpoints: JSON header + one blob of little-endian float64 -------------

def save_checkpoint(directory, spec, state, meta=None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    arrays, blobs, offset = [], [], 0
    for group, tensors in (("params", state.params), ("m", state.m), ("v", state.v)):
        for name in sorted(tensors):
            a = np.ascontiguousarray(tensors[name], dtype="<f8")
            arrays.append({"group": group, "name": name, "shape": list(a.shape), "offset": offset})
            blobs.append(a.tobytes())
            offset += a.size
    header = {"format": "monolayer-checkpoint/1", "spec": asdict(spec), "step": state.step,
              "arrays": arrays, "meta": meta or {}}
    (directory / "weights.f64").write_bytes(b"".join(blobs))
    (directory / "model.json").write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    digest = hashlib.sha256()
    for name in ("model.json", "weights.f64"):
        digest.update((directory / name).read_bytes())
    return digest.hexdigest()


def load_checkpoint(directory):
    directory = Path(directory)
    header = json.loads((directory / "model.json").read_text())
    flat = np.frombuffer((directory / "weights.f64").read_bytes(), dtype="<f8")
    groups = {"params": {}, "m": {}, "v": {}}
    for entry in header["arrays"]:
        size = int(np.prod(entry["shape"])) if entry["shape"] else 1
        groups[entry["group"]][entry["name"]] = flat[entry["offset"]:entry["offset"] + size].reshape(entry["shape"]).copy()
    spec_d = header["spec"]
    spec = ModelSpec(**{**spec_d, "input_shape": tuple(spec_d["input_shape"])})
    return spec, ModelState(groups["params"], groups["m"], groups["v"], header["step"])
