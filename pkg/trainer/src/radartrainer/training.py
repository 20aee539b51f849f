"""Training and inference over pipeline datasets.

The loss is a class-weighted cross entropy over all pixels, normalized by
pixel count (not by the weight sum), so each class's contribution scales
linearly with its weight and a zero weight removes its pixels exactly.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .data import GridDataset, Sample, load_dataset_meta, load_weights, \
    save_label_grid
from .network import NetworkConfig, RadarSegNet, build_network

log = logging.getLogger(__name__)

EMPTY = 0


class DataError(ValueError):
    """A target label lies outside the configured class range."""


def weighted_loss(logits: torch.Tensor, target: torch.Tensor,
                  weights: torch.Tensor) -> torch.Tensor:
    """Per-pixel weighted cross entropy, averaged over pixel count."""
    if int(target.max()) >= logits.shape[1]:
        raise DataError(f"label {int(target.max())} outside the "
                        f"{logits.shape[1]}-class taxonomy")
    total = F.cross_entropy(logits, target, weight=weights,
                            reduction="sum")
    return total / target.numel()


def train_step(model: RadarSegNet, stack: torch.Tensor,
               target: torch.Tensor, weights: torch.Tensor,
               optimizer: torch.optim.Optimizer) -> float:
    """One optimization step over a batch; returns the scalar loss."""
    model.train()
    optimizer.zero_grad()
    logits = model(stack)
    loss = weighted_loss(logits, target, weights)
    loss.backward()
    optimizer.step()
    return float(loss.detach())


@torch.no_grad()
def predict(model: RadarSegNet, stack: torch.Tensor) -> np.ndarray:
    """Per-pixel argmax class indices for one (3, N, N) stack."""
    model.eval()
    if stack.ndim == 3:
        stack = stack.unsqueeze(0)
    logits = model(stack)
    return logits.argmax(dim=1).squeeze(0).cpu().numpy().astype(np.uint8)


@dataclass
class FitConfig:
    epochs: int = 200
    batch_size: int = 4
    learning_rate: float = 1e-3
    seed: int = 0
    # stop once the training non-empty accuracy reaches this level
    target_accuracy: float | None = None
    deterministic: bool = True
    # train on all four flip orientations of every item (stack and target
    # flipped together), the deterministic counterpart of random-flip
    # augmentation; accuracy is still tracked on the unflipped originals
    flip_augment: bool = True


def _flip_expand(stacks: torch.Tensor, targets: torch.Tensor):
    xs = [stacks, torch.flip(stacks, [-2]), torch.flip(stacks, [-1]),
          torch.flip(stacks, [-2, -1])]
    ts = [targets, torch.flip(targets, [-2]), torch.flip(targets, [-1]),
          torch.flip(targets, [-2, -1])]
    return torch.cat(xs), torch.cat(ts)


def nonempty_accuracy(pred: np.ndarray, target: np.ndarray) -> float:
    mask = target != EMPTY
    if not mask.any():
        return float("nan")
    return float(np.mean(pred[mask] == target[mask]))


def fit(dataset, out_dir, net_cfg: NetworkConfig | None = None,
        fit_cfg: FitConfig | None = None, split: str | None = None,
        weights_path=None) -> Path:
    """Train on a dataset directory or on a stream of Samples; returns the
    checkpoint path.

    ``dataset`` is either a dataset directory (whose index, grids, and
    optional weights/splits files are read) or any iterable of Sample
    objects, for training straight off an in-memory stream. Writes
    `checkpoint.pt` and a `metrics.jsonl` log (one record per epoch) into
    ``out_dir``.
    """
    net_cfg = net_cfg or NetworkConfig()
    fit_cfg = fit_cfg or FitConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(fit_cfg.seed)
    if fit_cfg.deterministic:
        torch.use_deterministic_algorithms(True, warn_only=True)

    if isinstance(dataset, (str, Path)):
        data = GridDataset(dataset, split=split)
        samples = [data[i] for i in range(len(data))]
        if weights_path is None:
            default = Path(dataset) / "weights.csv"
            weights_path = default if default.exists() else None
    else:
        samples = list(dataset)
        if not samples:
            raise ValueError("sample stream is empty")
    if weights_path is None:
        log.warning("no weights file found; using uniform class weights")
        weights = np.ones(net_cfg.num_classes, dtype=np.float32)
    else:
        weights = load_weights(weights_path, net_cfg.num_classes)
    w = torch.from_numpy(weights)

    model = build_network(net_cfg)
    optimizer = torch.optim.Adam(model.parameters(),
                                 lr=fit_cfg.learning_rate)
    stacks = torch.from_numpy(np.stack([s.stack for s in samples]))
    targets = torch.from_numpy(np.stack([s.labels for s in samples])
                               .astype(np.int64))
    train_x, train_t = (stacks, targets)
    if fit_cfg.flip_augment:
        train_x, train_t = _flip_expand(stacks, targets)

    rng = np.random.default_rng(fit_cfg.seed)
    metrics_path = out / "metrics.jsonl"
    checkpoint_path = out / "checkpoint.pt"
    with open(metrics_path, "w") as metrics:
        for epoch in range(fit_cfg.epochs):
            order = rng.permutation(train_x.shape[0])
            losses = []
            for start in range(0, len(order), fit_cfg.batch_size):
                idx = order[start:start + fit_cfg.batch_size]
                losses.append(train_step(model, train_x[idx], train_t[idx],
                                         w, optimizer))
            acc = np.mean([
                nonempty_accuracy(predict(model, stacks[i]),
                                  samples[i].labels)
                for i in range(len(samples))])
            record = {"epoch": epoch, "loss": float(np.mean(losses)),
                      "nonempty_accuracy": float(acc)}
            metrics.write(json.dumps(record) + "\n")
            metrics.flush()
            if epoch % 20 == 0 or epoch == fit_cfg.epochs - 1:
                log.info("epoch %d: loss %.4f, non-empty acc %.4f",
                         epoch, record["loss"], acc)
            if fit_cfg.target_accuracy is not None \
                    and acc >= fit_cfg.target_accuracy:
                log.info("target accuracy reached at epoch %d", epoch)
                break
    save_checkpoint(model, checkpoint_path)
    return checkpoint_path


def save_checkpoint(model: RadarSegNet, path) -> None:
    torch.save({"config": model.cfg.__dict__,
                "state": model.state_dict()}, path)


def load_checkpoint(path) -> RadarSegNet:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    cfg_dict = dict(payload["config"])
    for key in ("aspp_rates", "encoder_dilations"):
        cfg_dict[key] = tuple(cfg_dict[key])
    model = build_network(NetworkConfig(**cfg_dict))
    model.load_state_dict(payload["state"])
    model.eval()
    return model


def export_predictions(model: RadarSegNet, dataset_dir, out_dir,
                       split: str | None = None) -> int:
    """Write `{item}.png` class grids for every selected item; the files
    are directly scoreable by the pipeline's evaluate command."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = GridDataset(dataset_dir, split=split)
    for i in range(len(data)):
        sample = data[i]
        pred = predict(model, torch.from_numpy(sample.stack))
        save_label_grid(pred, out / f"{sample.item_id}.png")
    return len(data)
