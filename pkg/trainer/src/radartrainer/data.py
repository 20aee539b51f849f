"""Readers for the annotation pipeline's on-disk dataset formats.

The trainer talks to the dataset only through its published files: the
JSON-lines index, float32 power-grid stacks with a one-line text header,
8-bit PNG label grids, and the `target_id,weight` loss-weight table. No
code is shared with the pipeline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image


def load_index(dataset_dir) -> list[dict]:
    records = []
    for line in (Path(dataset_dir) / "index.jsonl").read_text().splitlines():
        line = line.strip()
        if line:
            records.append(json.loads(line))
    return records


def load_dataset_meta(dataset_dir) -> dict:
    return json.loads((Path(dataset_dir) / "dataset.json").read_text())


def load_split_ids(dataset_dir, split: str) -> list[str]:
    path = Path(dataset_dir) / "splits" / f"{split}.txt"
    return [l.strip() for l in path.read_text().splitlines() if l.strip()]


def load_label_grid(path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("L"), dtype=np.uint8)


def save_label_grid(labels: np.ndarray, path) -> None:
    Image.fromarray(np.asarray(labels, dtype=np.uint8), mode="L").save(
        Path(path), format="PNG")


def load_float_grid(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.readline().decode("ascii").split()
        if not head or head[0] != "f32grid":
            raise ValueError(f"{path}: not a float grid file")
        rows, cols = int(head[1]), int(head[2])
        return np.frombuffer(fh.read(4 * rows * cols),
                             dtype="<f4").reshape(rows, cols)


def load_weights(path, num_classes: int) -> np.ndarray:
    vals = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        idx, w = line.split(",")
        vals[int(idx)] = float(w)
    return np.array([vals[i] for i in range(num_classes)], dtype=np.float32)


@dataclass
class Sample:
    item_id: str
    stack: np.ndarray   # (3, N, N) float32
    labels: np.ndarray  # (N, N) uint8


class GridDataset:
    """All samples of a dataset (optionally restricted to a split),
    normalized so every stack's peak power is 1."""

    def __init__(self, dataset_dir, split: str | None = None):
        self.root = Path(dataset_dir)
        index = load_index(self.root)
        if split is not None:
            wanted = set(load_split_ids(self.root, split))
            index = [r for r in index if r["item"] in wanted]
        if not index:
            raise ValueError("dataset selection is empty")
        self.records = index

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i: int) -> Sample:
        rec = self.records[i]
        stack = np.stack([load_float_grid(self.root / rel)
                          for rel in rec["files"]["stack"]])
        peak = float(stack.max())
        if peak > 0:
            stack = stack / peak
        labels = load_label_grid(self.root / rec["files"]["label_cart"])
        return Sample(item_id=rec["item"], stack=stack.astype(np.float32),
                      labels=labels)
