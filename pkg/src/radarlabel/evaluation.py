"""Confusion-matrix evaluation of predicted label grids against targets.

By default only cells that are non-empty in the target are scored, since
the empty class mostly reflects missing weak labels rather than true free
space; a flag includes it. An optional sensing horizon restricts scoring
to cells within a range (polar grids) or radius (Cartesian grids).
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from . import io
from .taxonomy import EMPTY, TARGET_NAMES

log = logging.getLogger(__name__)


def confusion_matrix(target: np.ndarray, pred: np.ndarray, num_classes: int,
                     mask: np.ndarray | None = None) -> np.ndarray:
    """(L, L) counts, rows = true class, columns = predicted class."""
    t = np.asarray(target).reshape(-1).astype(np.int64)
    p = np.asarray(pred).reshape(-1).astype(np.int64)
    if t.shape != p.shape:
        raise ValueError("target and prediction shapes differ")
    if mask is not None:
        m = np.asarray(mask).reshape(-1)
        t, p = t[m], p[m]
    ok = (t >= 0) & (t < num_classes) & (p >= 0) & (p < num_classes)
    flat = t[ok] * num_classes + p[ok]
    counts = np.bincount(flat, minlength=num_classes * num_classes)
    return counts.reshape(num_classes, num_classes)


def row_normalize(cm: np.ndarray) -> np.ndarray:
    """Rows scaled to sum to 1; rows with zero support become NaN."""
    cm = np.asarray(cm, dtype=float)
    sums = cm.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = cm / sums
    out[np.repeat(sums == 0, cm.shape[1], axis=1)] = np.nan
    return out


def horizon_mask(shape: tuple[int, int], kind: str, horizon_m: float,
                 range_resolution: float | None = None,
                 metres_per_pixel: float | None = None) -> np.ndarray:
    """True where a cell lies inside the sensing horizon."""
    if kind == "polar":
        if range_resolution is None:
            raise ValueError("polar horizon needs the range resolution")
        r = (np.arange(shape[1]) + 0.5) * range_resolution
        return np.broadcast_to(r < horizon_m, shape).copy()
    if kind == "cart":
        if metres_per_pixel is None:
            raise ValueError("cartesian horizon needs the pixel size")
        n = shape[0]
        axis = (np.arange(n) - (n - 1) / 2.0) * metres_per_pixel
        rad = np.hypot(axis[:, None], axis[None, :])
        return rad < horizon_m
    raise ValueError(f"unknown grid kind {kind!r}")


def evaluate_grids(pairs, num_classes: int = len(TARGET_NAMES),
                   include_empty: bool = False,
                   mask: np.ndarray | None = None) -> dict:
    """Score (target, prediction) array pairs into one report dict."""
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    for target, pred in pairs:
        m = np.ones(target.shape, dtype=bool) if mask is None else mask.copy()
        if not include_empty:
            m &= target != EMPTY
        cm += confusion_matrix(target, pred, num_classes, mask=m)
    norm = row_normalize(cm)
    support = cm.sum(axis=1)
    total = int(cm.sum())
    correct = int(np.trace(cm))
    per_class = [None if support[i] == 0 else float(norm[i, i])
                 for i in range(num_classes)]
    return {
        "num_classes": num_classes,
        "class_names": TARGET_NAMES[:num_classes],
        "confusion": cm.tolist(),
        "row_normalized": [[None if np.isnan(v) else float(v) for v in row]
                           for row in norm],
        "support": support.tolist(),
        "per_class_accuracy": per_class,
        "overall_accuracy": None if total == 0 else correct / total,
        "scored_cells": total,
    }


def evaluate_dirs(predictions_dir, dataset_dir, kind: str = "cart",
                  horizon_m: float | None = None,
                  include_empty: bool = False) -> dict:
    """Score a directory of `{item}.png` predictions against a dataset."""
    predictions_dir = Path(predictions_dir)
    dataset_dir = Path(dataset_dir)
    meta = io.load_json(dataset_dir / "dataset.json")
    index = io.load_index(dataset_dir / "index.jsonl")
    key = "label_cart" if kind == "cart" else "label_polar"

    mask = None
    if horizon_m is not None:
        if kind == "polar":
            shape = (meta["polar"]["azimuths"], meta["polar"]["range_bins"])
            mask = horizon_mask(shape, "polar", horizon_m,
                                range_resolution=meta["polar"]["range_resolution"])
        else:
            n = meta["cart"]["size"]
            mask = horizon_mask((n, n), "cart", horizon_m,
                                metres_per_pixel=meta["cart"]["metres_per_pixel"])

    pairs = []
    missing = []
    for rec in index:
        pred_path = predictions_dir / f"{rec['item']}.png"
        if not pred_path.exists():
            missing.append(rec["item"])
            continue
        target = io.load_label_image(dataset_dir / rec["files"][key])
        pred = io.load_label_image(pred_path)
        pairs.append((target, pred))
    if missing:
        log.warning("%d items have no prediction and were skipped",
                    len(missing))
    report = evaluate_grids(pairs, num_classes=len(meta["class_names"]),
                            include_empty=include_empty, mask=mask)
    report["kind"] = kind
    report["horizon_m"] = horizon_m
    report["items_scored"] = len(pairs)
    report["items_missing"] = missing
    return report


def format_report(report: dict) -> str:
    names = report["class_names"]
    width = max(len(n) for n in names) + 2
    lines = ["confusion matrix (rows = true, row-normalized):"]
    header = " " * width + "".join(f"{n[:10]:>11}" for n in names)
    lines.append(header)
    for i, name in enumerate(names):
        row = report["row_normalized"][i]
        cells = "".join("       --  " if v is None else f"{v:>10.3f} "
                        for v in row)
        lines.append(f"{name:<{width}}{cells}")
    lines.append("")
    for i, name in enumerate(names):
        acc = report["per_class_accuracy"][i]
        acc_s = "undefined" if acc is None else f"{acc:.3f}"
        lines.append(f"  {name:<{width}} accuracy {acc_s:>9}   "
                     f"support {report['support'][i]}")
    overall = report["overall_accuracy"]
    lines.append(f"overall accuracy: "
                 f"{'undefined' if overall is None else f'{overall:.4f}'} "
                 f"over {report['scored_cells']} cells")
    return "\n".join(lines)
