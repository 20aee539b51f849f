"""CLI: fit a model, predict one item, or export a predictions directory."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import torch

from .data import GridDataset
from .network import NetworkConfig
from .training import (FitConfig, export_predictions, fit, load_checkpoint,
                       predict)

log = logging.getLogger("radartrainer")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="radartrainer",
        description="Segmentation network over radar scan stack datasets")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="train on a dataset directory")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True,
                   help="checkpoint + metrics directory")
    p.add_argument("--split", default=None,
                   help="train split name (default: all items)")
    p.add_argument("--weights", type=Path, default=None,
                   help="class weights file (default: <dataset>/weights.csv)")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--base-width", type=int, default=16)
    p.add_argument("--classes", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-accuracy", type=float, default=None,
                   help="stop early at this training non-empty accuracy")

    p = sub.add_parser("predict", help="predict one item to a PNG")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--item", required=True)
    p.add_argument("--out", type=Path, required=True, help="output PNG path")

    p = sub.add_parser("export-predictions",
                       help="predict every item into a directory")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--split", default=None)
    p.add_argument("--out", type=Path, required=True)
    return parser


def _cmd_fit(args) -> int:
    net_cfg = NetworkConfig(num_classes=args.classes,
                            base_width=args.base_width)
    fit_cfg = FitConfig(epochs=args.epochs, batch_size=args.batch_size,
                        learning_rate=args.lr, seed=args.seed,
                        target_accuracy=args.target_accuracy)
    ckpt = fit(args.dataset, args.out, net_cfg, fit_cfg, split=args.split,
               weights_path=args.weights)
    print(f"wrote {ckpt}")
    return 0


def _cmd_predict(args) -> int:
    model = load_checkpoint(args.checkpoint)
    data = GridDataset(args.dataset)
    sample = next((data[i] for i in range(len(data))
                   if data.records[i]["item"] == args.item), None)
    if sample is None:
        log.error("item %s not found", args.item)
        return 1
    pred = predict(model, torch.from_numpy(sample.stack))
    from .data import save_label_grid
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_label_grid(pred, args.out)
    classes, counts = np.unique(pred, return_counts=True)
    print(f"wrote {args.out}; class histogram "
          f"{dict(zip(classes.tolist(), counts.tolist()))}")
    return 0


def _cmd_export(args) -> int:
    model = load_checkpoint(args.checkpoint)
    n = export_predictions(model, args.dataset, args.out, split=args.split)
    print(f"wrote {n} predictions to {args.out}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    commands = {"fit": _cmd_fit, "predict": _cmd_predict,
                "export-predictions": _cmd_export}
    try:
        return commands[args.command](args)
    except Exception:
        log.exception("fatal error")
        return 1


if __name__ == "__main__":
    sys.exit(main())
