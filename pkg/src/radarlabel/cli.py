"""Command-line orchestration of the annotation pipeline.

Subcommands: simulate, generate, split, augment, stats, evaluate.
Option precedence is flags > config file (--config, YAML) > built-in
defaults; every default is shown in --help. Exit codes: 0 success,
1 fatal error, 2 partial success (more than 10% of items failed).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import io
from .evaluation import evaluate_dirs, format_report
from .pipeline import (GenerateConfig, augment_item, class_counts,
                       generate_dataset)
from .scenario import SCENARIOS, generate_scenario
from .splits import assign_splits, parse_regions
from .taxonomy import compute_weights, default_class_map

log = logging.getLogger("radarlabel")

DEFAULTS = {
    "seed": 0,
    "window_secs": 8.0,
    "padding_m": 10.0,
    "horizon_m": None,
    "workers": 1,
    "cart_size": None,
    "metres_per_pixel": None,
}

FAIL_FRACTION_LIMIT = 0.10


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radarlabel",
        description="Cross-modal annotation pipeline for scanning radar")
    parser.add_argument("--verbose", action="store_true",
                        help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, default=None,
                       help="YAML config file; flags override its values")
        p.add_argument("--seed", type=int, default=None,
                       help=f"global random seed (default: {DEFAULTS['seed']})")

    p = sub.add_parser("simulate", help="materialize a synthetic scenario")
    add_common(p)
    p.add_argument("--scenario", choices=sorted(SCENARIOS),
                   help="built-in scenario name")
    p.add_argument("--scenario-config", type=Path, default=None,
                   help="YAML scenario description (overrides --scenario)")
    p.add_argument("--out", type=Path, required=True,
                   help="output recording directory")

    p = sub.add_parser("generate", help="run the pipeline over a manifest")
    add_common(p)
    p.add_argument("--manifest", type=Path, required=True,
                   help="recording manifest (from simulate or real data)")
    p.add_argument("--out", type=Path, required=True,
                   help="output dataset directory")
    p.add_argument("--window-secs", type=float, default=None,
                   help="accumulation half-window in seconds "
                        f"(default: {DEFAULTS['window_secs']})")
    p.add_argument("--workers", type=int, default=None,
                   help=f"parallel workers (default: {DEFAULTS['workers']})")
    p.add_argument("--cart-size", type=int, default=None,
                   help="Cartesian raster size N (default: range bin count)")
    p.add_argument("--metres-per-pixel", type=float, default=None,
                   help="Cartesian pixel size (default: full disc fits)")

    p = sub.add_parser("split", help="demarcate train/val/test by position")
    add_common(p)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--regions", type=Path, required=True,
                   help="YAML split region description")
    p.add_argument("--padding-m", type=float, default=None,
                   help="drop items this close to another split "
                        f"(default: {DEFAULTS['padding_m']})")

    p = sub.add_parser("augment", help="randomly flip one item")
    add_common(p)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--item", required=True, help="item id from the index")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("stats", help="class counts and loss weights")
    add_common(p)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--split", default=None,
                   help="restrict to a split file written by `split`")
    p.add_argument("--kind", choices=("cart", "polar"), default="cart")
    p.add_argument("--out", type=Path, default=None,
                   help="weights file (default: <dataset>/weights.csv)")
    p.add_argument("--empty-weight", type=float, default=0.1,
                   help="pinned weight of the empty class (default: 0.1)")

    p = sub.add_parser("evaluate", help="score predictions against targets")
    add_common(p)
    p.add_argument("--predictions", type=Path, required=True,
                   help="directory of {item}.png class grids")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--kind", choices=("cart", "polar"), default="cart")
    p.add_argument("--horizon-m", type=float, default=None,
                   help="score only cells within this range (default: all)")
    p.add_argument("--include-empty", action="store_true",
                   help="also score cells whose target is empty")
    p.add_argument("--out", type=Path, default=None,
                   help="write the JSON report here")
    return parser


def _resolve(args, key: str, cfg_file: dict):
    """flags > config file > defaults."""
    val = getattr(args, key, None)
    if val is not None:
        return val
    if key in cfg_file:
        return cfg_file[key]
    return DEFAULTS.get(key)


def _load_config_file(args) -> dict:
    path = getattr(args, "config", None)
    if path is None:
        return {}
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValueError("config file must hold a mapping")
    return data


def _cmd_simulate(args, cfg_file) -> int:
    if args.scenario_config is not None:
        with open(args.scenario_config) as fh:
            scenario = yaml.safe_load(fh)
    elif args.scenario:
        scenario = SCENARIOS[args.scenario]()
    else:
        log.error("simulate needs --scenario or --scenario-config")
        return 1
    seed = getattr(args, "seed", None)
    if seed is not None:
        scenario["seed"] = seed
    manifest = generate_scenario(scenario, args.out)
    print(f"wrote {manifest}")
    return 0


def _cmd_generate(args, cfg_file) -> int:
    cfg = GenerateConfig(
        seed=int(_resolve(args, "seed", cfg_file)),
        window_secs=float(_resolve(args, "window_secs", cfg_file)),
        cart_size=_resolve(args, "cart_size", cfg_file),
        metres_per_pixel=_resolve(args, "metres_per_pixel", cfg_file),
        workers=int(_resolve(args, "workers", cfg_file)),
    )
    summary = generate_dataset(args.manifest, args.out, cfg)
    print(f"generated {summary['items']} items "
          f"({summary['failures']} failures of {summary['attempted']})")
    if summary["attempted"] and \
            summary["failures"] / summary["attempted"] > FAIL_FRACTION_LIMIT:
        return 2
    return 0


def _cmd_split(args, cfg_file) -> int:
    with open(args.regions) as fh:
        regions_cfg = yaml.safe_load(fh)
    regions = parse_regions(regions_cfg)
    padding = float(_resolve(args, "padding_m", cfg_file))
    index = io.load_index(args.dataset / "index.jsonl")
    assignment, dropped = assign_splits(index, regions, padding_m=padding)
    out = args.dataset / "splits"
    out.mkdir(parents=True, exist_ok=True)
    for name, items in assignment.items():
        (out / f"{name}.txt").write_text("".join(f"{i}\n" for i in items))
    # annotate the index itself; dropped items keep a null split
    split_of = {item: name for name, items in assignment.items()
                for item in items}
    for rec in index:
        rec["split"] = split_of.get(rec["item"])
    io.save_index(index, args.dataset / "index.jsonl")
    io.save_json({"padding_m": padding,
                  "counts": {k: len(v) for k, v in assignment.items()},
                  "dropped": dropped}, out / "summary.json")
    counts = ", ".join(f"{k}: {len(v)}" for k, v in sorted(assignment.items()))
    print(f"split sizes {counts}; dropped {len(dropped)}")
    return 0


def _cmd_augment(args, cfg_file) -> int:
    seed = int(_resolve(args, "seed", cfg_file))
    index = io.load_index(args.dataset / "index.jsonl")
    rec = next((r for r in index if r["item"] == args.item), None)
    if rec is None:
        log.error("item %s not in index", args.item)
        return 1
    labels = io.load_label_image(args.dataset / rec["files"]["label_cart"])
    channels = []
    cell = 1.0
    for rel in rec["files"]["stack"]:
        grid, cell = io.load_float_grid(args.dataset / rel)
        channels.append(grid)
    stack = np.stack(channels)
    aug_stack, aug_labels, flips = augment_item(stack, labels, seed)
    args.out.mkdir(parents=True, exist_ok=True)
    io.save_label_image(aug_labels, args.out / f"{args.item}.png")
    for k in range(3):
        io.save_float_grid(aug_stack[k], cell, args.out / f"{args.item}_{k}.bin")
    io.save_json({"item": args.item, "seed": seed,
                  "flip_rows": flips[0], "flip_cols": flips[1]},
                 args.out / f"{args.item}.json")
    print(f"augmented {args.item}: flip_rows={flips[0]} flip_cols={flips[1]}")
    return 0


def _cmd_stats(args, cfg_file) -> int:
    item_ids = None
    if args.split:
        split_path = args.dataset / "splits" / f"{args.split}.txt"
        item_ids = [line.strip() for line in split_path.read_text().splitlines()
                    if line.strip()]
    counts = class_counts(args.dataset, item_ids=item_ids, kind=args.kind)
    weights = compute_weights(counts, empty_override=args.empty_weight)
    out = args.out or (args.dataset / "weights.csv")
    io.save_weights(weights, out)
    io.save_class_map(default_class_map(), args.dataset / "class_map.csv")
    for i, (c, w) in enumerate(zip(counts, weights.w)):
        print(f"class {i}: count {c}, weight {w:.6g}")
    print(f"wrote {out}")
    return 0


def _cmd_evaluate(args, cfg_file) -> int:
    horizon = _resolve(args, "horizon_m", cfg_file)
    report = evaluate_dirs(args.predictions, args.dataset, kind=args.kind,
                           horizon_m=horizon,
                           include_empty=args.include_empty)
    print(format_report(report))
    if args.out:
        io.save_json(report, args.out)
        print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "generate": _cmd_generate,
    "split": _cmd_split,
    "augment": _cmd_augment,
    "stats": _cmd_stats,
    "evaluate": _cmd_evaluate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args, _load_config_file(args))
    except Exception:
        log.exception("fatal error")
        return 1


if __name__ == "__main__":
    sys.exit(main())
