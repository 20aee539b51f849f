"""Source (Cityscapes-style, 34 ids) to radar taxonomy remapping and
log-scaled class weighting for the segmentation loss.

Target taxonomy (7 classes):

    0 empty          sky, road, sidewalk, terrain, guard rail, ... (residual)
    1 construction   building, wall, fence
    2 pole_like      pole, pole group, traffic light, traffic sign
    3 pedestrian     person
    4 vehicle        car, truck, bus, caravan, trailer, train
    5 bike_like      rider, bicycle, motorcycle
    6 vegetation     vegetation

Every source id not explicitly grouped maps to empty.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

# Reserved sentinel for points/pixels that received no label at all.
# Distinct from every source id (0..33) and from target "empty".
UNLABELED = 255

# Cityscapes label ids and names (the 34-class source taxonomy).
SOURCE_NAMES = {
    0: "unlabeled", 1: "ego vehicle", 2: "rectification border",
    3: "out of roi", 4: "static", 5: "dynamic", 6: "ground",
    7: "road", 8: "sidewalk", 9: "parking", 10: "rail track",
    11: "building", 12: "wall", 13: "fence", 14: "guard rail",
    15: "bridge", 16: "tunnel", 17: "pole", 18: "polegroup",
    19: "traffic light", 20: "traffic sign", 21: "vegetation",
    22: "terrain", 23: "sky", 24: "person", 25: "rider",
    26: "car", 27: "truck", 28: "bus", 29: "caravan",
    30: "trailer", 31: "train", 32: "motorcycle", 33: "bicycle",
}
SOURCE_IDS = {name: idx for idx, name in SOURCE_NAMES.items()}

TARGET_NAMES = ["empty", "construction", "pole_like", "pedestrian",
                "vehicle", "bike_like", "vegetation"]
EMPTY = 0
CONSTRUCTION = 1
POLE_LIKE = 2
PEDESTRIAN = 3
VEHICLE = 4
BIKE_LIKE = 5
VEGETATION = 6

_GROUPS = {
    CONSTRUCTION: ["building", "wall", "fence"],
    POLE_LIKE: ["pole", "polegroup", "traffic light", "traffic sign"],
    PEDESTRIAN: ["person"],
    VEHICLE: ["car", "truck", "bus", "caravan", "trailer", "train"],
    BIKE_LIKE: ["rider", "bicycle", "motorcycle"],
    VEGETATION: ["vegetation"],
}


class DegenerateCountsError(ValueError):
    """All class counts are zero; weights are undefined."""


@dataclass(frozen=True)
class ClassMap:
    """Total mapping from source class ids onto the target taxonomy.

    ``mapping[source_id]`` is a target index, or None for sources whose
    points should be dropped entirely (omitted) rather than labelled empty.
    """

    mapping: dict
    target_names: tuple

    def __post_init__(self):
        num_targets = len(self.target_names)
        hit = set()
        for src, tgt in self.mapping.items():
            if tgt is None:
                continue
            if not 0 <= tgt < num_targets:
                raise ValueError(f"target index {tgt} out of range for source {src}")
            hit.add(tgt)
        for tgt in range(num_targets):
            if tgt not in hit and tgt != EMPTY:
                raise ValueError(f"target class {self.target_names[tgt]} unreachable")

    @property
    def num_targets(self) -> int:
        return len(self.target_names)

    def lookup_table(self, omit_value: int = UNLABELED) -> np.ndarray:
        """256-entry uint8 table: source id -> target id.

        Unknown ids and the UNLABELED sentinel map to ``omit_value``, as do
        omitted sources, so rasterization can skip them uniformly.
        """
        table = np.full(256, omit_value, dtype=np.uint8)
        for src, tgt in self.mapping.items():
            table[src] = omit_value if tgt is None else tgt
        table[UNLABELED] = omit_value
        return table

    def remap(self, labels: np.ndarray) -> np.ndarray:
        """Remap an array of source labels to target labels (omitted/unknown
        entries become UNLABELED)."""
        return self.lookup_table()[np.asarray(labels, dtype=np.uint8)]


def default_class_map() -> ClassMap:
    """The 7-class grouping of the 34 source ids; residual ids go to empty."""
    mapping = {src: EMPTY for src in SOURCE_NAMES}
    for tgt, names in _GROUPS.items():
        for name in names:
            mapping[SOURCE_IDS[name]] = tgt
    return ClassMap(mapping=mapping, target_names=tuple(TARGET_NAMES))


@dataclass(frozen=True)
class ClassWeights:
    """Per-target-class loss weights."""

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and non-negative")
        w.flags.writeable = False
        object.__setattr__(self, "w", w)

    def __len__(self):
        return self.w.shape[0]


def compute_weights(counts, empty_override: float = 0.1,
                    empty_index: int | None = EMPTY) -> ClassWeights:
    """Log-scaled inverse-frequency weights.

        w[i] = (1 + ln(total / (N * t[i])))^2

    with N the number of classes and t the per-class counts (natural log;
    the proportionality constant is taken as 1). The empty class does not
    follow the formula: its weight is pinned to ``empty_override``
    (pass ``empty_index=None`` to disable the override).

    Zero counts are clamped to 1 with a warning; uniform counts give
    weight exactly 1 for every class the formula applies to.
    """
    t = [int(c) for c in counts]
    if any(c < 0 for c in t):
        raise ValueError("counts must be non-negative")
    total = sum(t)
    if total == 0:
        raise DegenerateCountsError("all class counts are zero")
    n = len(t)
    if any(c == 0 for c in t):
        warnings.warn("zero class counts clamped to 1 for weighting",
                      stacklevel=2)
        t = [max(c, 1) for c in t]
        total = sum(t)
    w = np.empty(n, dtype=float)
    for i, ti in enumerate(t):
        # total/(n*ti) as a single correctly-rounded division keeps the
        # weights exactly invariant under integer scaling of the counts
        ratio = total / (n * ti)
        w[i] = (1.0 + math.log(ratio)) ** 2
    if empty_index is not None:
        w[empty_index] = empty_override
    return ClassWeights(w=w)
