"""Train/val/test demarcation by ego position with boundary padding.

Splits are declared as named regions; each item is assigned by the ego
position of its radar scan. Items that fall in no region, in regions of
two different splits, or within the padding distance of another split's
region are dropped, which guarantees the surviving splits are pairwise
disjoint and spatially separated.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Region:
    """A spatial or temporal membership test for split assignment."""

    split: str
    kind: str  # "xrange" | "rect" | "trange"
    bounds: tuple

    def contains(self, xy, t_us: int) -> bool:
        x, y = xy
        if self.kind == "xrange":
            lo, hi = self.bounds
            return lo <= x <= hi
        if self.kind == "rect":
            x0, x1, y0, y1 = self.bounds
            return x0 <= x <= x1 and y0 <= y <= y1
        if self.kind == "trange":
            lo, hi = self.bounds
            return lo <= t_us <= hi
        raise ValueError(f"unknown region kind {self.kind!r}")

    def distance(self, xy) -> float:
        """Euclidean distance from a point to the region (0 inside).

        Time ranges have no spatial footprint and return infinity.
        """
        x, y = xy
        if self.kind == "xrange":
            lo, hi = self.bounds
            return max(0.0, lo - x, x - hi)
        if self.kind == "rect":
            x0, x1, y0, y1 = self.bounds
            dx = max(0.0, x0 - x, x - x1)
            dy = max(0.0, y0 - y, y - y1)
            return (dx * dx + dy * dy) ** 0.5
        return float("inf")


def parse_regions(config: dict) -> list[Region]:
    regions = []
    for entry in config["splits"]:
        kind = entry["kind"]
        if kind == "xrange":
            bounds = (float(entry["min"]), float(entry["max"]))
        elif kind == "rect":
            bounds = (float(entry["x_min"]), float(entry["x_max"]),
                      float(entry["y_min"]), float(entry["y_max"]))
        elif kind == "trange":
            bounds = (int(entry["t_min"]), int(entry["t_max"]))
        else:
            raise ValueError(f"unknown region kind {kind!r}")
        regions.append(Region(split=entry["name"], kind=kind, bounds=bounds))
    return regions


def assign_splits(index_records: list[dict], regions: list[Region],
                  padding_m: float = 10.0):
    """Assign items to splits; returns ({split: [item ids]}, dropped ids)."""
    if padding_m > 0 and any(r.kind == "trange" for r in regions):
        log.warning("padding is spatial and does not separate time-range "
                    "regions")
    assignment: dict[str, list[str]] = {}
    for region in regions:
        assignment.setdefault(region.split, [])
    dropped: list[str] = []
    for rec in index_records:
        xy = tuple(rec["ego_xy"])
        t = int(rec["t_radar"])
        owners = {r.split for r in regions if r.contains(xy, t)}
        if len(owners) != 1:
            dropped.append(rec["item"])
            continue
        owner = owners.pop()
        margin = min((r.distance(xy) for r in regions if r.split != owner),
                     default=float("inf"))
        if margin < padding_m:
            dropped.append(rec["item"])
            continue
        assignment[owner].append(rec["item"])
    return assignment, dropped
