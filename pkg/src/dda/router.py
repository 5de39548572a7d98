"""Patch-to-group routing.

Two grouping policies are provided. The per-image policy ranks patches by
ascending score and splits the ranking into equal-count groups, so every
image spreads its patches across all widths. The threshold policy uses
fixed dataset-level score cutpoints, so a patch's group depends only on
its own score; it is used at training time and optionally at inference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def validate_widths(widths) -> tuple:
    """Check a width list: non-empty, each in (0, 1], non-decreasing.

    Equal adjacent widths are allowed so degenerate lists such as
    (1.0, 1.0, 1.0) can express the full-width baseline.
    """
    ws = tuple(float(w) for w in widths)
    if not ws:
        raise ValueError("width list must not be empty")
    for w in ws:
        if not 0.0 < w <= 1.0:
            raise ValueError(f"width {w} outside (0, 1]")
    for a, b in zip(ws, ws[1:]):
        if b < a:
            raise ValueError("width list must be non-decreasing")
    return ws


@dataclass(frozen=True)
class GroupAssignment:
    """Mapping of patches to complexity groups and subnet widths.

    group_of[i] is patch i's group id; rank_of[i] its rank in ascending
    score order (ties broken by ascending patch index); widths[g] the
    subnet width group g runs at.
    """

    num_groups: int
    group_of: tuple
    rank_of: tuple
    widths: tuple

    def __post_init__(self):
        if self.num_groups < 1:
            raise ValueError("need at least one group")
        if len(self.widths) != self.num_groups:
            raise ValueError(f"{self.num_groups} groups but {len(self.widths)} widths")
        if len(self.group_of) != len(self.rank_of):
            raise ValueError("group_of and rank_of lengths differ")
        if sorted(self.rank_of) != list(range(len(self.rank_of))):
            raise ValueError("rank_of is not a permutation")
        for g in self.group_of:
            if not 0 <= g < self.num_groups:
                raise ValueError(f"group id {g} out of range")

    @property
    def n_patches(self) -> int:
        return len(self.group_of)

    def members(self, group: int) -> list:
        """Patch indices assigned to the group, ascending by rank."""
        order = sorted(range(self.n_patches), key=lambda i: self.rank_of[i])
        return [i for i in order if self.group_of[i] == group]

    def group_sizes(self) -> list:
        sizes = [0] * self.num_groups
        for g in self.group_of:
            sizes[g] += 1
        return sizes

    def width_of(self, patch_index: int) -> float:
        return self.widths[self.group_of[patch_index]]


def _ranks(values) -> list:
    order = sorted(range(len(values)), key=lambda i: (values[i], i))
    ranks = [0] * len(values)
    for rank, index in enumerate(order):
        ranks[index] = rank
    return ranks


def assign_groups(scores, widths) -> GroupAssignment:
    """Equal-count grouping by ascending score rank.

    With N patches and M groups, each of the leading M-1 groups takes
    ceil(N/M) consecutive ranks and the last group takes the remainder
    (possibly none when M > N). Group 0 holds the lowest scores and runs
    at the smallest width.
    """
    ws = validate_widths(widths)
    values = [float(s) for s in scores]
    if not values:
        raise ValueError("score list must not be empty")
    ranks = _ranks(values)
    per_group = math.ceil(len(values) / len(ws))
    group_of = tuple(min(r // per_group, len(ws) - 1) for r in ranks)
    return GroupAssignment(len(ws), group_of, tuple(ranks), ws)


@dataclass(frozen=True)
class Thresholds:
    """Ascending score cutpoints separating M = len(cutpoints) + 1 groups."""

    cutpoints: tuple

    def __post_init__(self):
        cps = tuple(float(c) for c in self.cutpoints)
        if list(cps) != sorted(cps):
            raise ValueError("cutpoints must be ascending")
        object.__setattr__(self, "cutpoints", cps)

    @property
    def num_groups(self) -> int:
        return len(self.cutpoints) + 1


def dataset_thresholds(scores, num_groups: int) -> Thresholds:
    """Cutpoints at the k/M empirical quantiles (linear interpolation), k=1..M-1."""
    if num_groups < 1:
        raise ValueError("need at least one group")
    values = np.asarray([float(s) for s in scores], dtype=np.float64)
    if values.size < num_groups:
        raise ValueError(f"need at least {num_groups} scores, got {values.size}")
    quantiles = [k / num_groups for k in range(1, num_groups)]
    cutpoints = np.quantile(values, quantiles) if quantiles else []
    return Thresholds(tuple(float(c) for c in cutpoints))


def classify_by_threshold(score: float, thresholds: Thresholds) -> int:
    """Smallest group g with score <= cutpoints[g]; above all cutpoints -> last group."""
    for g, cut in enumerate(thresholds.cutpoints):
        if score <= cut:
            return g
    return len(thresholds.cutpoints)


def assignment_from_thresholds(scores, thresholds: Thresholds, widths) -> GroupAssignment:
    """Group patches by fixed cutpoints; ranks still reflect ascending score order."""
    ws = validate_widths(widths)
    if len(ws) != thresholds.num_groups:
        raise ValueError(
            f"width list has {len(ws)} entries but thresholds define {thresholds.num_groups} groups"
        )
    values = [float(s) for s in scores]
    if not values:
        raise ValueError("score list must not be empty")
    group_of = tuple(classify_by_threshold(v, thresholds) for v in values)
    return GroupAssignment(len(ws), group_of, tuple(_ranks(values)), ws)
