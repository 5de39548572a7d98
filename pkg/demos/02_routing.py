"""Route image patches to subnet widths by complexity.

An image is tiled, each tile is scored, and tiles are assigned to groups
that run at different widths: cheap tiles get narrow subnets, hard tiles
get wide ones. Two policies exist: per-image equal-count ranking, and
fixed dataset-level score cutpoints.

CLI equivalent: dda route IMAGE --patch-height 32 --patch-width 32

Run: python3 demos/02_routing.py
"""

import numpy as np

from dda import (
    assign_groups,
    assignment_from_thresholds,
    dataset_thresholds,
    gen_pair,
    score_grid,
    split,
)

WIDTHS = (0.25, 0.5, 0.75)

# a 128x128 image tiled into 16 patches of 32x32
image = gen_pair(seed=11, index=0, h=128, w=128, moire_free_rate=0.0)[1]
grid = split(image, 32, 32)
scores = [s.score for s in score_grid(image, grid)]
print(f"{grid.n_patches} patches, score range {min(scores):.4f} .. {max(scores):.4f}")

# policy 1: rank within this image, split the ranking into equal-count groups
assignment = assign_groups(scores, WIDTHS)
print(f"\nper-image policy: group sizes {assignment.group_sizes()}")
for g in range(assignment.num_groups):
    members = assignment.members(g)
    print(f"  group {g} (width {WIDTHS[g]:.2f}): patches {members}")

# policy 2: classify against fixed cutpoints estimated from a dataset
dataset_scores = []
for i in range(50):
    moire = gen_pair(seed=99, index=i, h=64, w=64)[1]
    dataset_scores.append(float(np.mean([s.score for s in score_grid(moire, split(moire, 32, 32))])))
thresholds = dataset_thresholds(dataset_scores, len(WIDTHS))
print(f"\ndataset cutpoints: {[round(c, 4) for c in thresholds.cutpoints]}")
fixed = assignment_from_thresholds(scores, thresholds, WIDTHS)
print(f"threshold policy: group sizes {fixed.group_sizes()}")
print("(sizes now depend on absolute scores, not this image's ranking)")
