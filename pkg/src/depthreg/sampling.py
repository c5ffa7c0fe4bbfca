"""Sample-set construction for an anchor feature map.

Two collecting means, used together by default: circular shifts of the
anchor's own feature/depth pair (feature and depth always share the same
shift seeds, keeping each sample pixel locationally consistent with its
depth), and whole feature/depth pairs taken from other items of the
training batch.  Draws are independent per iteration, so repeats can occur.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientBatch, InvalidDimension, ShapeError
from .grid import Grid1, Grid3, SeedRng, gen_shift_seed, shift2d_g1, shift2d_g3


@dataclass(frozen=True)
class Within:
    """Provenance of a shift-collected sample: the shift seeds used."""

    s_h: int
    s_w: int


@dataclass(frozen=True)
class Across:
    """Provenance of a batch-collected sample: offset from the anchor index."""

    s_k: int


@dataclass(frozen=True)
class SamplePair:
    feature: Grid3
    depth: Grid1
    origin: Within | Across


@dataclass(frozen=True)
class SampleSet:
    """Ordered (feature, depth) sample pairs, within-collected first."""

    pairs: tuple[SamplePair, ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        if not self.pairs:
            return
        f0 = self.pairs[0].feature
        for p in self.pairs:
            if p.feature.data.shape != f0.data.shape:
                raise ShapeError("sample feature maps disagree in shape")
            if (p.depth.height, p.depth.width) != (f0.height, f0.width):
                raise ShapeError("sample depth maps disagree with feature shape")

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


@dataclass(frozen=True)
class Batch:
    """K co-trained (feature, depth) pairs sharing one shape."""

    items: tuple[tuple[Grid3, Grid1], ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if len(self.items) < 1:
            raise InvalidDimension("batch must contain at least one item")
        shape = self.items[0][0].data.shape
        for f, d in self.items:
            if f.data.shape != shape or (d.height, d.width) != shape[:2]:
                raise ShapeError("batch items disagree in shape")

    def __len__(self) -> int:
        return len(self.items)


def collect_within(f_a: Grid3, d_a: Grid1, n_within: int, rng: SeedRng) -> SampleSet:
    """n_within circular-shift samples of the anchor pair, fresh seeds each.

    Vertical seed is drawn before the horizontal one on every iteration.
    """
    if f_a.height < 2 or f_a.width < 2:
        raise InvalidDimension("shift sampling needs height and width >= 2")
    if (d_a.height, d_a.width) != (f_a.height, f_a.width):
        raise ShapeError("anchor feature and depth shapes disagree")
    pairs = []
    for _ in range(n_within):
        s_h = gen_shift_seed(rng, f_a.height)
        s_w = gen_shift_seed(rng, f_a.width)
        pairs.append(
            SamplePair(
                shift2d_g3(f_a, s_h, s_w),
                shift2d_g1(d_a, s_h, s_w),
                Within(s_h, s_w),
            )
        )
    return SampleSet(tuple(pairs))


def collect_across(batch: Batch, anchor_index: int, n_across: int, rng: SeedRng) -> SampleSet:
    """n_across whole pairs from other batch items.

    The drawn value acts as an offset in [1, K-1] from the anchor index, so a
    sample can never alias the anchor itself.
    """
    k = len(batch)
    if not 0 <= anchor_index < k:
        raise InvalidDimension(f"anchor index {anchor_index} outside batch of {k}")
    if n_across > 0 and k < 2:
        raise InsufficientBatch("cross-batch sampling needs at least two items")
    pairs = []
    for _ in range(n_across):
        s_k = gen_shift_seed(rng, k)
        f, d = batch.items[(anchor_index + s_k) % k]
        pairs.append(SamplePair(f, d, Across(s_k)))
    return SampleSet(tuple(pairs))


def build_sample_set(
    f_a: Grid3,
    d_a: Grid1,
    batch: Batch,
    anchor_index: int,
    n_within: int,
    n_across: int,
    rng: SeedRng,
) -> SampleSet:
    """Concatenate both collecting means, within-samples first."""
    within = collect_within(f_a, d_a, n_within, rng)
    across = collect_across(batch, anchor_index, n_across, rng)
    return SampleSet(within.pairs + across.pairs)


def stack_features(samples: SampleSet) -> np.ndarray:
    """(N, H, W, C) view-free stack of the sample feature maps."""
    return np.stack([p.feature.data for p in samples])


def stack_depths(samples: SampleSet) -> tuple[np.ndarray, np.ndarray]:
    """(N, H, W) stacks of sample depth values and validity masks."""
    vals = np.stack([p.depth.values for p in samples])
    valid = np.stack([p.depth.valid for p in samples])
    return vals, valid
