"""Depth-differential maps and per-pixel sample-type identification.

A sample pixel is classified relative to the anchor by the absolute depth
difference at that position: below ``r_p`` it is a positive, inside a
negative range it belongs to that negative subgroup, anywhere else
(threshold gaps, boundary equalities, invalid depth) it is ignored.
All threshold comparisons are strict; equality never classifies.

Label codes in ``IdentMap.labels``: 0 = positive, j >= 1 = negative
subgroup j, -1 = ignored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig, ShapeError
from .grid import Grid1

POSITIVE = 0
IGNORED = -1


@dataclass(frozen=True)
class Uniform:
    """Single negative group: differential > r_n, one margin m_u."""

    r_n: float
    m_u: float


@dataclass(frozen=True)
class NegativeRange:
    low: float
    high: float
    margin: float


@dataclass(frozen=True)
class MultiRange:
    """Negatives split into subgroups by differential range, one margin each."""

    ranges: tuple[NegativeRange, ...]

    def __post_init__(self):
        object.__setattr__(self, "ranges", tuple(self.ranges))


@dataclass(frozen=True)
class RegConfig:
    """Thresholds, margins and sample counts driving the regularizer.

    ``strategy=None`` disables regularization entirely (baseline runs); the
    multi-range invariant forbids an empty range list, so "off" is explicit.
    ``loss_reduction`` is ``"sum"`` (literal double sum over samples and
    pixels) or ``"mean_contributing"`` (divide by the number of non-ignored
    sample pixels, resolution-independent; the default).
    """

    r_p: float
    strategy: Uniform | MultiRange | None
    n_within: int = 10
    n_across: int = 4
    loss_reduction: str = "mean_contributing"
    depth_loss_weight: float = 1.0

    def __post_init__(self):
        if not self.r_p > 0:
            raise InvalidConfig(f"r_p must be > 0, got {self.r_p}")
        if self.n_within < 0 or self.n_across < 0:
            raise InvalidConfig("sample counts must be >= 0")
        if self.loss_reduction not in ("sum", "mean_contributing"):
            raise InvalidConfig(f"unknown loss_reduction {self.loss_reduction!r}")
        if self.depth_loss_weight < 0:
            raise InvalidConfig("depth_loss_weight must be >= 0")
        s = self.strategy
        if s is None:
            return
        if isinstance(s, Uniform):
            if s.r_n < self.r_p:
                raise InvalidConfig(f"r_n={s.r_n} must be >= r_p={self.r_p}")
            if not s.m_u > 0:
                raise InvalidConfig("m_u must be > 0")
        elif isinstance(s, MultiRange):
            if not s.ranges:
                raise InvalidConfig("multi-range strategy needs at least one range")
            prev_high = None
            for r in s.ranges:
                if not r.low < r.high:
                    raise InvalidConfig(f"range ({r.low}, {r.high}) is empty")
                if not r.margin > 0:
                    raise InvalidConfig("margins must be > 0")
                if prev_high is not None and r.low < prev_high:
                    raise InvalidConfig("ranges must be sorted ascending and non-overlapping")
                prev_high = r.high
            if s.ranges[0].low < self.r_p:
                raise InvalidConfig(
                    f"first negative lower bound {s.ranges[0].low} below r_p={self.r_p}"
                )
        else:
            raise InvalidConfig(f"unknown strategy type {type(s).__name__}")

    @property
    def enabled(self) -> bool:
        return self.strategy is not None

    def margin_for(self, group: int) -> float:
        """Hinge margin of negative subgroup ``group`` (1-based)."""
        if isinstance(self.strategy, Uniform):
            if group != 1:
                raise InvalidConfig(f"uniform strategy has no subgroup {group}")
            return self.strategy.m_u
        if isinstance(self.strategy, MultiRange):
            if not 1 <= group <= len(self.strategy.ranges):
                raise InvalidConfig(f"no negative subgroup {group}")
            return self.strategy.ranges[group - 1].margin
        raise InvalidConfig("regularization disabled; no margins defined")

    @property
    def num_groups(self) -> int:
        if isinstance(self.strategy, Uniform):
            return 1
        if isinstance(self.strategy, MultiRange):
            return len(self.strategy.ranges)
        return 0


@dataclass(frozen=True)
class IdentMap:
    """Per-pixel sample-type labels; exactly one label per pixel."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.labels, dtype=np.int16)
        if arr.ndim != 2:
            raise ShapeError("label map must be 2-D")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def ignored_fraction(self) -> float:
        """Diagnostic: share of pixels classifying as neither pos nor neg."""
        return float(np.mean(self.labels == IGNORED))


def differential_map(d_a: Grid1, d_s: Grid1) -> Grid1:
    """|d_a - d_s| per pixel; valid only where both inputs are valid."""
    if (d_a.height, d_a.width) != (d_s.height, d_s.width):
        raise ShapeError(
            f"shape mismatch {(d_a.height, d_a.width)} vs {(d_s.height, d_s.width)}"
        )
    valid = d_a.valid & d_s.valid
    vals = np.where(valid, np.abs(d_a.values - d_s.values), 0.0)
    return Grid1(vals, valid)


def _classify(d_r: Grid1, r_p: float, bounds: list[tuple[float, float]]) -> np.ndarray:
    labels = np.full((d_r.height, d_r.width), IGNORED, dtype=np.int16)
    v = d_r.values
    ok = d_r.valid
    labels[ok & (v < r_p)] = POSITIVE
    for j, (low, high) in enumerate(bounds, start=1):
        labels[ok & (v > low) & (v < high)] = j
    return labels


def identify_uniform(d_r: Grid1, r_p: float, r_n: float) -> IdentMap:
    """Positive below r_p, negative group 1 above r_n, ignored between."""
    if r_p > r_n:
        raise InvalidConfig(f"r_p={r_p} exceeds r_n={r_n}")
    return IdentMap(_classify(d_r, r_p, [(r_n, np.inf)]))


def identify_multirange(d_r: Grid1, config: RegConfig) -> IdentMap:
    """Positive below r_p, negative group j inside its open range (r_l, r_h)."""
    if not isinstance(config.strategy, MultiRange):
        raise InvalidConfig("config does not carry a multi-range strategy")
    bounds = [(r.low, r.high) for r in config.strategy.ranges]
    return IdentMap(_classify(d_r, config.r_p, bounds))


def identify(d_r: Grid1, config: RegConfig) -> IdentMap:
    """Dispatch on the configured strategy."""
    if isinstance(config.strategy, Uniform):
        return identify_uniform(d_r, config.r_p, config.strategy.r_n)
    if isinstance(config.strategy, MultiRange):
        return identify_multirange(d_r, config)
    raise InvalidConfig("regularization disabled; nothing to identify")
