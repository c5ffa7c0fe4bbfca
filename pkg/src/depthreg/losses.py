"""Contrastive regularization loss, scale-invariant depth loss, combined loss.

Per sample map and pixel, the pair term is the Euclidean feature distance
for positives and the hinge ``max(0, margin - distance)`` for negatives;
ignored pixels contribute nothing.  Gradients flow to the anchor feature
and, with opposite sign, to the sample feature.  The distance subgradient
at zero distance and the hinge subgradient at the kink are both taken as
zero (the most stable members of the subdifferential).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DomainError, InvalidConfig, ShapeError
from .grid import Grid1, Grid3
from .identify import IGNORED, RegConfig, identify
from .sampling import SampleSet, stack_depths, stack_features


@dataclass(frozen=True)
class LossResult:
    """Regularization total with per-type breakdown and feature gradients.

    ``breakdown`` keys are ``"positive"`` and ``"negative_<j>"``; the values
    carry the configured reduction, so they sum to ``total``.
    ``contributing_count`` is the number of non-ignored (sample, pixel)
    pairs, including inactive hinges.
    """

    total: float
    breakdown: dict[str, float]
    contributing_count: int
    grad_anchor: Grid3
    grad_samples: tuple[Grid3, ...]


@dataclass(frozen=True)
class DepthLossParams:
    """Scale-invariant log-depth loss constants."""

    variance_focus: float = 0.85
    output_scale: float = 10.0

    def __post_init__(self):
        if not 0.0 <= self.variance_focus <= 1.0:
            raise InvalidConfig("variance_focus must lie in [0, 1]")
        if not self.output_scale > 0:
            raise InvalidConfig("output_scale must be > 0")


def feat_distance(f1, f2) -> float:
    """Euclidean distance between two equal-length feature vectors."""
    a = np.asarray(f1, dtype=np.float64)
    b = np.asarray(f2, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"length mismatch {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def pair_loss(dist: float, label: int, config: RegConfig) -> float:
    """Single-pair term: distance for positives, hinge for negatives."""
    if label == IGNORED:
        raise ContractViolation("pair_loss is undefined for ignored pixels")
    if dist < 0:
        raise ContractViolation("distance must be >= 0")
    if label == 0:
        return dist
    return max(0.0, config.margin_for(label) - dist)


def _zero_result(f_a: Grid3, n_samples: int) -> LossResult:
    return LossResult(
        total=0.0,
        breakdown={},
        contributing_count=0,
        grad_anchor=Grid3._owned(np.zeros_like(f_a.data)),
        grad_samples=tuple(
            Grid3._owned(np.zeros_like(f_a.data)) for _ in range(n_samples)
        ),
    )


def reg_loss(f_a: Grid3, d_a: Grid1, samples: SampleSet, config: RegConfig) -> LossResult:
    """Regularization loss of an anchor against its sample set, with gradients.

    Every sample pixel is classified from the depth-differential map of the
    anchor depth against that sample's depth, then accumulated per the pair
    term.  Reduction follows ``config.loss_reduction``.  Per-sample partials
    are reduced in sample order, so results are reproducible bit-for-bit.
    """
    if (d_a.height, d_a.width) != (f_a.height, f_a.width):
        raise ShapeError("anchor feature and depth shapes disagree")
    if len(samples) == 0 or not config.enabled:
        return _zero_result(f_a, len(samples))
    if samples.pairs[0].feature.data.shape != f_a.data.shape:
        raise ShapeError("sample shape disagrees with anchor")

    n = len(samples)
    h, w = f_a.height, f_a.width

    # One classification pass over every (sample, pixel): the stacked
    # differentials form an (N*H, W) map, classified through the public
    # identify path (it is purely per-pixel, so the reshape is transparent).
    sd_vals, sd_valid = stack_depths(samples)
    dr = Grid1._owned(
        np.abs(d_a.values[None, :, :] - sd_vals).reshape(n * h, w),
        (d_a.valid[None, :, :] & sd_valid).reshape(n * h, w),
    )
    labels = identify(dr, config).labels.reshape(n, h, w)

    sf = stack_features(samples)  # (N, H, W, C)
    diff = f_a.data[None, :, :, :] - sf
    dist = np.sqrt(np.einsum("nhwc,nhwc->nhw", diff, diff))  # (N, H, W)

    margins = np.zeros(config.num_groups + 1)
    for j in range(1, config.num_groups + 1):
        margins[j] = config.margin_for(j)

    pos = labels == 0
    neg = labels > 0
    m = margins[np.maximum(labels, 0)]
    hinge = np.maximum(0.0, m - dist)

    contributing = int(np.count_nonzero(pos) + np.count_nonzero(neg))
    if config.loss_reduction == "mean_contributing":
        scale = 1.0 / contributing if contributing else 0.0
    else:
        scale = 1.0

    breakdown: dict[str, float] = {"positive": scale * float(np.sum(dist, where=pos))}
    for j in range(1, config.num_groups + 1):
        breakdown[f"negative_{j}"] = scale * float(np.sum(hinge, where=labels == j))
    total = math.fsum(breakdown.values())

    # Gradient coefficient per (sample, pixel): d(term)/d(dist) toward the
    # sample, zero at dist = 0 and on inactive hinges.
    inv = 1.0 / np.where(dist > 0.0, dist, np.inf)
    coef = (scale * inv) * (
        (neg & (dist < m)).astype(np.float64) - pos.astype(np.float64)
    )

    per_sample = coef[:, :, :, None] * diff  # (N, H, W, C), gradient wrt each f_s
    grad_anchor = Grid3._owned(-per_sample.sum(axis=0))
    grad_samples = tuple(Grid3._owned(per_sample[i]) for i in range(n))

    return LossResult(
        total=total,
        breakdown=breakdown,
        contributing_count=contributing,
        grad_anchor=grad_anchor,
        grad_samples=grad_samples,
    )


def si_loss(pred: Grid1, gt: Grid1, params: DepthLossParams) -> tuple[float, np.ndarray]:
    """Scale-invariant log error and its exact gradient wrt the prediction.

    With g_i = ln pred_i - ln gt_i over the T jointly valid pixels (gt > 0
    required), returns ``scale * sqrt(mean(g^2) - focus * mean(g)^2)``.
    The gradient is returned as an (H, W) array, zero off the valid mask
    and zero everywhere when the sqrt argument vanishes.
    """
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise ShapeError("prediction and ground-truth shapes disagree")
    mask = pred.valid & gt.valid & (gt.values > 0)
    grad = np.zeros((pred.height, pred.width))
    t = int(np.count_nonzero(mask))
    if t == 0:
        return 0.0, grad
    p = pred.values[mask]
    if np.any(p <= 0):
        raise DomainError("prediction must be positive on evaluated pixels")
    g = np.log(p) - np.log(gt.values[mask])
    s1 = float(np.sum(g))
    s2 = float(np.sum(g * g))
    v = s2 / t - params.variance_focus * (s1 / t) ** 2
    v = max(v, 0.0)
    loss = params.output_scale * math.sqrt(v)
    if v > 0.0:
        dg = params.output_scale * (g - params.variance_focus * s1 / t) / (t * math.sqrt(v))
        grad[mask] = dg / p
    return loss, grad


def final_loss(reg: LossResult, depth: float, w: float = 1.0) -> float:
    """Combined objective: regularization total plus weighted depth loss."""
    return reg.total + w * depth
