"""End-to-end trainer: combined loss, manual gradients, plain SGD.

One training step forwards a batch of K scenes, treats every item as the
anchor of its own sample set, and descends the mean (over anchors) of the
regularization total plus the weighted mean scale-invariant depth loss.
Feature-space gradients are routed back through the shift (within samples)
or to the owning batch item (across samples) before the shared parameters
are updated.  Everything is a pure function of (config, seeds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, InvalidConfig
from ..grid import Grid1, Grid3, SeedRng
from ..identify import MultiRange, RegConfig, Uniform
from ..losses import DepthLossParams, reg_loss, si_loss
from ..metrics import MetricReport, compute_metrics, mean_report
from ..sampling import Batch, Within, build_sample_set
from .model import ToyModel, model_backward, model_forward
from .scenes import SyntheticScene, scene_pool


@dataclass
class StepStats:
    step: int
    l_re: float
    l_depth: float
    l_final: float
    contributing: int
    ignored_fraction: float


@dataclass
class EvalStats:
    step: int
    report: MetricReport
    separation: float


@dataclass
class TrainRecord:
    steps: list[StepStats] = field(default_factory=list)
    evals: list[EvalStats] = field(default_factory=list)
    final_breakdown: dict = field(default_factory=dict)
    diverged: bool = False
    diverged_step: int | None = None


def separation_bounds(config: RegConfig) -> tuple[float, float]:
    """(same-depth threshold, different-depth threshold) from a config."""
    if isinstance(config.strategy, Uniform):
        return config.r_p, config.strategy.r_n
    if isinstance(config.strategy, MultiRange):
        return config.r_p, config.strategy.ranges[0].low
    raise InvalidConfig("feature separation needs a strategy with thresholds")


def feature_separation(features: Grid3, depth: Grid1, config: RegConfig,
                       n_pairs: int = 4096, seed: int = 2026) -> float:
    """Mean feature distance of far-depth pairs over that of near-depth pairs.

    Pairs are pixel positions drawn with a fixed seed; "far" means a depth
    differential above the first negative bound, "near" below r_p.  Returns
    1.0 when both means vanish (constant features) and +inf when no near
    pair exists or near pairs sit at distance zero.
    """
    low_thr, high_thr = separation_bounds(config)
    h, w = features.height, features.width
    p = h * w
    rng = SeedRng(seed)
    idx = np.minimum((rng.uniforms(2 * n_pairs) * p).astype(np.int64), p - 1)
    i1, i2 = idx[:n_pairs], idx[n_pairs:]
    feats = features.data.reshape(p, -1)
    dvals = depth.values.reshape(p)
    dvalid = depth.valid.reshape(p)
    ok = dvalid[i1] & dvalid[i2]
    dd = np.abs(dvals[i1] - dvals[i2])[ok]
    fd = np.sqrt(np.sum((feats[i1] - feats[i2]) ** 2, axis=1))[ok]
    near = fd[dd < low_thr]
    far = fd[dd > high_thr]
    if near.size == 0:
        return math.inf
    if far.size == 0:
        return math.nan
    mean_near = float(near.mean())
    mean_far = float(far.mean())
    if mean_near == 0.0:
        return 1.0 if mean_far == 0.0 else math.inf
    return mean_far / mean_near


def batch_objective(model: ToyModel, scenes: list[SyntheticScene], reg_cfg: RegConfig,
                    depth_params: DepthLossParams, sample_seed: int):
    """Loss and flat parameter gradient for one batch, sampling from a seed.

    Returns (l_re, l_depth, l_final, contributing_count, grad_vec, breakdown).
    Rerunning with identical inputs (including ``sample_seed``) is bit-exact,
    which is what makes finite-difference checks through the whole model
    possible.
    """
    k = len(scenes)
    feats, preds, caches = [], [], []
    for sc in scenes:
        f, p, c = model_forward(model, sc.image)
        feats.append(f)
        preds.append(p)
        caches.append(c)
    depths = [sc.depth for sc in scenes]

    d_feat = [np.zeros_like(f.data) for f in feats]
    d_pred = [np.zeros((p.height, p.width)) for p in preds]

    l_re = 0.0
    contributing = 0
    breakdown: dict[str, float] = {}
    use_reg = reg_cfg.enabled and (reg_cfg.n_within + reg_cfg.n_across) > 0
    if use_reg:
        rng = SeedRng(sample_seed)
        batch = Batch(tuple(zip(feats, depths)))
        for a in range(k):
            ss = build_sample_set(
                feats[a], depths[a], batch, a, reg_cfg.n_within, reg_cfg.n_across, rng
            )
            res = reg_loss(feats[a], depths[a], ss, reg_cfg)
            l_re += res.total / k
            contributing += res.contributing_count
            for key, val in res.breakdown.items():
                breakdown[key] = breakdown.get(key, 0.0) + val / k
            d_feat[a] += res.grad_anchor.data
            for pair, g in zip(ss.pairs, res.grad_samples):
                if isinstance(pair.origin, Within):
                    d_feat[a] += np.roll(
                        g.data, (-pair.origin.s_h, -pair.origin.s_w), axis=(0, 1)
                    )
                else:
                    d_feat[(a + pair.origin.s_k) % k] += g.data
        for a in range(k):
            d_feat[a] *= 1.0 / k

    l_depth = 0.0
    for a in range(k):
        l_a, g_a = si_loss(preds[a], depths[a], depth_params)
        l_depth += l_a / k
        d_pred[a] += reg_cfg.depth_loss_weight * g_a / k

    l_final = l_re + reg_cfg.depth_loss_weight * l_depth
    grad = np.zeros(model.param_count)
    for a in range(k):
        grad += model_backward(model, caches[a], d_feat[a], d_pred[a])
    return l_re, l_depth, l_final, contributing, grad, breakdown


@dataclass(frozen=True)
class Schedule:
    steps: int
    batch_size: int
    learning_rate: float
    seeds: tuple[int, ...]
    train_scenes: int = 40
    eval_scenes: int = 10
    eval_every: int = 500

    def __post_init__(self):
        if self.steps < 1 or self.batch_size < 1:
            raise InvalidConfig("steps and batch_size must be >= 1")
        if self.learning_rate < 0:
            raise InvalidConfig("learning_rate must be >= 0")
        if not self.seeds:
            raise InvalidConfig("seed list must not be empty")
        if self.train_scenes < self.batch_size:
            raise InvalidConfig("train pool smaller than one batch")
        if self.eval_scenes < 1 or self.eval_every < 1:
            raise InvalidConfig("eval settings must be >= 1")


def train_run(scene_shape: tuple[int, int], depth_range: tuple[float, float],
              reg_cfg: RegConfig, depth_params: DepthLossParams, schedule: Schedule,
              seed: int, separation_cfg: RegConfig) -> TrainRecord:
    """One seeded training run; bit-identical when repeated.

    The scene pools and model initialization derive from ``seed`` alone (not
    from the strategy), so runs differing only in ``reg_cfg`` are paired:
    same scenes, same initial weights, same held-out set.
    """
    if reg_cfg.n_across > 0 and schedule.batch_size < 2:
        raise InvalidConfig("cross-batch sampling needs batch_size >= 2")
    h, w = scene_shape
    d_min, d_max = depth_range

    master = SeedRng(seed)
    model_rng = master.split()
    train_pool_rng = master.split()
    eval_pool_rng = master.split()
    sample_rng = master.split()

    train_pool = scene_pool(train_pool_rng.next_u64(), schedule.train_scenes, h, w, d_min, d_max)
    eval_pool = scene_pool(eval_pool_rng.next_u64(), schedule.eval_scenes, h, w, d_min, d_max)
    model = ToyModel.init(model_rng)

    record = TrainRecord()
    params = model.param_vector()
    k = schedule.batch_size

    for step in range(schedule.steps):
        scenes = [train_pool[(step * k + i) % len(train_pool)] for i in range(k)]
        sample_seed = sample_rng.next_u64()
        try:
            l_re, l_depth, l_final, contributing, grad, breakdown = batch_objective(
                model, scenes, reg_cfg, depth_params, sample_seed
            )
        except DomainError:
            record.diverged = True
            record.diverged_step = step
            break
        if not math.isfinite(l_final):
            record.diverged = True
            record.diverged_step = step
            break
        slots = k * (reg_cfg.n_within + reg_cfg.n_across) * h * w
        ignored = 1.0 - contributing / slots if (reg_cfg.enabled and slots) else 1.0
        record.steps.append(
            StepStats(step, l_re, l_depth, l_final, contributing, ignored)
        )
        record.final_breakdown = breakdown
        params = params - schedule.learning_rate * grad
        model = model.with_params(params)

        last = step == schedule.steps - 1
        if (step + 1) % schedule.eval_every == 0 or last:
            record.evals.append(
                EvalStats(step, *evaluate_model(model, eval_pool, separation_cfg))
            )
    return record


def evaluate_model(model: ToyModel, scenes: list[SyntheticScene],
                   separation_cfg: RegConfig) -> tuple[MetricReport, float]:
    """Held-out metrics (per-scene averaged) and mean separation statistic."""
    reports, seps = [], []
    for sc in scenes:
        f, p, _ = model_forward(model, sc.image)
        reports.append(compute_metrics(p, sc.depth))
        seps.append(feature_separation(f, sc.depth, separation_cfg))
    finite = [s for s in seps if math.isfinite(s)]
    sep = sum(finite) / len(finite) if finite else math.inf
    return mean_report(reports), sep
