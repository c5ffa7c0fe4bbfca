"""Standard monocular depth evaluation metrics.

Evaluation runs over pixels valid in the ground truth with gt > 0 and
pred > 0.  Threshold accuracies use strict '<' against 1.25**j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyEvaluation, ShapeError
from .grid import Grid1

CSV_HEADER = "abs_rel,sq_rel,rmse,rmse_log,log10,d1,d2,d3,n"


@dataclass(frozen=True)
class MetricReport:
    abs_rel: float
    sq_rel: float
    rmse: float
    rmse_log: float
    log10: float
    delta1: float
    delta2: float
    delta3: float
    pixel_count: int

    def csv_row(self) -> str:
        return ",".join(
            repr(v)
            for v in (
                self.abs_rel,
                self.sq_rel,
                self.rmse,
                self.rmse_log,
                self.log10,
                self.delta1,
                self.delta2,
                self.delta3,
            )
        ) + f",{self.pixel_count}"


def compute_metrics(pred: Grid1, gt: Grid1) -> MetricReport:
    """The seven depth metrics over the valid evaluation pixels."""
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise ShapeError("prediction and ground-truth shapes disagree")
    mask = gt.valid & (gt.values > 0) & (pred.values > 0)
    n = int(np.count_nonzero(mask))
    if n == 0:
        raise EmptyEvaluation("no valid pixel to evaluate")
    p = pred.values[mask]
    g = gt.values[mask]

    err = np.abs(p - g)
    thresh = np.maximum(p / g, g / p)
    log_err = np.log(p) - np.log(g)

    return MetricReport(
        abs_rel=float(np.mean(err / g)),
        sq_rel=float(np.mean(err**2 / g)),
        rmse=float(np.sqrt(np.mean(err**2))),
        rmse_log=float(np.sqrt(np.mean(log_err**2))),
        log10=float(np.mean(np.abs(np.log10(p) - np.log10(g)))),
        delta1=float(np.mean(thresh < 1.25)),
        delta2=float(np.mean(thresh < 1.25**2)),
        delta3=float(np.mean(thresh < 1.25**3)),
        pixel_count=n,
    )


def mean_report(reports: list[MetricReport]) -> MetricReport:
    """Unweighted per-scene average, the usual benchmark aggregation."""
    if not reports:
        raise EmptyEvaluation("no reports to average")
    k = len(reports)
    return MetricReport(
        abs_rel=sum(r.abs_rel for r in reports) / k,
        sq_rel=sum(r.sq_rel for r in reports) / k,
        rmse=sum(r.rmse for r in reports) / k,
        rmse_log=sum(r.rmse_log for r in reports) / k,
        log10=sum(r.log10 for r in reports) / k,
        delta1=sum(r.delta1 for r in reports) / k,
        delta2=sum(r.delta2 for r in reports) / k,
        delta3=sum(r.delta3 for r in reports) / k,
        pixel_count=sum(r.pixel_count for r in reports),
    )
