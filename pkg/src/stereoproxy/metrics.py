"""Disparity and depth evaluation metrics.

Evaluation set = pixels where the ground truth is valid and the optional
region mask holds. Prediction pixels that are invalid inside that set are
handled per the `invalid_pred` policy:

* "error":   they count as D1/BAD2 errors (dense predictions should cover
             everything); absolute-difference means skip them since there
             is no value to difference.
* "exclude": they are dropped from the evaluated set (sparse proxy maps
             report their coverage through density/overlap instead).

All thresholds are strict (>3, >5%, >2, <1.25^k) and reductions accumulate
in 64-bit regardless of input precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster_io import Calibration, DisparityMap


class UndefinedMetricError(ValueError):
    """No pixels were evaluated, the metric has no value."""


D1_ABS_THRESHOLD = 3.0
D1_REL_THRESHOLD = 0.05
BAD2_THRESHOLD = 2.0
MAX_DEPTH_DEFAULT = 80.0


@dataclass
class EvalReport:
    """Per-frame or aggregate metric record; unset metrics stay None."""

    d1_pct: float | None = None
    epe: float | None = None
    bad2_pct: float | None = None
    density_pct: float | None = None
    overlap_pct: float | None = None
    valid_count: int | None = None
    correct_count: int | None = None
    accuracy_pct: float | None = None
    rmse_m: float | None = None
    rmse_log: float | None = None
    delta1: float | None = None
    delta2: float | None = None
    delta3: float | None = None


def _eval_sets(pred: DisparityMap, gt: DisparityMap, mask, invalid_pred):
    """Return (evaluated mask, covered mask) per the invalid_pred policy.

    covered = evaluated pixels that also have a prediction value.
    """
    if pred.values.shape != gt.values.shape:
        raise ValueError("prediction and ground truth dimensions differ")
    if invalid_pred not in ("error", "exclude"):
        raise ValueError(f"invalid_pred must be 'error' or 'exclude', got {invalid_pred!r}")
    evaluated = gt.valid if mask is None else gt.valid & mask
    covered = evaluated & pred.valid
    if invalid_pred == "exclude":
        evaluated = covered
    return evaluated, covered


def _d1_error_mask(pred_vals, gt_vals):
    err = np.abs(pred_vals.astype(np.float64) - gt_vals.astype(np.float64))
    return (err > D1_ABS_THRESHOLD) & (err > D1_REL_THRESHOLD * gt_vals)


def d1(pred: DisparityMap, gt: DisparityMap, mask=None, invalid_pred="error") -> float:
    """Percentage of evaluated pixels wrong by more than 3 px AND 5% of gt."""
    evaluated, covered = _eval_sets(pred, gt, mask, invalid_pred)
    total = int(evaluated.sum())
    if total == 0:
        raise UndefinedMetricError("d1: no evaluated pixels")
    bad = _d1_error_mask(pred.values[covered], gt.values[covered]).sum()
    bad += int(evaluated.sum() - covered.sum())   # uncovered pixels count as errors
    return 100.0 * bad / total


def epe(pred: DisparityMap, gt: DisparityMap, mask=None, invalid_pred="error") -> float:
    """Mean absolute disparity difference over evaluated, covered pixels."""
    _, covered = _eval_sets(pred, gt, mask, invalid_pred)
    total = int(covered.sum())
    if total == 0:
        raise UndefinedMetricError("epe: no evaluated pixels with a prediction")
    err = np.abs(pred.values[covered].astype(np.float64) - gt.values[covered].astype(np.float64))
    return float(err.sum() / total)


def bad2(pred: DisparityMap, gt: DisparityMap, mask=None, invalid_pred="error") -> float:
    """Percentage of evaluated pixels with |error| > 2 (strict)."""
    evaluated, covered = _eval_sets(pred, gt, mask, invalid_pred)
    total = int(evaluated.sum())
    if total == 0:
        raise UndefinedMetricError("bad2: no evaluated pixels")
    err = np.abs(pred.values[covered].astype(np.float64) - gt.values[covered].astype(np.float64))
    bad = int((err > BAD2_THRESHOLD).sum()) + int(evaluated.sum() - covered.sum())
    return 100.0 * bad / total


def density_overlap(proxy: DisparityMap, gt: DisparityMap) -> tuple[float, float]:
    """(labelled fraction of the image, labelled fraction of the gt support)."""
    if proxy.values.shape != gt.values.shape:
        raise ValueError("proxy and ground truth dimensions differ")
    density = 100.0 * proxy.valid.sum() / proxy.valid.size
    gt_count = int(gt.valid.sum())
    if gt_count == 0:
        raise UndefinedMetricError("overlap: ground truth has no valid pixels")
    overlap = 100.0 * (proxy.valid & gt.valid).sum() / gt_count
    return float(density), float(overlap)


def valid_correct(
    pred: DisparityMap, gt: DisparityMap, mask=None, invalid_pred="error"
) -> tuple[int, int, float]:
    """(evaluated count, non-error count, accuracy); accuracy = 100 - d1."""
    evaluated, covered = _eval_sets(pred, gt, mask, invalid_pred)
    total = int(evaluated.sum())
    if total == 0:
        raise UndefinedMetricError("valid_correct: no evaluated pixels")
    bad = int(_d1_error_mask(pred.values[covered], gt.values[covered]).sum())
    bad += int(evaluated.sum() - covered.sum())
    correct = total - bad
    return total, correct, 100.0 * correct / total


@dataclass
class DisparityCounts:
    """Raw per-frame tallies so multi-frame aggregation stays pixel-weighted."""

    eval_px: int = 0
    covered_px: int = 0
    d1_errors: int = 0
    bad2_errors: int = 0
    abs_err_sum: float = 0.0
    valid_px: int = 0      # prediction support, for density
    total_px: int = 0
    gt_px: int = 0         # ground-truth support, for overlap
    overlap_px: int = 0

    def merge(self, other: "DisparityCounts") -> None:
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(self, name) + getattr(other, name))


def frame_counts(pred: DisparityMap, gt: DisparityMap, mask=None, invalid_pred="error") -> DisparityCounts:
    """Tallies behind d1/epe/bad2/density/overlap for one frame."""
    evaluated, covered = _eval_sets(pred, gt, mask, invalid_pred)
    pv = pred.values[covered].astype(np.float64)
    gv = gt.values[covered].astype(np.float64)
    err = np.abs(pv - gv)
    uncovered = int(evaluated.sum() - covered.sum())
    return DisparityCounts(
        eval_px=int(evaluated.sum()),
        covered_px=int(covered.sum()),
        d1_errors=int(_d1_error_mask(pv, gv).sum()) + uncovered,
        bad2_errors=int((err > BAD2_THRESHOLD).sum()) + uncovered,
        abs_err_sum=float(err.sum()),
        valid_px=int(pred.valid.sum()),
        total_px=int(pred.valid.size),
        gt_px=int(gt.valid.sum()),
        overlap_px=int((pred.valid & gt.valid).sum()),
    )


@dataclass
class DepthMetrics:
    rmse: float
    rmse_log: float
    delta1: float
    delta2: float
    delta3: float
    evaluated: int
    excluded_nonpositive: int   # pixels dropped for zero/negative disparity


def depth_metrics(
    pred: DisparityMap,
    gt: DisparityMap,
    calib: Calibration,
    mask=None,
    max_depth: float = MAX_DEPTH_DEFAULT,
    invalid_pred="exclude",
) -> DepthMetrics:
    """Depth-domain errors after triangulating z = focal * baseline / d.

    Pixels whose ground-truth depth exceeds max_depth are discarded; pixels
    with non-positive disparity on either side cannot be triangulated and
    are excluded and counted. delta_k uses the strict max-ratio < 1.25^k.
    """
    _, covered = _eval_sets(pred, gt, mask, invalid_pred)
    pd = pred.values[covered].astype(np.float64)
    gd = gt.values[covered].astype(np.float64)
    positive = (pd > 0) & (gd > 0)
    excluded = int(covered.sum() - positive.sum())
    fb = calib.focal * calib.baseline
    zp = fb / pd[positive]
    zg = fb / gd[positive]
    in_range = zg <= max_depth
    zp, zg = zp[in_range], zg[in_range]
    n = len(zg)
    if n == 0:
        raise UndefinedMetricError("depth_metrics: no evaluated pixels")
    rmse = float(np.sqrt(np.mean((zp - zg) ** 2)))
    rmse_log = float(np.sqrt(np.mean((np.log(zp) - np.log(zg)) ** 2)))
    ratio = np.maximum(zp / zg, zg / zp)
    deltas = [float((ratio < 1.25 ** k).mean()) for k in (1, 2, 3)]
    return DepthMetrics(rmse, rmse_log, deltas[0], deltas[1], deltas[2], n, excluded)


def noc_mask_from_gt(gt_noc: DisparityMap, gt_all: DisparityMap) -> tuple[np.ndarray, np.ndarray]:
    """(non-occluded mask, all mask) from the two ground-truth maps.

    The non-occluded support must be contained in the full support.
    """
    if gt_noc.values.shape != gt_all.values.shape:
        raise ValueError("gt maps have different dimensions")
    if (gt_noc.valid & ~gt_all.valid).any():
        raise ValueError("non-occluded gt valid where the full gt is not")
    return gt_noc.valid.copy(), gt_all.valid.copy()


_PCT_KEYS = ("d1_pct", "bad2_pct", "density_pct", "overlap_pct", "accuracy_pct")
_3DP_KEYS = ("epe", "rmse_m", "rmse_log", "delta1", "delta2", "delta3")


def format_report(report: EvalReport, label: str) -> str:
    """One structured-text record: percentages at 2 dp, EPE/RMSE at 3 dp."""
    lines = [f"[{label}]"]
    for key in (
        "density_pct", "overlap_pct", "d1_pct", "epe", "bad2_pct",
        "valid_count", "correct_count", "accuracy_pct",
        "rmse_m", "rmse_log", "delta1", "delta2", "delta3",
    ):
        value = getattr(report, key)
        if value is None:
            continue
        if key in _PCT_KEYS:
            lines.append(f"{key} = {value:.2f}")
        elif key in _3DP_KEYS:
            lines.append(f"{key} = {value:.3f}")
        else:
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
