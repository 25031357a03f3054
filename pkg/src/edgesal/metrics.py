"""Saliency evaluation: PR curves, max F-measure, MAE, S-measure.

Conventions, fixed here and exercised by the degenerate-case tests:

* 256 evenly spaced thresholds ``k/255``; binarization is ``pred >= t``.
* Per-image precision is 1 when nothing is predicted positive; images with
  empty ground truth are excluded from PR averaging (their count is kept in
  the report).
* ``F = (1 + b2) P R / (b2 P + R)`` with ``b2 = 0.3`` on the dataset-averaged
  P/R per threshold; 0/0 counts as 0; MaxF is the maximum over thresholds.
* S-measure follows the original structure-measure construction:
  ``S = 0.5 * S_object + 0.5 * S_region`` clamped to [0, 1], with the
  region term splitting the image at the ground-truth centroid and scoring
  each quadrant by a mean/variance/covariance similarity, and the object
  term scoring foreground/background means and dispersions weighted by the
  foreground ratio. Degenerate ground truths use ``1 - mean(pred)`` (all
  background) or ``mean(pred)`` (all foreground).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_THRESHOLDS = 256
F_BETA_SQUARED = 0.3
_EPS = 1e-12


@dataclass
class PRCurve:
    thresholds: np.ndarray  # (256,)
    precision: np.ndarray
    recall: np.ndarray
    n_images: int
    n_excluded_empty_gt: int


@dataclass
class MetricsReport:
    max_f: float
    mae: float
    s: float
    s_object: float
    s_region: float
    pr: PRCurve
    n_images: int
    n_excluded_empty_gt: int


def _check_pair(pred: np.ndarray, gt: np.ndarray) -> None:
    if pred.shape != gt.shape:
        raise ValueError(f"prediction shape {pred.shape} != gt shape {gt.shape}")


def pr_curve(preds: list[np.ndarray], gts: list[np.ndarray]) -> PRCurve:
    """Dataset-averaged precision/recall at each of the 256 thresholds."""
    if len(preds) != len(gts):
        raise ValueError(f"{len(preds)} predictions vs {len(gts)} ground truths")
    if not preds:
        raise ValueError("empty dataset")
    thresholds = np.arange(N_THRESHOLDS) / 255.0
    precision_sum = np.zeros(N_THRESHOLDS)
    recall_sum = np.zeros(N_THRESHOLDS)
    included = 0
    excluded = 0
    for pred, gt in zip(preds, gts):
        _check_pair(pred, gt)
        gt_bool = np.asarray(gt) > 0
        n_pos = int(gt_bool.sum())
        if n_pos == 0:
            excluded += 1
            continue
        values = np.sort(np.asarray(pred, dtype=np.float64).ravel())
        pos_values = np.sort(
            np.asarray(pred, dtype=np.float64)[gt_bool].ravel()
        )
        n = values.size
        pred_pos = n - np.searchsorted(values, thresholds, side="left")
        tp = n_pos - np.searchsorted(pos_values, thresholds, side="left")
        precision = np.where(pred_pos > 0, tp / np.maximum(pred_pos, 1), 1.0)
        precision_sum += precision
        recall_sum += tp / n_pos
        included += 1
    if included == 0:
        raise ValueError("every image has empty ground truth; PR is undefined")
    return PRCurve(
        thresholds=thresholds,
        precision=precision_sum / included,
        recall=recall_sum / included,
        n_images=included,
        n_excluded_empty_gt=excluded,
    )


def f_measure(precision, recall, beta2: float = F_BETA_SQUARED):
    """Elementwise weighted harmonic mean; 0/0 counts as 0."""
    p = np.asarray(precision, dtype=np.float64)
    r = np.asarray(recall, dtype=np.float64)
    denom = beta2 * p + r
    return np.where(denom > 0, (1.0 + beta2) * p * r / np.where(denom > 0, denom, 1.0), 0.0)


def max_f(pr: PRCurve, beta2: float = F_BETA_SQUARED) -> float:
    return float(f_measure(pr.precision, pr.recall, beta2).max())


def mae(pred: np.ndarray, gt: np.ndarray) -> float:
    _check_pair(pred, gt)
    return float(
        np.mean(np.abs(np.asarray(pred, dtype=np.float64) - np.asarray(gt, dtype=np.float64)))
    )


# ---------------------------------------------------------------------------
# S-measure


def _object_score(values: np.ndarray) -> float:
    if values.size == 0:
        return 0.0
    m = float(values.mean())
    sd = float(values.std())  # population std; degenerate cases are exact either way
    return 2.0 * m / (m * m + 1.0 + sd + _EPS)


def _s_object(pred: np.ndarray, gt: np.ndarray) -> float:
    fg_ratio = float(gt.mean())
    o_fg = _object_score(pred[gt > 0])
    o_bg = _object_score((1.0 - pred)[gt == 0])
    return fg_ratio * o_fg + (1.0 - fg_ratio) * o_bg


def _ssim_block(p: np.ndarray, g: np.ndarray) -> float:
    n = p.size
    if n == 0:
        return 0.0
    x, y = float(p.mean()), float(g.mean())
    norm = max(n - 1, 1)
    sig_x = float(((p - x) ** 2).sum()) / norm
    sig_y = float(((g - y) ** 2).sum()) / norm
    sig_xy = float(((p - x) * (g - y)).sum()) / norm
    alpha = 4.0 * x * y * sig_xy
    beta = (x * x + y * y) * (sig_x + sig_y)
    if alpha != 0.0:
        return alpha / (beta + _EPS)
    return 1.0 if beta == 0.0 else 0.0


def _s_region(pred: np.ndarray, gt: np.ndarray) -> float:
    h, w = gt.shape
    rows, cols = np.nonzero(gt)
    # centroid split; +1 keeps all four quadrants nonempty for interior centroids
    cy = int(np.floor(rows.mean())) + 1
    cx = int(np.floor(cols.mean())) + 1
    total = float(h * w)
    score = 0.0
    for rs, cs in ((slice(0, cy), slice(0, cx)), (slice(0, cy), slice(cx, w)),
                   (slice(cy, h), slice(0, cx)), (slice(cy, h), slice(cx, w))):
        gq = gt[rs, cs]
        weight = gq.size / total
        score += weight * _ssim_block(pred[rs, cs], gq.astype(np.float64))
    return score


def s_measure(pred: np.ndarray, gt: np.ndarray) -> tuple[float, float, float]:
    """Structure measure and its (object, region) components, gamma = 0.5."""
    _check_pair(pred, gt)
    p = np.asarray(pred, dtype=np.float64)
    g = (np.asarray(gt) > 0).astype(np.float64)
    mean_g = float(g.mean())
    if mean_g == 0.0:  # all-background ground truth
        s = 1.0 - float(p.mean())
        return s, s, s
    if mean_g == 1.0:  # all-foreground ground truth
        s = float(p.mean())
        return s, s, s
    s_o = _s_object(p, g)
    s_r = _s_region(p, g)
    s = min(max(0.5 * s_o + 0.5 * s_r, 0.0), 1.0)
    return s, s_o, s_r


# ---------------------------------------------------------------------------
# dataset-level report


def compute_report(preds: list[np.ndarray], gts: list[np.ndarray]) -> MetricsReport:
    pr = pr_curve(preds, gts)
    maes = [mae(p, np.asarray(g) > 0) for p, g in zip(preds, gts)]
    s_vals = [s_measure(p, g) for p, g in zip(preds, gts)]
    return MetricsReport(
        max_f=max_f(pr),
        mae=float(np.mean(maes)),
        s=float(np.mean([v[0] for v in s_vals])),
        s_object=float(np.mean([v[1] for v in s_vals])),
        s_region=float(np.mean([v[2] for v in s_vals])),
        pr=pr,
        n_images=len(preds),
        n_excluded_empty_gt=pr.n_excluded_empty_gt,
    )


def write_pr_csv(path, pr: PRCurve) -> None:
    with open(path, "w") as fh:
        fh.write("threshold,precision,recall\n")
        for t, p, r in zip(pr.thresholds, pr.precision, pr.recall):
            fh.write(f"{t:.9f},{p:.9f},{r:.9f}\n")


def write_report_csv(path, rows: list[dict]) -> None:
    """Fixed-column metrics CSV; one row per evaluated map set."""
    columns = [
        "name", "n_images", "n_excluded_empty_gt",
        "max_f", "mae", "s", "s_object", "s_region",
    ]
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in columns) + "\n")
