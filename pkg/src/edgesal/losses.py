"""Supervision terms and their bookkeeping.

Every supervised map is scored with summed per-pixel cross-entropy (sums, not
means, so the pixel sets in the definitions are honored verbatim; optimizer
scale absorbs the difference). The aggregate is strictly unweighted:

    modeling_total  = edge + side terms      (complementary information)
    guidance_total  = sub-side terms + fused (one-to-one guidance)
    grand_total     = modeling_total + guidance_total [+ boundary penalty]

Totals are plain left-to-right float sums so the reported identities hold to
the bit. The boundary-overlap penalty (used only by the ``B+edge_NLDF``
variant) compares Sobel gradient magnitudes of prediction and ground truth:

    penalty = 1 - 2 * sum(min(|dP|, |dY|)) / (sum |dP| + sum |dY|)

which is 0 for a perfect binary match, 1 for a flat prediction, and is
differentiable in the prediction almost everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import kernels as K
from .data import downsample_majority, downsample_max
from .model import PredictionSet

SUPERVISION_STRIDES = (2, 4, 8, 16, 32)

SOBEL_X = np.array(
    [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]]
)
SOBEL_Y = SOBEL_X.T.copy()


# ---------------------------------------------------------------------------
# ground truth at the supervision resolutions


@dataclass
class GroundTruth:
    """Binary saliency mask, salient-edge mask, and their stride pyramids.

    Saliency masks downsample by block majority (>= half foreground) to keep
    the class balance; the thin edge mask downsamples by block max so edges
    survive coarsening.
    """

    y_full: np.ndarray
    z_full: np.ndarray
    y_pyramid: dict[int, np.ndarray]
    z_pyramid: dict[int, np.ndarray]

    def y_at(self, stride: int) -> np.ndarray:
        return self.y_pyramid[stride]

    def z_at(self, stride: int) -> np.ndarray:
        return self.z_pyramid[stride]


def make_ground_truth(y: np.ndarray, z: np.ndarray) -> GroundTruth:
    y = np.ascontiguousarray(y, dtype=np.uint8)
    z = np.ascontiguousarray(z, dtype=np.uint8)
    y_pyr = {s: downsample_majority(y, s) for s in SUPERVISION_STRIDES}
    z_pyr = {s: downsample_max(z, s) for s in SUPERVISION_STRIDES}
    return GroundTruth(y, z, y_pyr, z_pyr)


# ---------------------------------------------------------------------------
# per-map losses


def bce_map(prob: np.ndarray, gt: np.ndarray) -> float:
    """Summed cross-entropy of a probability map in (0,1) against a {0,1} mask."""
    if prob.shape != gt.shape:
        raise ValueError(f"prediction shape {prob.shape} != mask shape {gt.shape}")
    p = np.asarray(prob, dtype=np.float64)
    g = np.asarray(gt, dtype=np.float64)
    return float(-np.sum(g * np.log(p) + (1.0 - g) * np.log1p(-p)))


def bce_term(logits: ad.Node, mask: np.ndarray) -> ad.Node:
    """Graph node for the summed cross-entropy of a 1-channel logit map."""
    return ad.bce_with_logits_sum(logits, mask[:, :, None])


def sobel_gradient_magnitude(arr: np.ndarray) -> np.ndarray:
    """Gradient magnitude of a 2-d map under the fixed 3x3 Sobel pair."""
    x = np.ascontiguousarray(arr, dtype=np.float64)[:, :, None]
    zero = np.zeros(1)
    wx = np.ascontiguousarray(SOBEL_X[:, :, None, None])
    wy = np.ascontiguousarray(SOBEL_Y[:, :, None, None])
    gx = K.conv2d_forward(x, wx, zero)[:, :, 0]
    gy = K.conv2d_forward(x, wy, zero)[:, :, 0]
    return np.sqrt(gx * gx + gy * gy)


def boundary_iou_penalty(prob: ad.Node, y: np.ndarray) -> ad.Node:
    """Differentiable boundary-overlap penalty of a (H, W, 1) probability node."""
    dtype = prob.value.dtype
    wx = np.ascontiguousarray(SOBEL_X[:, :, None, None], dtype=dtype)
    wy = np.ascontiguousarray(SOBEL_Y[:, :, None, None], dtype=dtype)
    zero = np.zeros(1, dtype=dtype)

    gx = K.conv2d_forward(prob.value, wx, zero)
    gy = K.conv2d_forward(prob.value, wy, zero)
    mag_p = np.sqrt(gx * gx + gy * gy)
    mag_y = sobel_gradient_magnitude(y.astype(np.float64)).astype(dtype)[:, :, None]

    denom = float(mag_p.sum()) + float(mag_y.sum())
    if denom == 0.0:
        return ad.constant(0.0)
    inter = float(np.minimum(mag_p, mag_y).sum())
    value = 1.0 - 2.0 * inter / denom

    def bwd(out: ad.Node) -> None:
        take_p = (mag_p <= mag_y).astype(dtype)
        d_mag = -2.0 * (take_p * denom - inter) / (denom * denom)
        safe = np.where(mag_p > 0, mag_p, 1.0)
        d_gx = d_mag * gx / safe
        d_gy = d_mag * gy / safe
        d_prob = K.conv2d_input_grad(
            np.ascontiguousarray(d_gx), wx
        ) + K.conv2d_input_grad(np.ascontiguousarray(d_gy), wy)
        ad.accumulate(prob, out.grad * d_prob)

    return ad.Node(value, (prob,), bwd)


# ---------------------------------------------------------------------------
# whole-network report


@dataclass
class LossReport:
    """Per-term values plus the aggregate identities of one forward pass."""

    terms: dict[str, float]
    modeling_total: float
    guidance_total: float
    penalty: float
    grand_total: float
    total_node: ad.Node = field(repr=False, default=None)

    TERM_ORDER = (
        "edge",
        "side2",
        "side3",
        "side4",
        "side5",
        "side6",
        "sub3",
        "sub4",
        "sub5",
        "sub6",
        "fused",
    )


def build_losses(
    pred: PredictionSet, gt: GroundTruth, iou_penalty: bool = False
) -> LossReport:
    """Score every supervised map and assemble the aggregate loss node."""
    modeling: list[ad.Node] = []
    guidance: list[ad.Node] = []
    terms: dict[str, float] = {}

    for name, logits, stride in pred.supervised_maps():
        mask = gt.z_at(stride) if name == "edge" else gt.y_at(stride)
        term = bce_term(logits, mask)
        terms[name] = term.value
        if name == "edge" or name.startswith("side"):
            modeling.append(term)
        else:
            guidance.append(term)

    modeling_node = ad.add_scalars(modeling)
    parts = [modeling_node]
    guidance_total = 0.0
    if guidance:
        guidance_node = ad.add_scalars(guidance)
        guidance_total = guidance_node.value
        parts.append(guidance_node)

    penalty = 0.0
    if iou_penalty:
        prob = ad.sigmoid(pred.final_logit)
        penalty_node = boundary_iou_penalty(prob, gt.y_at(2))
        penalty = penalty_node.value
        parts.append(penalty_node)

    total_node = ad.add_scalars(parts)
    return LossReport(
        terms=terms,
        modeling_total=modeling_node.value,
        guidance_total=guidance_total,
        penalty=penalty,
        grand_total=total_node.value,
        total_node=total_node,
    )
