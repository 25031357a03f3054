"""One-to-one guidance of object features by the salient-edge feature.

Every enhanced object feature is independently channel-matched, rectified,
upsampled to the edge feature's stride-2 grid, and added to it. A sub-side
tower (same schedule as the corresponding side path) enhances each guided
feature, a transition layer predicts a sub-side logit map, and a learned
weighted sum of the four sub-side logits forms the fused map that serves as
the network's final output.

The progressive alternative (``mrf_progressive``) instead folds the object
features into one another top-down with 1x1 hops and guides only the result,
reusing the same tower/transition code at level 3.
"""

from __future__ import annotations

from . import autodiff as ad
from .backbone import FeatureMap
from .parameters import ParameterStore
from .psfem import enhance, side_predict, upt

GUIDED_LEVELS = (3, 4, 5, 6)
FUSION_INIT = 0.25


def guide(
    f_hat: FeatureMap, edge_feat: FeatureMap, hop_prefix: str, store: ParameterStore
) -> FeatureMap:
    """Edge-guidance feature: upsampled object feature plus the edge feature."""
    return FeatureMap(
        ad.add(upt(f_hat, hop_prefix, store, edge_feat), edge_feat.node),
        edge_feat.stride,
    )


def sub_enhance(guided: FeatureMap, level: int, store: ParameterStore) -> FeatureMap:
    return enhance(guided, f"o2ogm/tower{level}", store)


def sub_predict(enhanced: FeatureMap, level: int, store: ParameterStore) -> ad.Node:
    return side_predict(enhanced, f"o2ogm/pred{level}", store)


def fuse_maps(sub_logits: dict[int, ad.Node], store: ParameterStore) -> ad.Node:
    """Learned weighted sum of the sub-side logit maps (equal shapes only)."""
    levels = sorted(sub_logits)
    shapes = {tuple(sub_logits[lvl].shape) for lvl in levels}
    if len(shapes) != 1:
        raise ValueError(f"sub-side maps disagree on shape: {sorted(shapes)}")
    return ad.weighted_sum(
        [sub_logits[lvl] for lvl in levels],
        [store[f"o2ogm/beta{lvl}"] for lvl in levels],
    )


def mrf_progressive(
    enhanced: dict[int, FeatureMap], store: ParameterStore
) -> FeatureMap:
    """Fold the multi-resolution object features top-down into the finest one."""
    levels = sorted(enhanced, reverse=True)
    merged = enhanced[levels[0]]
    merged_level = levels[0]
    for level in levels[1:]:
        target = enhanced[level]
        hop = f"mrf/hop{merged_level}to{level}"
        merged = FeatureMap(
            ad.add(target.node, upt(merged, hop, store, target)), target.stride
        )
        merged_level = level
    return merged
