"""Salient-edge feature extraction.

The stride-2 side feature keeps the best local edge detail but no notion of
which edges belong to the salient object, so a top-down hop injects location
information from a high-level enhanced feature before the edge tower runs.
The default source is the topmost (stride-32) enhanced feature; the
progressive ablation variant sources from the stride-4 one instead, sharing
every other code path.
"""

from __future__ import annotations

from . import autodiff as ad
from .backbone import FeatureMap
from .parameters import ParameterStore
from .psfem import enhance, side_predict, upt


def location_propagate(
    c2: FeatureMap, source: FeatureMap, hop_prefix: str, store: ParameterStore
) -> FeatureMap:
    """Fuse top-down location information into the raw stride-2 feature."""
    return FeatureMap(ad.add(c2.node, upt(source, hop_prefix, store, c2)), c2.stride)


def edge_features(c2_bar: FeatureMap, store: ParameterStore) -> FeatureMap:
    return enhance(c2_bar, "nlsem/tower2", store)


def edge_predict(edge_feat: FeatureMap, store: ParameterStore) -> ad.Node:
    return side_predict(edge_feat, "nlsem/pred2", store)
