"""Progressive salient-object feature extraction.

Each tapped side feature passes through an enhancement tower of three
same-padding convolutions, each followed by a rectification. Information
flows top-down U-Net style: the enhanced feature of the scale above is
channel-matched by a 1x1 convolution, rectified, bilinearly upsampled to the
current scale, and added to the raw side feature before that scale's tower
runs. A 3x3 single-channel transition layer on every enhanced feature yields
the deeply supervised side logits.

Tower schedule (kernel, padding, channels), one row per side path:

    side 2: (3, 1, c2) x3      side 5: (5, 2, c5) x3
    side 3: (3, 1, c3) x3      side 6: (7, 3, c6) x3
    side 4: (5, 2, c4) x3

where channel counts follow the backbone configuration (128, 256, 512, 512,
512 in the vgg-shaped one). The transition layer is always (3, 1, 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .backbone import BackboneConfig, FeatureMap, SideFeatureSet
from .parameters import ConfigurationError, ParameterStore

TOWER_KERNELS = {2: 3, 3: 3, 4: 5, 5: 5, 6: 7}
TOWER_LAYERS = 3
PREDICT_KERNEL = 3


@dataclass(frozen=True)
class TowerSpec:
    kernel: int
    channels: int
    layers: int = TOWER_LAYERS

    @property
    def padding(self) -> int:
        return self.kernel // 2


def tower_spec(level: int, config: BackboneConfig) -> TowerSpec:
    return TowerSpec(TOWER_KERNELS[level], config.side_channels(level))


def init_tower_params(
    store: ParameterStore,
    prefix: str,
    cin: int,
    spec: TowerSpec,
    rng: np.random.Generator,
) -> None:
    for j in range(spec.layers):
        store.add_conv(f"{prefix}/conv{j}", spec.kernel, cin, spec.channels, rng)
        cin = spec.channels


def init_predict_params(
    store: ParameterStore, prefix: str, cin: int, rng: np.random.Generator
) -> None:
    store.add_conv(prefix, PREDICT_KERNEL, cin, 1, rng)


def init_hop_params(
    store: ParameterStore, prefix: str, cin: int, cout: int, rng: np.random.Generator
) -> None:
    store.add_conv(prefix, 1, cin, cout, rng)


def enhance(feature: FeatureMap, prefix: str, store: ParameterStore) -> FeatureMap:
    """Apply an enhancement tower: (conv -> relu) x layers, same spatial size."""
    x = feature.node
    j = 0
    while f"{prefix}/conv{j}/w" in store:
        w = store[f"{prefix}/conv{j}/w"]
        if j == 0 and w.value.shape[2] != x.value.shape[2]:
            raise ConfigurationError(
                f"tower {prefix} expects {w.value.shape[2]} input channels, "
                f"got {x.value.shape[2]}"
            )
        x = ad.relu(ad.conv2d(x, w, store[f"{prefix}/conv{j}/b"]))
        j += 1
    if j == 0:
        raise ConfigurationError(f"no tower registered under {prefix!r}")
    return FeatureMap(x, feature.stride)


def upt(
    upper: FeatureMap, hop_prefix: str, store: ParameterStore, target: FeatureMap
) -> ad.Node:
    """Channel-match, rectify, then bilinearly upsample to the target's size."""
    w = store[f"{hop_prefix}/w"]
    x = ad.relu(ad.conv2d(upper.node, w, store[f"{hop_prefix}/b"]))
    return ad.upsample_bilinear(x, target.height, target.width)


def topdown_fuse(
    sides: SideFeatureSet, store: ParameterStore, levels: tuple[int, ...]
) -> dict[int, FeatureMap]:
    """Enhance the selected side paths with top-down information flow.

    Returns the enhanced feature per level. The topmost level is enhanced
    directly; each lower one first adds the channel-matched, upsampled
    enhancement from the level above (so zeroed hop weights reduce this to
    independent per-side towers).
    """
    order = sorted(levels, reverse=True)
    enhanced: dict[int, FeatureMap] = {}
    for upper_level, level in zip((None,) + tuple(order), order):
        raw = sides[level]
        if upper_level is None:
            fused = raw
        else:
            hop = f"topdown/hop{upper_level}to{level}"
            fused = FeatureMap(
                ad.add(raw.node, upt(enhanced[upper_level], hop, store, raw)),
                raw.stride,
            )
        enhanced[level] = enhance(fused, f"psfem/tower{level}", store)
    return enhanced


def side_predict(feature: FeatureMap, prefix: str, store: ParameterStore) -> ad.Node:
    """Transition to a single-channel logit map at the feature's resolution."""
    return ad.conv2d(feature.node, store[f"{prefix}/w"], store[f"{prefix}/b"])
