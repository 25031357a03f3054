"""Trunk network producing the five side features.

A VGG-style ladder of conv stages separated by 2x2 max pooling. The first
stage sits at full resolution and is never tapped (its receptive field is too
local to be useful); stages 2..6 are tapped right before the next pooling,
giving side features at strides 2, 4, 8, 16, 32. The sixth stage is appended
after the last pooling with the same 3x3 conv pattern as the stage before it.

Two shipped configurations: ``vgg`` mirrors the VGG-16 conv geometry
(64, 128, 256, 512, 512 channels plus the extra 512 stage), ``toy`` keeps the
stride ladder with small channel counts so a full training run fits on a desk.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .parameters import ParameterStore

SIDE_LEVELS = (2, 3, 4, 5, 6)
SIDE_STRIDES = {2: 2, 3: 4, 4: 8, 5: 16, 6: 32}


class DimensionError(ValueError):
    """Input spatial size violates the backbone contract."""


@dataclass
class FeatureMap:
    """A (H, W, C) activation grid with its downsampling stride."""

    node: ad.Node
    stride: int

    @property
    def height(self) -> int:
        return self.node.value.shape[0]

    @property
    def width(self) -> int:
        return self.node.value.shape[1]

    @property
    def channels(self) -> int:
        return self.node.value.shape[2]


@dataclass
class SideFeatureSet:
    c2: FeatureMap
    c3: FeatureMap
    c4: FeatureMap
    c5: FeatureMap
    c6: FeatureMap

    def __getitem__(self, level: int) -> FeatureMap:
        return getattr(self, f"c{level}")

    def levels(self) -> dict[int, FeatureMap]:
        return {lvl: self[lvl] for lvl in SIDE_LEVELS}


@dataclass(frozen=True)
class BackboneConfig:
    variant: str
    stage_channels: tuple[int, ...]  # stages 1..6
    stage_convs: tuple[int, ...]
    min_input: int

    @staticmethod
    def vgg_shaped() -> "BackboneConfig":
        return BackboneConfig(
            variant="vgg",
            stage_channels=(64, 128, 256, 512, 512, 512),
            stage_convs=(2, 2, 3, 3, 3, 3),
            min_input=64,
        )

    @staticmethod
    def toy() -> "BackboneConfig":
        return BackboneConfig(
            variant="toy",
            stage_channels=(8, 8, 16, 32, 32, 32),
            stage_convs=(1, 1, 1, 1, 1, 1),
            min_input=32,
        )

    @staticmethod
    def named(name: str) -> "BackboneConfig":
        if name == "vgg":
            return BackboneConfig.vgg_shaped()
        if name == "toy":
            return BackboneConfig.toy()
        raise KeyError(f"unknown backbone variant {name!r}")

    def side_channels(self, level: int) -> int:
        return self.stage_channels[level - 1]

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "stage_channels": list(self.stage_channels),
            "stage_convs": list(self.stage_convs),
            "min_input": self.min_input,
        }

    @staticmethod
    def from_dict(d: dict) -> "BackboneConfig":
        return BackboneConfig(
            variant=d["variant"],
            stage_channels=tuple(d["stage_channels"]),
            stage_convs=tuple(d["stage_convs"]),
            min_input=int(d["min_input"]),
        )


def init_backbone_params(
    store: ParameterStore, config: BackboneConfig, rng: np.random.Generator
) -> None:
    cin = 3
    for stage, (cout, n_convs) in enumerate(
        zip(config.stage_channels, config.stage_convs), start=1
    ):
        for j in range(n_convs):
            store.add_conv(f"backbone/stage{stage}/conv{j}", 3, cin, cout, rng)
            cin = cout


def validate_input_size(height: int, width: int, config: BackboneConfig) -> None:
    for axis, size in (("height", height), ("width", width)):
        if size < config.min_input:
            raise DimensionError(
                f"input {axis} {size} is below the minimum {config.min_input}"
            )
        if size % 32 != 0:
            raise DimensionError(f"input {axis} {size} is not divisible by 32")


def extract_side_features(
    image: np.ndarray, store: ParameterStore, config: BackboneConfig
) -> SideFeatureSet:
    """Run the trunk on an (H, W, 3) image in [0, 1] and tap stages 2..6."""
    if image.ndim != 3 or image.shape[2] != 3:
        raise DimensionError(f"expected (H, W, 3) image, got {image.shape}")
    validate_input_size(image.shape[0], image.shape[1], config)

    x = ad.constant(np.ascontiguousarray(image, dtype=store.dtype))
    taps: dict[int, FeatureMap] = {}
    for stage in range(1, 7):
        if stage > 1:
            x = ad.maxpool2(x)
        for j in range(config.stage_convs[stage - 1]):
            w = store[f"backbone/stage{stage}/conv{j}/w"]
            b = store[f"backbone/stage{stage}/conv{j}/b"]
            x = ad.relu(ad.conv2d(x, w, b))
        if stage >= 2:
            taps[stage] = FeatureMap(x, SIDE_STRIDES[stage])
    return SideFeatureSet(taps[2], taps[3], taps[4], taps[5], taps[6])
