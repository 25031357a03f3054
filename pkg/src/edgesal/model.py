"""Network assembly for the six ablation variants.

Variant lattice (names are the config/CLI spelling):

* ``B`` -- U-Net baseline: side paths 2..6 fused top-down, deep supervision
  on every side, the stride-2 side prediction is the final map.
* ``B+edge_NLDF`` -- baseline plus a boundary-overlap penalty on the final
  map (no architectural change).
* ``B+edge_PROG`` -- side 2 leaves the U-Net chain and becomes a supervised
  edge branch fed top-down from the stride-4 object feature; the final map
  fuses the edge feature with that same object feature.
* ``B+edge_TDLP`` -- as above but the edge branch is fed from the topmost
  (stride-32) object feature.
* ``B+edge_TDLP+MRF_PROG`` -- object features are folded together
  progressively and the merged feature is guided by the edge feature once.
* ``B+edge_TDLP+MRF_OTO`` -- the full model: every object scale is guided
  by the edge feature one-to-one, with a learned fusion of the four guided
  predictions (ten supervised maps in total).

Only the parameters a variant actually uses are registered, so parameter
accounting per component is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import nlsem, o2ogm, psfem
from .backbone import (
    SIDE_STRIDES,
    BackboneConfig,
    extract_side_features,
    init_backbone_params,
)
from .kernels import resize_bilinear_forward
from .parameters import ParameterStore

OBJECT_LEVELS = (3, 4, 5, 6)
BASELINE_LEVELS = (2, 3, 4, 5, 6)


@dataclass(frozen=True)
class VariantSpec:
    name: str
    chain_levels: tuple[int, ...]
    edge_source: int | None  # side level feeding the edge branch
    guidance: str | None  # None | "single" | "mrf_prog" | "oto"
    iou_penalty: bool = False


_VARIANTS = {
    "B": VariantSpec("B", BASELINE_LEVELS, None, None),
    "B+edge_NLDF": VariantSpec("B+edge_NLDF", BASELINE_LEVELS, None, None, True),
    "B+edge_PROG": VariantSpec("B+edge_PROG", OBJECT_LEVELS, 3, "single"),
    "B+edge_TDLP": VariantSpec("B+edge_TDLP", OBJECT_LEVELS, 6, "single"),
    "B+edge_TDLP+MRF_PROG": VariantSpec(
        "B+edge_TDLP+MRF_PROG", OBJECT_LEVELS, 6, "mrf_prog"
    ),
    "B+edge_TDLP+MRF_OTO": VariantSpec(
        "B+edge_TDLP+MRF_OTO", OBJECT_LEVELS, 6, "oto"
    ),
}

VARIANT_NAMES = tuple(_VARIANTS)
FULL_VARIANT = "B+edge_TDLP+MRF_OTO"


def variant_spec(name: str) -> VariantSpec:
    try:
        return _VARIANTS[name]
    except KeyError:
        raise KeyError(
            f"unknown variant {name!r}; expected one of {VARIANT_NAMES}"
        ) from None


@dataclass
class PredictionSet:
    """All logit maps of one forward pass, keyed the way supervision sees them."""

    variant: str
    input_hw: tuple[int, int]
    side_logits: dict[int, ad.Node]
    edge_logit: ad.Node | None
    sub_logits: dict[int, ad.Node] = field(default_factory=dict)
    fused_logit: ad.Node | None = None
    final_logit: ad.Node = None  # always set; aliases fused or a side map

    def supervised_maps(self) -> list[tuple[str, ad.Node, int]]:
        """Ordered (name, logits, stride) for every supervised output."""
        maps: list[tuple[str, ad.Node, int]] = []
        if self.edge_logit is not None:
            maps.append(("edge", self.edge_logit, 2))
        for lvl in sorted(self.side_logits):
            maps.append((f"side{lvl}", self.side_logits[lvl], SIDE_STRIDES[lvl]))
        for lvl in sorted(self.sub_logits):
            maps.append((f"sub{lvl}", self.sub_logits[lvl], 2))
        if self.fused_logit is not None:
            maps.append(("fused", self.fused_logit, 2))
        return maps

    def final_prob(self) -> np.ndarray:
        """Stride-2 probability map of the final output."""
        return ad.stable_sigmoid(self.final_logit.value[:, :, 0])

    def final_prob_fullres(self) -> np.ndarray:
        """Final probability map bilinearly upsampled to input resolution."""
        p = ad.stable_sigmoid(self.final_logit.value)
        h, w = self.input_hw
        return resize_bilinear_forward(p, h, w)[:, :, 0]

    def edge_prob_fullres(self) -> np.ndarray | None:
        if self.edge_logit is None:
            return None
        p = ad.stable_sigmoid(self.edge_logit.value)
        h, w = self.input_hw
        return resize_bilinear_forward(p, h, w)[:, :, 0]


class SaliencyNet:
    """One variant of the edge-guided saliency network."""

    def __init__(
        self,
        variant: str,
        backbone_config: BackboneConfig,
        rng: np.random.Generator,
        dtype=np.float32,
        init: str = "he",
    ):
        self.spec = variant_spec(variant)
        self.backbone_config = backbone_config
        self.store = ParameterStore(dtype=dtype, init=init)
        self._build_params(rng)

    # -- construction -------------------------------------------------

    def _build_params(self, rng: np.random.Generator) -> None:
        cfg = self.backbone_config
        store = self.store
        init_backbone_params(store, cfg, rng)

        chain = sorted(self.spec.chain_levels, reverse=True)
        for upper, level in zip((None,) + tuple(chain), chain):
            spec = psfem.tower_spec(level, cfg)
            if upper is not None:
                upper_ch = psfem.tower_spec(upper, cfg).channels
                psfem.init_hop_params(
                    store, f"topdown/hop{upper}to{level}", upper_ch,
                    cfg.side_channels(level), rng,
                )
            psfem.init_tower_params(
                store, f"psfem/tower{level}", cfg.side_channels(level), spec, rng
            )
            psfem.init_predict_params(store, f"psfem/pred{level}", spec.channels, rng)

        if self.spec.edge_source is not None:
            src_ch = psfem.tower_spec(self.spec.edge_source, cfg).channels
            psfem.init_hop_params(
                store, f"topdown/hop{self.spec.edge_source}to2", src_ch,
                cfg.side_channels(2), rng,
            )
            edge_spec = psfem.tower_spec(2, cfg)
            psfem.init_tower_params(
                store, "nlsem/tower2", cfg.side_channels(2), edge_spec, rng
            )
            psfem.init_predict_params(store, "nlsem/pred2", edge_spec.channels, rng)

        guidance = self.spec.guidance
        if guidance is None:
            return
        edge_ch = psfem.tower_spec(2, cfg).channels
        if guidance == "mrf_prog":
            for upper, level in zip((6, 5, 4), (5, 4, 3)):
                psfem.init_hop_params(
                    store, f"mrf/hop{upper}to{level}",
                    psfem.tower_spec(upper, cfg).channels,
                    psfem.tower_spec(level, cfg).channels, rng,
                )
        guided_levels = o2ogm.GUIDED_LEVELS if guidance == "oto" else (3,)
        for level in guided_levels:
            sub_spec = psfem.tower_spec(level, cfg)
            psfem.init_hop_params(
                store, f"guide/hop{level}",
                psfem.tower_spec(level, cfg).channels, edge_ch, rng,
            )
            psfem.init_tower_params(
                store, f"o2ogm/tower{level}", edge_ch, sub_spec, rng
            )
            psfem.init_predict_params(
                store, f"o2ogm/pred{level}", sub_spec.channels, rng
            )
        if guidance == "oto":
            for level in o2ogm.GUIDED_LEVELS:
                store.add_scalar(f"o2ogm/beta{level}", o2ogm.FUSION_INIT)

    # -- execution ----------------------------------------------------

    def forward(self, image: np.ndarray) -> PredictionSet:
        store = self.store
        sides = extract_side_features(image, store, self.backbone_config)
        enhanced = psfem.topdown_fuse(sides, store, self.spec.chain_levels)
        side_logits = {
            lvl: psfem.side_predict(enhanced[lvl], f"psfem/pred{lvl}", store)
            for lvl in self.spec.chain_levels
        }
        pred = PredictionSet(
            variant=self.spec.name,
            input_hw=(image.shape[0], image.shape[1]),
            side_logits=side_logits,
            edge_logit=None,
        )

        if self.spec.edge_source is not None:
            src = enhanced[self.spec.edge_source]
            hop = f"topdown/hop{self.spec.edge_source}to2"
            c2_bar = nlsem.location_propagate(sides.c2, src, hop, store)
            edge_feat = nlsem.edge_features(c2_bar, store)
            pred.edge_logit = nlsem.edge_predict(edge_feat, store)

        guidance = self.spec.guidance
        if guidance is None:
            pred.final_logit = side_logits[min(self.spec.chain_levels)]
            return pred

        if guidance == "oto":
            for lvl in o2ogm.GUIDED_LEVELS:
                g = o2ogm.guide(enhanced[lvl], edge_feat, f"guide/hop{lvl}", store)
                pred.sub_logits[lvl] = o2ogm.sub_predict(
                    o2ogm.sub_enhance(g, lvl, store), lvl, store
                )
            pred.fused_logit = o2ogm.fuse_maps(pred.sub_logits, store)
            pred.final_logit = pred.fused_logit
            return pred

        source = (
            o2ogm.mrf_progressive(enhanced, store)
            if guidance == "mrf_prog"
            else enhanced[3]
        )
        g = o2ogm.guide(source, edge_feat, "guide/hop3", store)
        pred.sub_logits[3] = o2ogm.sub_predict(
            o2ogm.sub_enhance(g, 3, store), 3, store
        )
        pred.final_logit = pred.sub_logits[3]
        return pred

    # -- introspection ------------------------------------------------

    @property
    def dtype(self):
        return self.store.dtype

    def param_values(self) -> dict[str, np.ndarray]:
        return {name: p.value for name, p in self.store.items()}
