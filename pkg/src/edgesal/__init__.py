"""edgesal: desk-scale edge-guided salient object detection.

A from-scratch numpy/numba implementation of an edge-guided saliency
network: multi-resolution object features with top-down fusion, an
explicitly supervised salient-edge branch, one-to-one edge guidance of
every object scale, deep supervision throughout, plus the training,
evaluation, and ablation machinery needed to exercise it end to end.
"""

__version__ = "0.1.0"
