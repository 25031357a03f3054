"""Hot numeric kernels with a selectable backend.

The package ships two interchangeable implementations of its inner loops:

* ``_jit`` -- numba ``@njit`` kernels (default when numba imports cleanly)
* ``_reference`` -- pure numpy, also the oracle the jit kernels are tested
  against

Selection happens once at import time through the ``EDGESAL_BACKEND``
environment variable: ``auto`` (default), ``numba``, or ``numpy``.
``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

from . import _reference

_KERNEL_NAMES = (
    "conv2d_forward",
    "conv2d_input_grad",
    "conv2d_weight_grad",
    "maxpool2_forward",
    "maxpool2_backward",
    "resize_bilinear_forward",
    "resize_bilinear_backward",
)


def _load_backend(name: str):
    if name == "numpy":
        return _reference, "numpy"
    try:
        from . import _jit
    except ImportError:
        if name == "numba":
            raise
        return _reference, "numpy"
    return _jit, "numba"


_requested = os.environ.get("EDGESAL_BACKEND", "auto").lower()
if _requested not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"EDGESAL_BACKEND must be 'auto', 'numba' or 'numpy', got {_requested!r}"
    )
_impl, _active = _load_backend(_requested)

conv2d_forward = _impl.conv2d_forward
conv2d_input_grad = _impl.conv2d_input_grad
conv2d_weight_grad = _impl.conv2d_weight_grad
maxpool2_forward = _impl.maxpool2_forward
maxpool2_backward = _impl.maxpool2_backward
resize_bilinear_forward = _impl.resize_bilinear_forward
resize_bilinear_backward = _impl.resize_bilinear_backward


def active_backend() -> str:
    """Name of the backend serving the kernel entry points."""
    return _active
