"""Learnable-parameter registry and initialization.

Every learnable array in the network lives in one ``ParameterStore`` under a
slash-separated name whose prefix identifies its group:

* ``backbone/stage{s}/conv{j}``  -- trunk convolutions
* ``psfem/tower{i}``, ``nlsem/tower2`` -- enhancement towers (T)
* ``psfem/pred{i}``, ``nlsem/pred2``   -- 1-channel transition layers (D)
* ``topdown/hop*``, ``guide/hop*``, ``mrf/hop*`` -- inter-scale 1x1
  propagation convolutions (theta)
* ``o2ogm/tower{i}`` (T'), ``o2ogm/pred{i}`` (D'), ``o2ogm/beta{i}`` (beta)

Two init schemes: ``he`` (fan-in scaled, the desk-scale default for
from-scratch training) and ``tn0.01`` (truncated normal, sigma 0.01 clipped at
two sigma, for the added layers; the trunk stays He-initialized since it is
not pretrained here). Biases start at zero, fusion weights at 0.25.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Parameter

INIT_SCHEMES = ("he", "tn0.01")


class ConfigurationError(ValueError):
    """Raised when layer wiring and parameter shapes disagree."""


def _he_weights(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    return rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)


def _truncated_normal(rng: np.random.Generator, shape, sigma: float) -> np.ndarray:
    w = rng.standard_normal(shape) * sigma
    bad = np.abs(w) > 2.0 * sigma
    while bad.any():
        w[bad] = rng.standard_normal(int(bad.sum())) * sigma
        bad = np.abs(w) > 2.0 * sigma
    return w


def param_group(name: str) -> str:
    """Map a parameter name to its architectural group."""
    if name.startswith("backbone/"):
        return "backbone"
    if name.startswith("o2ogm/beta"):
        return "beta"
    if name.startswith(("topdown/", "guide/", "mrf/")):
        return "theta"
    if name.startswith("o2ogm/tower"):
        return "T_sub"
    if name.startswith("o2ogm/pred"):
        return "D_sub"
    if name.startswith(("psfem/tower", "nlsem/tower")):
        return "T"
    if name.startswith(("psfem/pred", "nlsem/pred")):
        return "D"
    raise KeyError(f"unrecognized parameter name {name!r}")


class ParameterStore:
    """Ordered name -> Parameter mapping for one model instance."""

    def __init__(self, dtype=np.float32, init: str = "he"):
        if init not in INIT_SCHEMES:
            raise ConfigurationError(f"unknown init scheme {init!r}")
        self.dtype = np.dtype(dtype)
        self.init = init
        self._params: dict[str, Parameter] = {}

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def _register(self, name: str, value: np.ndarray) -> Parameter:
        if name in self._params:
            raise ConfigurationError(f"duplicate parameter {name!r}")
        p = Parameter(np.ascontiguousarray(value, dtype=self.dtype), name)
        self._params[name] = p
        return p

    def add_conv(
        self, name: str, kernel: int, cin: int, cout: int, rng: np.random.Generator
    ) -> tuple[Parameter, Parameter]:
        """Register weight/bias for a ``kernel x kernel`` convolution."""
        shape = (kernel, kernel, cin, cout)
        # the trunk is trained from scratch, so it is He-scaled even under
        # the truncated-normal scheme for the added layers
        if self.init == "he" or param_group(name + "/w") == "backbone":
            w = _he_weights(rng, shape, kernel * kernel * cin)
        else:
            w = _truncated_normal(rng, shape, 0.01)
        weight = self._register(name + "/w", w)
        bias = self._register(name + "/b", np.zeros(cout))
        return weight, bias

    def add_scalar(self, name: str, value: float) -> Parameter:
        return self._register(name, np.asarray(value))

    def zero_grads(self) -> None:
        for p in self._params.values():
            p.grad = None

    def n_values(self) -> int:
        return sum(p.value.size for p in self._params.values())

    def group_names(self, group: str) -> list[str]:
        return [n for n in self._params if param_group(n) == group]

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(values)
        extra = set(values) - set(self._params)
        if missing or extra:
            raise ConfigurationError(
                f"parameter set mismatch: missing={sorted(missing)} extra={sorted(extra)}"
            )
        for name, arr in values.items():
            p = self._params[name]
            if tuple(arr.shape) != tuple(p.value.shape):
                raise ConfigurationError(
                    f"shape mismatch for {name}: {arr.shape} vs {p.value.shape}"
                )
            p.value = np.ascontiguousarray(arr, dtype=self.dtype)
