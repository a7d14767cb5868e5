"""Scalar coefficient fields on (-1, 1)^d and the named benchmark presets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = ["CoefficientField", "preset", "PRESETS", "zero_field", "constant_field"]


@dataclass(frozen=True)
class CoefficientField:
    """Deterministic scalar function on (-1, 1)^d.

    ``fn`` receives ``dim`` coordinate arrays (broadcastable meshgrid
    pieces) and returns values of the broadcast shape.  ``is_zero``
    marks the identically-zero field so callers can skip work.
    """

    dim: int
    fn: Callable[..., np.ndarray]
    name: str = "<callable>"
    is_zero: bool = False

    def __call__(self, *coords):
        if len(coords) != self.dim:
            raise ValueError(f"field is {self.dim}-dimensional, "
                             f"got {len(coords)} coordinates")
        vals = self.fn(*coords)
        return np.broadcast_to(np.asarray(vals, dtype=float),
                               np.broadcast_shapes(*[np.shape(c) for c in coords])).copy()

    def on_grid(self, axes):
        """Values on the tensor grid spanned by the given 1-D node arrays."""
        grids = np.meshgrid(*axes, indexing="ij")
        return self(*grids)


def zero_field(dim):
    return CoefficientField(dim, lambda *c: np.zeros(np.broadcast_shapes(
        *[np.shape(x) for x in c])), name="zero", is_zero=True)


def constant_field(dim, value, name=None):
    return CoefficientField(
        dim, lambda *c, v=float(value): np.full(np.broadcast_shapes(
            *[np.shape(x) for x in c]), v),
        name=name or f"const({value})", is_zero=(value == 0))


def _poly4(*coords):
    s = sum(2.0 * np.asarray(c) ** 2 for c in coords)
    return (s + 1.0) ** 4


def _exp2(*coords):
    return np.exp(2.0 * sum(np.asarray(c) for c in coords))


def _cos_sum(*coords):
    return np.cos(sum(np.asarray(c) for c in coords))


# 1-D building blocks used by the anisotropic cases and the rank study
_ONE_D = {
    "exp2x": lambda x: np.exp(2.0 * x),
    "cosx": np.cos,
    "expx": np.exp,
    "cos_sin": lambda x: np.cos(np.sin(x)),
    "runge100": lambda x: 1.0 / (100.0 * x * x + 1.0),
}


def _named(dim, key):
    return CoefficientField(dim, _ONE_D[key], name=key) if dim == 1 else None


PRESETS = {}


def _register(name, dim, beta=None, alpha=None, axis_betas=None):
    PRESETS[name] = {
        "dim": dim,
        "beta": beta,
        "alpha": alpha,
        "axis_betas": axis_betas,
    }


_register("example1a", 1,
          beta=CoefficientField(1, _poly4, name="(2x^2+1)^4"),
          alpha=CoefficientField(1, np.cos, name="cos(x)"))
_register("example1b", 1,
          beta=CoefficientField(1, _ONE_D["exp2x"], name="e^{2x}"),
          alpha=zero_field(1))
_register("example2a", 2,
          beta=CoefficientField(2, _poly4, name="(2x^2+2y^2+1)^4"),
          alpha=CoefficientField(2, _cos_sum, name="cos(x+y)"))
_register("example2b", 2,
          beta=CoefficientField(2, _exp2, name="e^{2(x+y)}"),
          alpha=zero_field(2))
_register("example3a", 3,
          beta=CoefficientField(3, _poly4, name="(2x^2+2y^2+2z^2+1)^4"),
          alpha=CoefficientField(3, _cos_sum, name="cos(x+y+z)"))
_register("example3b", 3,
          beta=CoefficientField(3, _exp2, name="e^{2(x+y+z)}"),
          alpha=zero_field(3))
_register("example4a", 2,
          alpha=zero_field(2),
          axis_betas=(_named(1, "exp2x"), _named(1, "cosx")))
_register("example4b", 3,
          alpha=zero_field(3),
          axis_betas=(_named(1, "exp2x"), _named(1, "cosx"), _named(1, "cosx")))

# rank-study coefficient functions (1-D)
for _key in ("expx", "cos_sin", "runge100"):
    PRESETS[_key] = {"dim": 1, "beta": _named(1, _key), "alpha": _named(1, _key),
                     "axis_betas": None}


def preset(name):
    """Look up a named coefficient preset; raises KeyError on unknown names."""
    if name not in PRESETS:
        raise KeyError(f"unknown coefficient preset {name!r}")
    return PRESETS[name]
