"""Matrix-free application of the Galerkin diffusion and reaction matrices.

The four-step pipeline: convert the boundary-adapted coefficients (and
their axis derivatives) to raw Legendre coefficients, transform to values
at the tensor Gauss grid, multiply pointwise by the sampled coefficient
function, transform back, and contract with the closed-form pairing of
the boundary-adapted basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .coefficients import CoefficientField
from .legendre import dphi_to_legendre, phi_to_legendre
from .transforms import TransformPlan, tensor_bdlt, tensor_fdlt

__all__ = [
    "SpectralCoeffs",
    "ProblemSpec",
    "apply_A",
    "apply_B",
    "apply_system",
    "assemble_rhs",
]


@dataclass
class SpectralCoeffs:
    """Dense tensor of expansion coefficients in the boundary-adapted basis.

    ``data`` has shape K^d with K = N-1 modes per axis, axis 0 being x.
    """

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        k = self.data.shape[0] if self.data.ndim else 0
        if self.data.ndim not in (1, 2, 3) or any(
                s != k for s in self.data.shape) or k < 1:
            raise ValueError(f"coefficient tensor must be K^d with d in "
                             f"1..3, got shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("coefficient tensor contains non-finite entries")

    @property
    def dim(self):
        return self.data.ndim

    @property
    def n_modes(self):
        return self.data.shape[0]


@dataclass
class ProblemSpec:
    """One elliptic problem: dimension, cutoff N, and coefficient fields.

    ``axis_betas`` selects the generalized per-axis diffusion form
    -sum_i (beta_i du/dx_i)_{x_i}; otherwise ``beta`` is the isotropic
    diffusion coefficient.  ``alpha`` may be None or an is_zero field.
    """

    dim: int
    N: int
    beta: Optional[CoefficientField] = None
    alpha: Optional[CoefficientField] = None
    rhs: Optional[CoefficientField] = None
    axis_betas: Optional[Sequence[CoefficientField]] = None
    _grid_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.N < 3:
            raise ValueError("polynomial cutoff N must be >= 3")
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        if (self.beta is None) == (self.axis_betas is None):
            raise ValueError("exactly one of beta / axis_betas is required")
        if self.axis_betas is not None and len(self.axis_betas) != self.dim:
            raise ValueError("axis_betas must supply one 1-D field per axis")

    @property
    def n_modes(self):
        return self.N - 1

    def _check_plan(self, plan):
        if plan.order != self.N + 1:
            raise ValueError(f"plan order {plan.order} does not match "
                             f"N + 1 = {self.N + 1}")

    def grid_values(self, plan, role, positivity_floor=None):
        """Coefficient values on the tensor Gauss grid, cached per plan."""
        key = (role, plan.order)
        if key not in self._grid_cache:
            if role == "beta":
                fld = self.beta
            elif role == "alpha":
                fld = self.alpha
            elif role == "rhs":
                fld = self.rhs
            else:  # ('axis_beta', i): 1-D field broadcast along axis i
                i = role[1]
                fld = self.axis_betas[i]
                vals_1d = fld(plan.rule.nodes)
                shape = [1] * self.dim
                shape[i] = plan.order
                self._grid_cache[key] = vals_1d.reshape(shape)
                return self._grid_cache[key]
            axes = [plan.rule.nodes] * self.dim
            self._grid_cache[key] = fld.on_grid(axes)
        vals = self._grid_cache[key]
        if positivity_floor is not None and np.min(vals) <= positivity_floor:
            raise ValueError(
                f"diffusion coefficient is not positive on the grid "
                f"(min {np.min(vals):.3e})")
        return vals


def _check_input(spec, plan, u):
    spec._check_plan(plan)
    if u.dim != spec.dim or u.n_modes != spec.n_modes:
        raise ValueError(
            f"coefficient tensor shape {u.data.shape} does not match "
            f"dim={spec.dim}, K={spec.n_modes}")


def _mass_contract(v, axis):
    """Pair a Legendre coefficient tensor with phi_k along one axis:
    out_k = 2 v_k / (2k+1) - 2 v_{k+2} / (2k+5)."""
    p = v.shape[axis]
    k = p - 2
    ks = np.arange(k, dtype=float)
    shape = [1] * v.ndim
    shape[axis] = k
    lo = [slice(None)] * v.ndim
    hi = [slice(None)] * v.ndim
    lo[axis] = slice(0, k)
    hi[axis] = slice(2, k + 2)
    return (2.0 / (2 * ks + 1)).reshape(shape) * v[tuple(lo)] \
        - (2.0 / (2 * ks + 5)).reshape(shape) * v[tuple(hi)]


def _stiff_contract(v, axis):
    """Pair with phi_k' = -(2k+3) L_{k+1} along one axis: out_k = -2 v_{k+1}."""
    p = v.shape[axis]
    mid = [slice(None)] * v.ndim
    mid[axis] = slice(1, p - 1)
    return -2.0 * v[tuple(mid)]


def _diffusion_grid(spec, plan, axis):
    if spec.axis_betas is not None:
        return spec.grid_values(plan, ("axis_beta", axis), positivity_floor=0.0)
    return spec.grid_values(plan, "beta", positivity_floor=0.0)


def _apply_A_data(spec, plan, u):
    d = spec.dim
    out = np.zeros_like(u)
    for i in range(d):
        g = u
        for a in range(d):
            g = dphi_to_legendre(g, axis=a) if a == i else phi_to_legendre(g, axis=a)
        g = tensor_bdlt(plan, g)
        g *= _diffusion_grid(spec, plan, i)
        bh = tensor_fdlt(plan, g)
        for a in range(d):
            bh = _stiff_contract(bh, a) if a == i else _mass_contract(bh, a)
        out += bh
    return out


def _apply_B_data(spec, plan, u):
    d = spec.dim
    g = u
    for a in range(d):
        g = phi_to_legendre(g, axis=a)
    g = tensor_bdlt(plan, g)
    g *= spec.grid_values(plan, "alpha")
    ah = tensor_fdlt(plan, g)
    for a in range(d):
        ah = _mass_contract(ah, a)
    return ah


def apply_A(spec, plan, u):
    """Diffusion matrix action A u without forming A."""
    _check_input(spec, plan, u)
    return SpectralCoeffs(_apply_A_data(spec, plan, u.data))


def apply_B(spec, plan, u):
    """Reaction (mass-with-weight) matrix action B u without forming B."""
    _check_input(spec, plan, u)
    if spec.alpha is None or spec.alpha.is_zero:
        return SpectralCoeffs(np.zeros_like(u.data))
    return SpectralCoeffs(_apply_B_data(spec, plan, u.data))


def apply_system(spec, plan, u):
    """(A + B) u; skips the reaction path when alpha is identically zero."""
    _check_input(spec, plan, u)
    out = _apply_A_data(spec, plan, u.data)
    if spec.alpha is not None and not spec.alpha.is_zero:
        out += _apply_B_data(spec, plan, u.data)
    return SpectralCoeffs(out)


def assemble_rhs(spec, plan):
    """Load vector F_k = (I_N f, phi_k) from the right-hand-side field."""
    spec._check_plan(plan)
    if spec.rhs is None:
        raise ValueError("problem spec has no right-hand-side field")
    vals = spec.grid_values(plan, "rhs")
    fh = tensor_fdlt(plan, vals)
    for a in range(spec.dim):
        fh = _mass_contract(fh, a)
    return SpectralCoeffs(fh)
