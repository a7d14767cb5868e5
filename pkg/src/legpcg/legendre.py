"""Legendre polynomial kernel.

Evaluation and derivatives by the three-term recurrence, Legendre-Gauss
quadrature rules, linearization of pointwise products of two Legendre
polynomials, and the conversions between the boundary-adapted basis
``phi_k = L_k - L_{k+2}`` and the raw Legendre basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GaussRule",
    "LinearizationExpansion",
    "eval_legendre",
    "eval_legendre_all",
    "legendre_table",
    "gauss_rule",
    "product_linearization",
    "normalization_constants",
    "phi_to_legendre",
    "dphi_to_legendre",
]


@dataclass(frozen=True)
class GaussRule:
    """Legendre-Gauss quadrature rule with ``order`` nodes on (-1, 1).

    Nodes are the roots of the Legendre polynomial of degree ``order``,
    strictly increasing; weights are positive and sum to 2.
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class LinearizationExpansion:
    """Expansion of L_m * L_n as a sum of Legendre polynomials.

    ``coeffs[s]`` multiplies L_{m+n-2s}, s = 0..min(m, n).  All
    coefficients are positive and sum to 1.
    """

    m: int
    n: int
    coeffs: np.ndarray


def eval_legendre(n, x):
    """Evaluate the Legendre polynomial of degree n at x (scalar or array)."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p = x.copy()
    for k in range(1, n):
        p, p_prev = ((2 * k + 1) * x * p - k * p_prev) / (k + 1), p
    return p if p.ndim else float(p)


def eval_legendre_all(nmax, x):
    """All Legendre polynomials L_0..L_nmax at x, in one upward sweep.

    Returns an array of shape (nmax+1,) + shape(x).
    """
    if nmax < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape, dtype=float)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = x
    for k in range(1, nmax):
        out[k + 1] = ((2 * k + 1) * x * out[k] - k * out[k - 1]) / (k + 1)
    return out


def legendre_table(x, nmax):
    """Vandermonde-style table T[j, n] = L_n(x_j) for a 1-D node array x."""
    x = np.asarray(x, dtype=float)
    tab = np.empty((x.size, nmax + 1), dtype=float)
    tab[:, 0] = 1.0
    if nmax >= 1:
        tab[:, 1] = x
    for k in range(1, nmax):
        tab[:, k + 1] = ((2 * k + 1) * x * tab[:, k] - k * tab[:, k - 1]) / (k + 1)
    return tab


def _legendre_and_derivative(n, x):
    """L_n(x) and L_n'(x) via the recurrence; x is a 1-D array in (-1, 1)."""
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(1, n):
        p, p_prev = ((2 * k + 1) * x * p - k * p_prev) / (k + 1), p
    # (1 - x^2) L_n' = n (L_{n-1} - x L_n)
    dp = n * (p_prev - x * p) / (1.0 - x * x)
    return p, dp


def gauss_rule(order, tol=1e-15, max_iter=100):
    """Legendre-Gauss nodes and weights by Newton iteration.

    Initial guesses are the Chebyshev-like angles cos(pi (4k+3) / (4n+2));
    the derivative in the Newton step uses
    (1 - x^2) L_n' = n (L_{n-1} - x L_n).
    """
    n = int(order)
    if n < 1:
        raise ValueError("order must be >= 1")
    if n == 1:
        return GaussRule(1, np.array([0.0]), np.array([2.0]))
    k = np.arange(n)
    x = np.cos(np.pi * (4 * k + 3) / (4 * n + 2))  # descending in x
    converged = False
    for _ in range(max_iter):
        p, dp = _legendre_and_derivative(n, x)
        dx = p / dp
        x -= dx
        if np.max(np.abs(dx)) < tol:
            converged = True
            break
    if not converged:
        worst = int(np.argmax(np.abs(dx)))
        raise RuntimeError(
            f"Newton iteration for Gauss node {worst} of order {n} "
            f"did not converge"
        )
    # one polishing step, then symmetrize nodes and weights about 0
    p, dp = _legendre_and_derivative(n, x)
    x -= p / dp
    x = x[::-1].copy()
    x = 0.5 * (x - x[::-1])
    _, dp = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    w = 0.5 * (w + w[::-1])
    return GaussRule(n, x, w)


def normalization_constants(rmax):
    """C_r = (1*3*...*(2r-1)) / (r! 2^r) for r = 0..rmax, C_0 = 1.

    Computed by the multiplicative recurrence C_r = C_{r-1} (2r-1)/(2r),
    which stays O(r^{-1/2}) and never overflows.
    """
    c = np.empty(rmax + 1)
    c[0] = 1.0
    for r in range(1, rmax + 1):
        c[r] = c[r - 1] * (2 * r - 1) / (2 * r)
    return c


def product_linearization(m, n):
    """Legendre expansion of the product L_m(x) L_n(x).

    The coefficient of L_{m+n-2s} is
    (m+n+1/2-2s)/(m+n+1/2-s) * C_s C_{m-s} C_{n-s} / C_{m+n-s}.
    """
    if m < 0 or n < 0:
        raise ValueError("degrees must be nonnegative")
    c = normalization_constants(m + n)
    s = np.arange(min(m, n) + 1)
    half = m + n + 0.5
    coeffs = (half - 2 * s) / (half - s) * c[s] * c[m - s] * c[n - s] / c[m + n - s]
    return LinearizationExpansion(m, n, coeffs)


def phi_to_legendre(u_phi, axis=-1):
    """Coefficients in the phi basis -> coefficients in the Legendre basis.

    phi_k = L_k - L_{k+2}, so the output has two more entries per axis:
    out[k] = u[k] - u[k-2] with out-of-range terms zero.
    """
    u = np.asarray(u_phi, dtype=float)
    axis = axis % u.ndim
    k = u.shape[axis]
    shape = list(u.shape)
    shape[axis] = k + 2
    out = np.zeros(shape, dtype=float)
    head = [slice(None)] * u.ndim
    tail = [slice(None)] * u.ndim
    head[axis] = slice(0, k)
    tail[axis] = slice(2, k + 2)
    out[tuple(head)] += u
    out[tuple(tail)] -= u
    return out


def dphi_to_legendre(u_phi, axis=-1):
    """Legendre coefficients of d/dx of a phi-basis expansion.

    phi_k' = -(2k+3) L_{k+1}, so output index k+1 holds -(2k+3) u[k].
    The result is zero-padded to length K+2 to match phi_to_legendre.
    """
    u = np.asarray(u_phi, dtype=float)
    axis = axis % u.ndim
    k = u.shape[axis]
    shape = list(u.shape)
    shape[axis] = k + 2
    out = np.zeros(shape, dtype=float)
    mid = [slice(None)] * u.ndim
    mid[axis] = slice(1, k + 1)
    coef_shape = [1] * u.ndim
    coef_shape[axis] = k
    coefs = -(2.0 * np.arange(k) + 3.0).reshape(coef_shape)
    out[tuple(mid)] = coefs * u
    return out
