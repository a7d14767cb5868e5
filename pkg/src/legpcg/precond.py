"""Sparse preconditioner built from truncated Legendre coefficient series.

Each coefficient function is replaced by a short Legendre series
p_t = sum_s hat_s L_s per direction.  The resulting Galerkin matrix is a
hat-weighted sum of Kronecker products of banded 1-D building blocks

    S^(t)[i, m] = (L_t phi_i', phi_m'),   M^(t)[i, m] = (L_t phi_i, phi_m),

assembled diagonal-by-diagonal so that no dense or intermediate Kronecker
factor is ever materialized.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.sparse as sp

from .legendre import GaussRule, gauss_rule, legendre_table
from .sparse import SparseMatrix
from .transforms import TransformPlan, tensor_fdlt

__all__ = [
    "TruncatedCoefficient",
    "BandedBlock",
    "expand_coefficient",
    "building_blocks_1d",
    "assemble_M",
    "predicted_bandwidth",
]

# largest chunk of quadrature nodes processed at once in block assembly
_CHUNK = 512


@dataclass(frozen=True)
class TruncatedCoefficient:
    """Tensor-product Legendre series of per-axis degree at most t."""

    dim: int
    t: int
    hat: np.ndarray

    def __post_init__(self):
        if self.hat.shape != (self.t + 1,) * self.dim:
            raise ValueError(f"hat tensor shape {self.hat.shape} does not "
                             f"match (t+1)^d = {(self.t + 1,) * self.dim}")

    def evaluate(self, axes):
        """Series values on the tensor grid spanned by 1-D node arrays."""
        if len(axes) != self.dim:
            raise ValueError("one axis array per dimension required")
        out = self.hat
        for a, x in enumerate(axes):
            tab = legendre_table(np.asarray(x, dtype=float), self.t)
            out = np.moveaxis(np.tensordot(tab, out, axes=([1], [a])), 0, a)
        return out

    def evaluate_points(self, *coords):
        """Series values at scattered points (one coordinate array each)."""
        coords = [np.asarray(c, dtype=float) for c in coords]
        if len(coords) != self.dim:
            raise ValueError("one coordinate array per dimension required")
        out = self.hat
        for i, c in enumerate(coords):
            tab = legendre_table(c.ravel(), self.t)  # (npts, t+1)
            out = np.einsum("pa,a...->p...", tab, out) if i == 0 \
                else np.einsum("pa,pa...->p...", tab, out)
        return out.reshape(coords[0].shape)


def expand_coefficient(field, t, dim):
    """Truncate a coefficient field to a degree-t Legendre series per axis.

    Samples on an oversampled Gauss grid of max(2(t+1), 32) points per
    axis before transforming, to keep aliasing out of the retained modes.
    """
    if t < 0:
        raise ValueError("cutoff t must be nonnegative")
    p = max(2 * (t + 1), 32)
    plan = TransformPlan(p, mode="reference")
    vals = field.on_grid([plan.rule.nodes] * dim)
    hat = tensor_fdlt(plan, vals)
    return TruncatedCoefficient(dim, t, hat[(slice(0, t + 1),) * dim].copy())


@dataclass(frozen=True)
class BandedBlock:
    """One banded 1-D building block stored diagonal-by-diagonal.

    ``diags[o][i]`` holds entry (i, i+o); rows where i+o falls outside
    the block are zero-padded so every diagonal has length ``size``.
    Only structurally nonzero offsets (|o| within the band, o = t mod 2)
    are stored.
    """

    kind: str  # "stiff" or "mass"
    t: int
    size: int
    diags: dict

    def to_dense(self):
        a = np.zeros((self.size, self.size))
        for o, d in self.diags.items():
            rows = np.arange(max(0, -o), self.size - max(0, o))
            a[rows, rows + o] = d[rows]
        return a


def _structural_offsets(kind, t):
    reach = t if kind == "stiff" else t + 2
    return [o for o in range(-reach, reach + 1) if (o - t) % 2 == 0]


def building_blocks_1d(T, K, plan):
    """Quadrature-exact blocks S^(0..T), M^(0..T) of size K x K.

    ``plan`` supplies the Gauss rule (a TransformPlan or a bare
    GaussRule); its order must be at least K + ceil(T/2) + 1 so every
    integrand is integrated exactly.  Work is chunked over quadrature
    nodes, so only O(chunk * K) memory is used regardless of K.
    """
    if T < 0 or K < 1:
        raise ValueError("need T >= 0 and K >= 1")
    rule = plan if isinstance(plan, GaussRule) else plan.rule
    # highest-degree integrand is L_T phi_{K-1}^2, of degree 2K + 2 + T
    needed = K + T // 2 + 2
    if rule.order < needed:
        raise ValueError(
            f"quadrature order {rule.order} is insufficient for exact "
            f"blocks with T={T}, K={K}: need at least {needed}")
    acc_s = [{o: np.zeros(K) for o in _structural_offsets("stiff", t)}
             for t in range(T + 1)]
    acc_m = [{o: np.zeros(K) for o in _structural_offsets("mass", t)}
             for t in range(T + 1)]
    dcoef = -(2.0 * np.arange(K) + 3.0)
    for lo in range(0, rule.order, _CHUNK):
        hi = min(lo + _CHUNK, rule.order)
        tab = legendre_table(rule.nodes[lo:hi], K + 1)
        phi = tab[:, :K] - tab[:, 2:K + 2]
        dphi = dcoef * tab[:, 1:K + 1]
        w = rule.weights[lo:hi]
        for t in range(T + 1):
            wt = w * tab[:, t]
            for mats, acc in ((dphi, acc_s[t]), (phi, acc_m[t])):
                for o in acc:
                    if o < 0:
                        continue
                    acc[o][:K - o] += np.einsum(
                        "p,pi,pi->i", wt, mats[:, :K - o], mats[:, o:])
    # mirror sub-diagonals from the computed super-diagonals (symmetry)
    for acc in itertools.chain(acc_s, acc_m):
        for o in acc:
            if o < 0:
                acc[o][-o:] = acc[-o][:K + o]
    s_blocks = [BandedBlock("stiff", t, K, acc_s[t]) for t in range(T + 1)]
    m_blocks = [BandedBlock("mass", t, K, acc_m[t]) for t in range(T + 1)]
    return s_blocks, m_blocks


def _diag_stack(blocks, lens, offset, K):
    """Rows 0..lens-1: diagonal ``offset`` of block degree t (zeros when
    the offset is outside that block's structure)."""
    out = np.zeros((lens, K))
    for t in range(lens):
        d = blocks[t].diags.get(offset)
        if d is not None:
            out[t] = d
    return out


def _hat_groups(spec, t1, t2):
    """(hat tensor, stiff-axis index or None) terms of the preconditioner.

    The hat tensor carries one axis per space direction; mass-only axes
    of the per-axis diffusion form have length 1 (degree-0 weight)."""
    d = spec.dim
    groups = []
    if spec.axis_betas is not None:
        cuts = t1 if isinstance(t1, (tuple, list)) else (t1,) * d
        if len(cuts) != d:
            raise ValueError("one diffusion cutoff per axis required")
        for i in range(d):
            hat1 = expand_coefficient(spec.axis_betas[i], cuts[i], 1).hat
            shape = [1] * d
            shape[i] = cuts[i] + 1
            groups.append((hat1.reshape(shape), i))
    else:
        hat = expand_coefficient(spec.beta, int(t1), d).hat
        for i in range(d):
            groups.append((hat, i))
    if spec.alpha is not None and not spec.alpha.is_zero:
        groups.append((expand_coefficient(spec.alpha, int(t2), d).hat, None))
    return groups


_EINSUM = {
    1: "a,ai->i",
    2: "ab,ai,bj->ij",
    3: "abc,ai,bj,cl->ijl",
}


def assemble_M(spec, t1, t2, plan=None):
    """Assemble the sparse preconditioner for a problem spec.

    ``plan`` may be omitted; block quadrature uses an internally built
    rule of sufficient order.  Returns a CSR matrix over the K^d
    unknowns, x index fastest, symmetric by construction.
    """
    d, K = spec.dim, spec.n_modes
    if K < 1:
        raise ValueError("empty preconditioner: K = 0")
    groups = _hat_groups(spec, t1, t2)
    tmax = max(g[0].shape[a] for g in groups for a in range(d)) - 1
    rule = gauss_rule(K + tmax // 2 + 2)
    s_blocks, m_blocks = building_blocks_1d(tmax, K, rule)

    accum = {}  # offset tuple -> dense K^d tensor of diagonal values
    for hat, stiff_axis in groups:
        lens = hat.shape
        kinds = ["stiff" if a == stiff_axis else "mass" for a in range(d)]
        blocks = [s_blocks if k == "stiff" else m_blocks for k in kinds]
        reach = [lens[a] - 1 + (0 if kinds[a] == "stiff" else 2)
                 for a in range(d)]
        per_axis = []
        for a in range(d):
            cand = {}
            for o in range(-reach[a], reach[a] + 1):
                par = o % 2
                if par >= lens[a]:
                    continue  # no degree of matching parity retained
                cand[o] = _diag_stack(blocks[a], lens[a], o, K)[par::2]
            per_axis.append(cand)
        for combo in itertools.product(*[sorted(c) for c in per_axis]):
            sub = hat[tuple(slice(o % 2, None, 2) for o in combo)]
            mats = [per_axis[a][combo[a]] for a in range(d)]
            term = np.einsum(_EINSUM[d], sub, *mats, optimize=True)
            if combo in accum:
                accum[combo] += term
            else:
                accum[combo] = term

    _symmetrize(accum, K, d)
    return _compress(accum, K, d)


def _valid_box(offsets, K):
    return tuple(slice(max(0, -o), K - max(0, o)) for o in offsets)


def _symmetrize(accum, K, d):
    """Force exact symmetry: average each diagonal with its transpose."""
    pairs = {max(c, tuple(-o for o in c)) for c in accum}
    for combo in pairs:
        neg = tuple(-o for o in combo)
        if combo == neg:
            continue  # the main diagonal is its own transpose
        for key in (combo, neg):
            if key not in accum:
                accum[key] = np.zeros((K,) * d)
        box = _valid_box(combo, K)
        shifted = _valid_box(neg, K)
        avg = 0.5 * (accum[combo][box] + accum[neg][shifted])
        accum[combo][box] = avg
        accum[neg][shifted] = avg


def _compress(accum, K, d):
    """Diagonal dictionary -> CSR, dropping magnitudes below 1e-300."""
    n = K ** d
    stride = np.array([K ** a for a in range(d)], dtype=np.int64)
    rows, cols, vals = [], [], []
    for combo in sorted(accum):
        box = _valid_box(combo, K)
        vbox = accum.pop(combo)[box]
        keep = np.abs(vbox) >= 1e-300
        if not np.any(keep):
            continue
        idx_axes = [np.arange(b.start, b.stop, dtype=np.int64) for b in box]
        grid = np.meshgrid(*idx_axes, indexing="ij")
        lin = sum(g * s for g, s in zip(grid, stride))
        shift = int(np.dot(np.array(combo, dtype=np.int64), stride))
        rows.append(lin[keep])
        cols.append(lin[keep] + shift)
        vals.append(vbox[keep])
    if not rows:
        raise ValueError("assembled preconditioner has no nonzero entries")
    coo = sp.coo_matrix(
        (np.concatenate(vals),
         (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    csr = coo.tocsr()
    csr.sort_indices()
    return SparseMatrix.from_scipy(csr)


def predicted_bandwidth(t, parity, which):
    """Total diagonal count of the 1-D preconditioner parts.

    ``parity`` is the parity of the (pure-parity) coefficient function;
    ``which`` is "diffusion" or "reaction".  Mixed-parity coefficients
    should use the conservative band 2t+1 / 2t+5.
    """
    if parity not in ("even", "odd"):
        raise ValueError("parity must be 'even' or 'odd'")
    t_even = t % 2 == 0
    if which == "diffusion":
        if parity == "odd":
            return 2 * t - 1 if t_even else 2 * t + 1
        return 2 * t + 1 if t_even else 2 * t - 1
    if which == "reaction":
        if parity == "odd":
            return 2 * t + 3 if t_even else 2 * t + 5
        return 2 * t + 5 if t_even else 2 * t + 3
    raise ValueError("which must be 'diffusion' or 'reaction'")
