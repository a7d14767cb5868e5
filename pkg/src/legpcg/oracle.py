"""Slow, trusted reference implementations used to validate everything else.

Dense Galerkin assembly by explicit Gauss quadrature, a dense LU solve,
and the numerical-rank experiment on off-diagonal blocks of the 1-D
system matrices.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lu_factor, lu_solve, svdvals

from .legendre import gauss_rule, legendre_table
from .precond import expand_coefficient
from .operator import ProblemSpec

__all__ = [
    "dense_assemble",
    "dense_solve",
    "numerical_rank",
    "offdiag_rank_experiment",
]

_MAX_ROWS = 4096

# einsum contractions per dimension: quadrature nodes p/q/r against the
# row (i, j, l) and column (m, n, o) basis tables
_CONTRACT = {
    1: ("p,pi,pm->im", "im"),
    2: ("pq,pi,qj,pm,qn->ijmn", "ijmn"),
    3: ("pqr,pi,qj,rk,pm,qn,ro->ijkmno", "ijkmno"),
}


def _flatten_blocks(tensor, k, d):
    """K^{2d} pairing tensor -> (K^d, K^d) matrix, x index fastest."""
    if d == 1:
        return tensor
    if d == 2:
        return tensor.transpose(1, 0, 3, 2).reshape(k * k, k * k)
    return tensor.transpose(2, 1, 0, 5, 4, 3).reshape(k ** 3, k ** 3)


def _basis_tables(nodes, k):
    tab = legendre_table(nodes, k + 1)
    phi = tab[:, :k] - tab[:, 2:k + 2]
    dphi = -(2.0 * np.arange(k) + 3.0) * tab[:, 1:k + 1]
    return phi, dphi


def _weighted_form(coeff_vals, rule_w, tables_row, tables_col, d):
    """Quadrature of (w * prod row_a) * (prod col_a) over the tensor grid."""
    wgrid = coeff_vals * np.einsum(
        ",".join("abc"[:d][a] for a in range(d)) + "->" + "abc"[:d],
        *([rule_w] * d)) if d > 1 else coeff_vals * rule_w
    spec_str, _ = _CONTRACT[d]
    return np.einsum(spec_str, wgrid, *tables_row, *tables_col, optimize=True)


def dense_assemble(spec, plan=None, use_truncated=None, which="sum"):
    """Dense system matrix by entrywise Gauss quadrature.

    Uses the same interpolation semantics as the matrix-free operator
    (an (N+1)-point rule per axis) so agreement tests are exact; with
    ``use_truncated = (t1, t2)`` the coefficients are replaced by their
    truncations and the rule order is raised to keep the quadrature
    exact for the polynomial part.  ``which`` selects the diffusion part
    ("A"), the reaction part ("B"), or their sum.
    """
    d, k = spec.dim, spec.n_modes
    if k ** d > _MAX_ROWS:
        raise ValueError(
            f"dense assembly of {k ** d} rows exceeds the {_MAX_ROWS} guard")
    if which not in ("A", "B", "sum"):
        raise ValueError("which must be 'A', 'B' or 'sum'")
    if use_truncated is None:
        rule = plan.rule if plan is not None else gauss_rule(spec.N + 1)
        tmax = 0
    else:
        t1, t2 = use_truncated
        tmax = max([t2 if t2 is not None else 0]
                   + list(t1 if isinstance(t1, (tuple, list)) else [t1]))
        rule = gauss_rule(k + (tmax + 1) // 2 + 2)
    phi, dphi = _basis_tables(rule.nodes, k)
    nodes = [rule.nodes] * d

    out = np.zeros((k ** d, k ** d))
    if which in ("A", "sum"):
        for i in range(d):
            if spec.axis_betas is not None:
                fld = spec.axis_betas[i]
                if use_truncated is not None:
                    cuts = t1 if isinstance(t1, (tuple, list)) else (t1,) * d
                    vals1 = expand_coefficient(fld, cuts[i], 1) \
                        .evaluate([rule.nodes])
                else:
                    vals1 = fld(rule.nodes)
                shape = [1] * d
                shape[i] = rule.order
                bvals = np.broadcast_to(
                    vals1.reshape(shape), (rule.order,) * d)
            elif use_truncated is not None:
                bvals = expand_coefficient(spec.beta, t1, d).evaluate(nodes)
            else:
                bvals = spec.beta.on_grid(nodes)
            rows = [dphi if a == i else phi for a in range(d)]
            pair = _weighted_form(bvals, rule.weights, rows, rows, d)
            out += _flatten_blocks(pair, k, d)
    if which in ("B", "sum") and spec.alpha is not None \
            and not spec.alpha.is_zero:
        if use_truncated is not None:
            avals = expand_coefficient(spec.alpha, t2, d).evaluate(nodes)
        else:
            avals = spec.alpha.on_grid(nodes)
        rows = [phi] * d
        pair = _weighted_form(avals, rule.weights, rows, rows, d)
        out += _flatten_blocks(pair, k, d)
    return out


def dense_solve(matrix, rhs):
    """Partial-pivoting LU solve of a dense square system."""
    matrix = np.asarray(matrix, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("matrix must be square")
    factor = lu_factor(matrix)
    if np.min(np.abs(np.diag(factor[0]))) == 0.0:
        raise np.linalg.LinAlgError("matrix is singular to working precision")
    return lu_solve(factor, rhs)


def numerical_rank(block, tau):
    """Number of singular values of magnitude at least tau.

    The threshold is absolute, not relative to the largest singular
    value: only the absolute convention makes the rank of a fixed-rank
    off-diagonal family depend on N (its singular values scale with the
    matrix normalization), which is the behaviour the published rank
    tables show.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    block = np.atleast_2d(np.asarray(block, dtype=float))
    if block.size == 0:
        return 0
    sv = svdvals(block)
    return int(np.count_nonzero(sv >= tau))


def offdiag_rank_experiment(field, which, n_list, tau_list):
    """Numerical ranks of the upper-right quarter of the 1-D matrix.

    ``field`` is the 1-D coefficient (used as diffusion for which="A",
    reaction for which="B").  For each even N the matrix of size K=N-1
    is assembled densely and the block with rows 0..(N-1)//2 - 1 and the
    remaining columns is ranked at each tau.  Returns a list of
    {"N": n, "ranks": {tau: rank}} entries.
    """
    if which not in ("A", "B"):
        raise ValueError("which must be 'A' or 'B'")
    rows = []
    for n in n_list:
        if n % 2 != 0:
            raise ValueError(f"N = {n} must be even for the half split")
        if which == "A":
            spec = ProblemSpec(dim=1, N=n, beta=field)
        else:
            from .coefficients import constant_field
            spec = ProblemSpec(dim=1, N=n, beta=constant_field(1, 1.0),
                               alpha=field)
        mat = dense_assemble(spec, which=which)
        split = (n - 1) // 2
        block = mat[:split, split:]
        rows.append({"N": n,
                     "ranks": {tau: numerical_rank(block, tau)
                               for tau in tau_list}})
    return rows
