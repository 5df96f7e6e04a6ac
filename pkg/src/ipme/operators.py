"""Finite-difference operators for the regularized pressure equation.

Pointwise evaluations follow the operator

    L[u] = eps * Lap(u) + k * beta_c(u) * <D2u Du, Du> / (|Du|^2 + delta^2)

with centered second-order stencils for gradient and Hessian, and the
full right-hand side rhs = L[u] + |Du|^2.  Array versions of the same
kernels (suffix `_field`) evaluate the whole interior at once and are
what the time steppers call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (DomainError, GridSpec, Params, RangeError, ScalarField,
                   SingularPointError)

__all__ = [
    "beta_c", "StencilEval", "stencil_eval", "L_eps_delta", "rhs_full",
    "interpolated_op", "gradient_field", "rhs_field", "rhs_core",
    "quad_form_field", "inf_lap_field", "grad_norm_sq_field",
    "set_fault_injection",
]

# delta used by interpolated_op's regularized infinity-Laplacian
INTERP_DELTA = 1e-9

# test hook: "stencil-sign-flip" flips the sign of mixed second differences
_FAULT_MODE = None


def set_fault_injection(mode: str | None) -> None:
    """Enable a deliberate stencil defect for mutation-sensitivity checks.

    Only "stencil-sign-flip" and None are accepted.  Never set this in
    production paths; the verify command uses it to prove its own suites
    can fail.
    """
    global _FAULT_MODE
    if mode not in (None, "stencil-sign-flip"):
        raise DomainError(f"unknown fault mode {mode!r}")
    _FAULT_MODE = mode


def _cross_sign() -> float:
    return -1.0 if _FAULT_MODE == "stencil-sign-flip" else 1.0


# ── Cutoff ───────────────────────────────────────────────────────────────

def beta_c(z, c: float):
    """Even C^1 cutoff: |z| for |z| >= c, quadratic blend below.

    beta_c(z) = c/2 + z^2/(2c) on |z| < c, so beta_c >= c/2 everywhere
    and the two pieces meet with matching value and slope at |z| = c.
    """
    if c <= 0.0:
        raise DomainError(f"beta_c needs c > 0, got {c}")
    z_arr = np.asarray(z, dtype=float)
    out = np.where(np.abs(z_arr) >= c, np.abs(z_arr),
                   0.5 * c + z_arr * z_arr / (2.0 * c))
    return float(out) if np.isscalar(z) or out.ndim == 0 else out


def _beta_or_abs(z, c: float):
    """beta_c when a positive cutoff is configured, plain |z| when c == 0."""
    if c > 0.0:
        return beta_c(z, c)
    z_arr = np.asarray(z, dtype=float)
    out = np.abs(z_arr)
    return float(out) if np.isscalar(z) or out.ndim == 0 else out


# ── Pointwise stencil evaluation ─────────────────────────────────────────

@dataclass
class StencilEval:
    """Derivative data at one interior node.

    grad: centered gradient, length d.
    hess: centered Hessian (symmetric), shape (d, d).
    lap: trace of hess.
    eigs: Hessian eigenvalues, ascending (diagnostic only; the scheme
    itself never uses them).
    """

    grad: np.ndarray
    hess: np.ndarray
    lap: float
    eigs: np.ndarray

    def inf_lap_reg(self, delta: float) -> float:
        """<hess grad, grad> / (|grad|^2 + delta^2).

        delta == 0 is only legal at nodes with a nonvanishing gradient.
        """
        g2 = float(self.grad @ self.grad)
        if delta == 0.0 and g2 == 0.0:
            raise SingularPointError(
                "gradient vanishes and delta == 0: unregularized "
                "infinity-Laplacian undefined here")
        num = float(self.grad @ self.hess @ self.grad)
        return num / (g2 + delta * delta)


def _check_interior(grid: GridSpec, node) -> tuple:
    node = tuple(int(v) for v in node)
    if len(node) != grid.dim:
        raise RangeError(f"node index length {len(node)} != dim {grid.dim}")
    for i, j in enumerate(node):
        if not (1 <= j <= grid.n[i] - 2):
            raise RangeError(
                f"node {node} is not interior to grid with n={grid.n}")
    return node


def stencil_eval(u: ScalarField, node) -> StencilEval:
    """Centered gradient and Hessian of a field at one interior node.

    Exact for polynomials of degree <= 2; O(h^2) consistent on smooth
    fields.  Raises RangeError at boundary nodes.
    """
    grid = u.grid
    node = _check_interior(grid, node)
    vals = u.values
    d = grid.dim
    h = grid.h

    def at(offset):
        return vals[tuple(node[i] + offset[i] for i in range(d))]

    grad = np.zeros(d)
    hess = np.zeros((d, d))
    e = [np.zeros(d, dtype=int) for _ in range(d)]
    for i in range(d):
        e[i][i] = 1
    u0 = at(np.zeros(d, dtype=int))
    for i in range(d):
        up, dn = at(e[i]), at(-e[i])
        grad[i] = (up - dn) / (2.0 * h[i])
        hess[i, i] = (up - 2.0 * u0 + dn) / (h[i] * h[i])
    sgn = _cross_sign()
    for i in range(d):
        for j in range(i + 1, d):
            val = (at(e[i] + e[j]) - at(e[i] - e[j])
                   - at(-e[i] + e[j]) + at(-e[i] - e[j])) / (4.0 * h[i] * h[j])
            hess[i, j] = hess[j, i] = sgn * val
    lap = float(np.trace(hess))
    eigs = np.linalg.eigvalsh(hess)
    return StencilEval(grad=grad, hess=hess, lap=lap, eigs=eigs)


def L_eps_delta(u: ScalarField, node, params: Params) -> float:
    """Regularized operator at one interior node:

    eps*Lap(u) + k*beta_c(u)*<D2u Du, Du>/(|Du|^2 + delta^2).
    """
    st = stencil_eval(u, node)
    val = float(u.values[tuple(node)])
    b = _beta_or_abs(val, params.c)
    return params.eps * st.lap + params.k * b * st.inf_lap_reg(params.delta)


def rhs_full(u: ScalarField, node, params: Params) -> float:
    """Full right-hand side L_eps_delta[u] + |Du|^2 at one interior node."""
    st = stencil_eval(u, node)
    val = float(u.values[tuple(node)])
    b = _beta_or_abs(val, params.c)
    g2 = float(st.grad @ st.grad)
    return params.eps * st.lap + params.k * b * st.inf_lap_reg(params.delta) + g2


def interpolated_op(w: ScalarField, node, eps_mix: float,
                    delta: float = INTERP_DELTA) -> float:
    """Convex interpolation eps_mix*Lap(w) + (1-eps_mix)*D_inf(w).

    The infinity-Laplacian part uses the delta-regularized ratio with the
    module-level default delta.
    """
    if not (0.0 <= eps_mix <= 1.0):
        raise DomainError(f"eps_mix must lie in [0, 1], got {eps_mix}")
    st = stencil_eval(w, node)
    return eps_mix * st.lap + (1.0 - eps_mix) * st.inf_lap_reg(delta)


# ── Whole-field kernels ──────────────────────────────────────────────────

def _shift(vals: np.ndarray, axis: int, off: int) -> np.ndarray:
    """Interior view of `vals` shifted by `off` along `axis`."""
    d = vals.ndim
    idx = []
    for a in range(d):
        if a == axis:
            idx.append(slice(1 + off, vals.shape[a] - 1 + off or None))
        else:
            idx.append(slice(1, -1))
    return vals[tuple(idx)]


def gradient_field(vals: np.ndarray, grid: GridSpec) -> list:
    """Centered gradient components on the interior, list of d arrays."""
    grad = []
    for i in range(grid.dim):
        up, dn = _shift(vals, i, +1), _shift(vals, i, -1)
        grad.append((up - dn) / (2.0 * grid.h[i]))
    return grad


def grad_norm_sq_field(vals: np.ndarray, grid: GridSpec) -> np.ndarray:
    g2 = np.zeros(tuple(n - 2 for n in grid.n))
    for gi in gradient_field(vals, grid):
        g2 += gi * gi
    return g2


def rhs_field(vals: np.ndarray, grid: GridSpec, params: Params) -> np.ndarray:
    """rhs_full on the whole interior at once.

    Matches the pointwise rhs_full node for node; delta == 0 requires a
    nowhere-vanishing interior gradient (SingularPointError otherwise).
    """
    return rhs_core(vals, grid, params)[0]


def quad_form_field(vals: np.ndarray, grid: GridSpec) -> tuple:
    """Interior arrays (num, g2, lap) of the stencil in one pass.

    num = <D^2 u Du, Du>, g2 = |Du|^2, lap = trace D^2 u, all with the
    centered differences used pointwise by stencil_eval.
    """
    d = grid.dim
    h = grid.h
    c0 = vals[grid.interior()]
    grad = []
    lap = np.zeros_like(c0)
    num = np.zeros_like(c0)
    g2 = np.zeros_like(c0)
    for i in range(d):
        up, dn = _shift(vals, i, +1), _shift(vals, i, -1)
        gi = (up - dn) / (2.0 * h[i])
        hii = (up - 2.0 * c0 + dn) / (h[i] * h[i])
        grad.append(gi)
        lap += hii
        num += hii * gi * gi
        g2 += gi * gi
    sgn = _cross_sign()
    for i in range(d):
        for j in range(i + 1, d):
            idx_pp = [slice(1, -1)] * d
            idx_pp[i] = slice(2, None)
            idx_pp[j] = slice(2, None)
            idx_pm = [slice(1, -1)] * d
            idx_pm[i] = slice(2, None)
            idx_pm[j] = slice(0, -2)
            idx_mp = [slice(1, -1)] * d
            idx_mp[i] = slice(0, -2)
            idx_mp[j] = slice(2, None)
            idx_mm = [slice(1, -1)] * d
            idx_mm[i] = slice(0, -2)
            idx_mm[j] = slice(0, -2)
            hij = sgn * (vals[tuple(idx_pp)] - vals[tuple(idx_pm)]
                         - vals[tuple(idx_mp)] + vals[tuple(idx_mm)]) \
                / (4.0 * h[i] * h[j])
            num += 2.0 * hij * grad[i] * grad[j]
    return num, g2, lap


def inf_lap_field(vals: np.ndarray, grid: GridSpec,
                  delta: float) -> np.ndarray:
    """Regularized 1-homogeneous quotient on the interior."""
    num, g2, _ = quad_form_field(vals, grid)
    if delta == 0.0:
        if np.any(g2 == 0.0):
            raise SingularPointError(
                "delta == 0 with vanishing interior gradient")
        return num / g2
    return num / (g2 + delta * delta)


def rhs_core(vals: np.ndarray, grid: GridSpec, params: Params) -> tuple:
    """Interior rhs plus the stability quantities it computes anyway.

    Returns (rhs, max beta_c(u), max |Du|^2) so the time stepper can form
    its CFL bound without a second stencil pass.
    """
    num, g2, lap = quad_form_field(vals, grid)
    delta = params.delta
    if delta == 0.0:
        if np.any(g2 == 0.0):
            raise SingularPointError(
                "delta == 0 with vanishing interior gradient")
        ratio = num / g2
    else:
        ratio = num / (g2 + delta * delta)
    b = _beta_or_abs(vals[grid.interior()], params.c)
    rhs = params.eps * lap + params.k * b * ratio + g2
    return rhs, float(np.max(b)) if b.size else 0.0, \
        float(np.max(g2)) if g2.size else 0.0
