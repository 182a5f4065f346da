"""Discrete horizontal calculus on the lattice quotient.

All derivatives act by group translation (left-invariant frame), so they
are pure index arithmetic; the connection coefficients of the model frame
vanish, hence covariant derivatives are plain compositions of directional
differences.  Summation by parts is exact: every first-difference operator
is skew-adjoint for the grid inner product, and the compact sub-Laplacian
is self-adjoint.

Sign convention: sub_laplacian returns the positive operator
Delta f = -sum_a f_aa, so the heat equation du/dt = -Delta u is smoothing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import TorsionData
from .lattice import (
    XI_SCALE,
    HorizontalField,
    LatticeGrid,
    ScalarField,
    frame_data,
    shift,
    vertical_shift,
)


def first_difference(values: np.ndarray, grid: LatticeGrid, a: int) -> np.ndarray:
    return (shift(values, grid, a, +1) - shift(values, grid, a, -1)) / (2.0 * grid.h_x)


def vertical_difference(values: np.ndarray, grid: LatticeGrid, s: int) -> np.ndarray:
    return (vertical_shift(values, grid, s, +1)
            - vertical_shift(values, grid, s, -1)) / (2.0 * grid.h_t)


def grad_h(f: ScalarField) -> HorizontalField:
    """Horizontal gradient, centered group differences per frame direction."""
    grid = f.grid
    comps = np.empty((grid.dim_h,) + grid.shape)
    for a in range(grid.dim_h):
        comps[a] = first_difference(f.values, grid, a)
    return HorizontalField(grid, comps)


def reeb_derivative(f: ScalarField, s: int) -> ScalarField:
    """xi_s f via the centered vertical difference and the frame scale."""
    return ScalarField(f.grid, XI_SCALE * vertical_difference(f.values, f.grid, s))


def sub_laplacian(f: ScalarField) -> ScalarField:
    """Positive sub-Laplacian from compact per-axis second differences."""
    grid = f.grid
    acc = np.zeros(grid.shape)
    for a in range(grid.dim_h):
        acc += (shift(f.values, grid, a, +1) - 2.0 * f.values
                + shift(f.values, grid, a, -1))
    return ScalarField(grid, -acc / (grid.h_x * grid.h_x))


def hessian_component(f: ScalarField, a: int, b: int) -> np.ndarray:
    """Second covariant derivative entry (a, b) = X_a X_b f (flat frame)."""
    grid = f.grid
    return first_difference(first_difference(f.values, grid, b), grid, a)


def divergence(sigma: HorizontalField) -> ScalarField:
    """Horizontal divergence nabla* sigma = -sum_a X_a sigma_a.

    Integrates to zero exactly on the periodic quotient.
    """
    grid = sigma.grid
    acc = np.zeros(grid.shape)
    for a in range(grid.dim_h):
        acc += first_difference(sigma.components[a], grid, a)
    return ScalarField(grid, -acc)


@dataclass
class HessianData:
    """Streaming contractions of the composed horizontal Hessian.

    norm_sq      |nabla^2 f|^2 pointwise
    trace        sum_a X_a X_a f (wide stencil; the compact sub-Laplacian is
                 its negative up to an O(h^2) stencil gap)
    omega[s]     g(nabla^2 f, omega_s)
    deficit      p-deficit |H|^2 - (1/4n)(tr H)^2 - (1/4n) sum_s omega[s]^2,
                 pointwise non-negative by the Bessel inequality for the
                 orthogonal family {Id, omega_1, omega_2, omega_3}
    """

    norm_sq: np.ndarray
    trace: np.ndarray
    omega: np.ndarray
    deficit: np.ndarray


def hessian_data(f: ScalarField) -> HessianData:
    grid = f.grid
    fd = frame_data(grid)
    dim = grid.dim_h
    first = [first_difference(f.values, grid, b) for b in range(dim)]
    norm_sq = np.zeros(grid.shape)
    trace = np.zeros(grid.shape)
    om = np.zeros((3,) + grid.shape)
    for a in range(dim):
        for b in range(dim):
            hab = first_difference(first[b], grid, a)
            norm_sq += hab * hab
            if a == b:
                trace += hab
            for s in range(3):
                w = fd.omega[s][a, b]
                if w != 0.0:
                    om[s] += w * hab
    quarter = 1.0 / dim
    deficit = norm_sq - quarter * trace * trace
    for s in range(3):
        deficit = deficit - quarter * om[s] * om[s]
    return HessianData(norm_sq=norm_sq, trace=trace, omega=om, deficit=deficit)


def hessian_deficit(f: ScalarField) -> ScalarField:
    """Pointwise remainder of the Hessian-norm decomposition (non-negative)."""
    return ScalarField(f.grid, hessian_data(f).deficit)


def third_contractions(f: ScalarField):
    """The two third-derivative contractions entering the P-form.

    c1(X_a) = nabla^3 f(e_a, e_b, e_b) summed over b = -X_a(Delta f);
    c2(X_a) = sum_t nabla^3 f(I_t e_a, e_b, I_t e_b), assembled by
    recombining directional compositions through the constant I_t matrices.
    """
    grid = f.grid
    fd = frame_data(grid)
    dim = grid.dim_h
    lap = sub_laplacian(f)
    c1 = np.empty((dim,) + grid.shape)
    for a in range(dim):
        c1[a] = -first_difference(lap.values, grid, a)

    first = [first_difference(f.values, grid, b) for b in range(dim)]
    c2 = np.zeros((dim,) + grid.shape)
    for t in range(3):
        It = fd.structure.I[t]
        # G_t = g(nabla^2 f, omega_t) built from the composed Hessian
        gt = np.zeros(grid.shape)
        for b in range(dim):
            for d in range(dim):
                w = It[d, b]
                if w != 0.0:
                    gt += w * first_difference(first[d], grid, b)
        for a in range(dim):
            for c in range(dim):
                w = It[c, a]
                if w != 0.0:
                    c2[a] += w * first_difference(gt, grid, c)
    return HorizontalField(grid, c1), HorizontalField(grid, c2)


def _torsion_or_model(grid: LatticeGrid, torsion: TorsionData | None) -> TorsionData:
    if torsion is None:
        return TorsionData.zero(grid.n)
    if torsion.n != grid.n:
        raise ValueError("torsion data does not match the grid dimension")
    return torsion


def p_form(f: ScalarField, torsion: TorsionData | None = None) -> HorizontalField:
    """Third-order 1-form P_f; torsion terms use the supplied data (zero on
    the model) with the n = 1 coefficient branch."""
    grid = f.grid
    td = _torsion_or_model(grid, torsion)
    n = grid.n
    c1, c2 = third_contractions(f)
    comps = c1.components + c2.components
    needs_torsion = td.S != 0.0 or np.any(td.T0) or np.any(td.U)
    if needs_torsion:
        g = grad_h(f)
        if n > 1:
            s_coef, t_coef, u_coef = -4.0 * n * td.S, 4.0 * n, -8.0 * n * (n - 2) / (n - 1)
        else:
            s_coef, t_coef, u_coef = -4.0 * td.S, 4.0, 0.0
        t0g = np.einsum("ab,b...->a...", td.T0, g.components)
        comps = comps + s_coef * g.components + t_coef * t0g
        if u_coef != 0.0:
            comps = comps + u_coef * np.einsum("ab,b...->a...", td.U, g.components)
    return HorizontalField(grid, comps)


def p_functional(f: ScalarField, torsion: TorsionData | None = None) -> float:
    """Pairing integral of P_f against the gradient of f.

    The P-function of f counts as non-negative when this integral is
    non-positive.
    """
    grid = f.grid
    pf = p_form(f, torsion)
    g = grad_h(f)
    return float(grid.cell_volume * np.sum(pf.components * g.components))


def c_operator(f: ScalarField, torsion: TorsionData | None = None) -> ScalarField:
    """Fourth-order operator C f = -nabla* P_f."""
    div = divergence(p_form(f, torsion))
    return ScalarField(f.grid, -div.values)
