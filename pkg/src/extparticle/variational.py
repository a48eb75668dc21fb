"""Complex analytical mechanics and the generalized least-action step.

A holomorphic function f = P + iQ takes its "complex minimum" where P is
minimal along the real directions and maximal along the imaginary ones;
since P is harmonic, such a point is a stationary point of f. The complex
Fenchel-Legendre transform is defined through the same saddle structure,
f*(p) = stat_z (p.z - f(z)), and is an involution on the quadratic
Lagrangians used here.

``classical_hj_dp`` solves the classical Bellman recursion on a real grid
and is the hbar -> 0 baseline. ``least_action_step_residual`` checks the
quantum one-step principle: the complex action of a wave field satisfies

    S_c(z, t) = min_v (1/4) sum_j [ S_c(z - v eps - scale*(s^4-s^3)u^j, t-eps)
                                    + L(z, v) eps ]

up to O(eps^2), with the minimizing velocity grad(S_c)/m.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .field import (WaveField, _aligned_complex_action, _complex_action_gradient,
                    _fd4, _widen_mask, decompose)
from .model import PhysicalParams, VertexFrame, step_scale

__all__ = [
    "ComplexScalarField",
    "LagrangianSpec",
    "GridAction",
    "complex_min",
    "complex_fenchel_legendre",
    "fenchel_transform",
    "classical_hj_dp",
    "least_action_step_residual",
    "grid_action_to_csv",
]

_FD_STEP = 1e-5


@dataclass(eq=False)
class ComplexScalarField:
    """Scalar map on C^n with optional exact derivatives.

    value takes a (dimension,) complex vector and returns a complex scalar.
    When gradient is omitted it is replaced by fourth-order central
    differences along the real directions, which is exact enough for
    holomorphic maps. ``holomorphic`` is a promise checked by
    cauchy_riemann_residual on demand.
    """

    value: Callable
    dimension: int = 1
    gradient: Callable | None = None
    holomorphic: bool = True

    def __call__(self, z) -> complex:
        return self.value(np.atleast_1d(np.asarray(z, dtype=complex)))

    def grad(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self.gradient is not None:
            return np.atleast_1d(np.asarray(self.gradient(z), dtype=complex))
        out = np.empty(self.dimension, dtype=complex)
        for k in range(self.dimension):
            e = np.zeros(self.dimension)
            e[k] = 1.0
            f = lambda s: self.value(z + s * e)
            out[k] = (-f(2 * _FD_STEP) + 8 * f(_FD_STEP)
                      - 8 * f(-_FD_STEP) + f(-2 * _FD_STEP)) / (12 * _FD_STEP)
        return out

    def hessian(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        h = np.empty((self.dimension, self.dimension), dtype=complex)
        for k in range(self.dimension):
            e = np.zeros(self.dimension)
            e[k] = 1.0
            h[:, k] = (self.grad(z + _FD_STEP * e) - self.grad(z - _FD_STEP * e)) / (2 * _FD_STEP)
        return h

    def real_part_hessians(self, z) -> tuple:
        """Numerical Hessians of P = Re f along real and imaginary axes."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        n = self.dimension
        hxx = np.empty((n, n))
        hyy = np.empty((n, n))
        p = lambda w: self.value(w).real
        for k in range(n):
            for l in range(n):
                ek = np.zeros(n); ek[k] = 1.0
                el = np.zeros(n); el[l] = 1.0
                s = _FD_STEP
                hxx[k, l] = (p(z + s * (ek + el)) - p(z + s * (ek - el))
                             - p(z + s * (el - ek)) + p(z - s * (ek + el))) / (4 * s * s)
                hyy[k, l] = (p(z + 1j * s * (ek + el)) - p(z + 1j * s * (ek - el))
                             - p(z + 1j * s * (el - ek)) + p(z - 1j * s * (ek + el))) / (4 * s * s)
        return hxx, hyy

    def cauchy_riemann_residual(self, z) -> float:
        """Max mismatch between real- and imaginary-direction derivatives."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        worst = 0.0
        for k in range(self.dimension):
            e = np.zeros(self.dimension)
            e[k] = 1.0
            s = _FD_STEP
            f = self.value
            d_real = (-f(z + 2 * s * e) + 8 * f(z + s * e)
                      - 8 * f(z - s * e) + f(z - 2 * s * e)) / (12 * s)
            d_imag = (-f(z + 2j * s * e) + 8 * f(z + 1j * s * e)
                      - 8 * f(z - 1j * s * e) + f(z - 2j * s * e)) / (12j * s)
            worst = max(worst, float(abs(d_real - d_imag)))
        return worst


def _newton_stationary(field: ComplexScalarField, target: np.ndarray, start: np.ndarray,
                       tol: float = 1e-12, max_iter: int = 60) -> np.ndarray:
    """Solve grad f(z) = target by Newton iteration in C^n."""
    z = np.atleast_1d(np.asarray(start, dtype=complex)).copy()
    target = np.atleast_1d(np.asarray(target, dtype=complex))
    scale = max(1.0, float(np.abs(target).max()))
    best_z, best_g, prev_g = z.copy(), np.inf, np.inf
    for _ in range(max_iter):
        g = field.grad(z) - target
        gmax = float(np.abs(g).max())
        if gmax <= tol * scale:
            return z
        if gmax < best_g:
            best_g, best_z = gmax, z.copy()
        # finite-difference gradients bottom out near machine noise; once
        # the residual is tiny and stops improving, the best iterate is it
        if gmax > 0.5 * prev_g and best_g <= 1e-6 * scale:
            return best_z
        prev_g = gmax
        h = field.hessian(z)
        try:
            z = z - np.linalg.solve(h, g)
        except np.linalg.LinAlgError as err:
            raise ValueError("stationary-point search hit a singular Hessian") from err
    raise ValueError("stationary-point search did not converge")


def _check_box(z: np.ndarray, box) -> None:
    lo = np.atleast_1d(np.asarray(box[0], dtype=complex))
    hi = np.atleast_1d(np.asarray(box[1], dtype=complex))
    inside = ((z.real >= lo.real) & (z.real <= hi.real)
              & (z.imag >= lo.imag) & (z.imag <= hi.imag))
    if not inside.all():
        raise ValueError("no stationary point inside the search box")


def complex_min(field: ComplexScalarField, box, samples: int = 8, rng_seed: int = 7):
    """Saddle of P = Re f: minimal in the real directions, maximal in the
    imaginary ones. Returns (argmin, value).

    box is a (low, high) pair of complex corners. The convexity structure
    is verified on sampled points (positive/negative semidefinite Hessians
    of P), not proven.
    """
    lo = np.atleast_1d(np.asarray(box[0], dtype=complex))
    hi = np.atleast_1d(np.asarray(box[1], dtype=complex))
    if lo.size != field.dimension or hi.size != field.dimension:
        raise ValueError("box corners must match the field dimension")
    rng = np.random.default_rng(rng_seed)
    tol = 1e-6
    for _ in range(samples):
        u = rng.random(field.dimension) + 1j * rng.random(field.dimension)
        zs = lo + u.real * (hi.real - lo.real) + 1j * u.imag * (hi.imag - lo.imag)
        hxx, hyy = field.real_part_hessians(zs)
        if np.linalg.eigvalsh((hxx + hxx.T) / 2).min() < -tol:
            raise ValueError("Re f is not convex along the real directions in the box")
        if np.linalg.eigvalsh((hyy + hyy.T) / 2).max() > tol:
            raise ValueError("Re f is not concave along the imaginary directions in the box")
    start = (lo + hi) / 2.0
    z = _newton_stationary(field, np.zeros(field.dimension), start)
    _check_box(z, box)
    return z, field(z)


def complex_fenchel_legendre(field: ComplexScalarField, p, start=None):
    """Transform value f*(p) = p.z - f(z) at the stationary z, and that z."""
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    if start is None:
        start = np.zeros(field.dimension, dtype=complex)
    z = _newton_stationary(field, p, start)
    return complex(p @ z - field(z)), z


def fenchel_transform(field: ComplexScalarField) -> ComplexScalarField:
    """The transform as a field of p, with the envelope gradient z*(p)."""

    def value(p):
        val, _ = complex_fenchel_legendre(field, p)
        return val

    def gradient(p):
        _, z = complex_fenchel_legendre(field, p)
        return z

    return ComplexScalarField(value=value, dimension=field.dimension,
                              gradient=gradient, holomorphic=field.holomorphic)


@dataclass(eq=False)
class LagrangianSpec:
    """L(z, v) = m v^2 / 2 - V(z), V holomorphic (or None for free motion)."""

    mass: float
    potential: ComplexScalarField | None = None

    def velocity_part(self) -> ComplexScalarField:
        return ComplexScalarField(value=lambda v: 0.5 * self.mass * (v @ v),
                                  dimension=self.potential.dimension if self.potential else 1)

    def potential_at(self, z) -> complex:
        if self.potential is None:
            return 0.0
        return self.potential(z)

    def hamiltonian(self, z, p) -> complex:
        """Legendre transform in the velocity at fixed z."""
        p = np.atleast_1d(np.asarray(p, dtype=complex))
        return complex(p @ p / (2.0 * self.mass) + self.potential_at(z))


@dataclass(frozen=True, eq=False)
class GridAction:
    """Classical action table S(x, t) from the Bellman recursion."""

    x: np.ndarray      # (nx,)
    times: np.ndarray  # (nt,)
    values: np.ndarray  # (nt, nx)


def _interp_linear_extrap(xq: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Linear interpolation with linear extrapolation past the ends."""
    out = np.interp(xq, x, y)
    left = xq < x[0]
    right = xq > x[-1]
    if left.any():
        slope = (y[1] - y[0]) / (x[1] - x[0])
        out[left] = y[0] + slope * (xq[left] - x[0])
    if right.any():
        slope = (y[-1] - y[-2]) / (x[-1] - x[-2])
        out[right] = y[-1] + slope * (xq[right] - x[-1])
    return out


def classical_hj_dp(lagrangian: LagrangianSpec, s0, x: np.ndarray, epsilon: float,
                    steps: int, u_bound: float, n_u: int = 201) -> GridAction:
    """Bellman recursion S(x,t) = min_u [S(x - u eps, t - eps) + L(x,u) eps].

    The velocity search scans n_u uniform samples on [-u_bound, u_bound]
    and refines once with the same count around the incumbent. A minimizer
    sitting on the search boundary means the bound is too small and raises.
    """
    x = np.asarray(x, dtype=float)
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if u_bound <= 0 or n_u < 3:
        raise ValueError("need a positive velocity bound and at least 3 samples")
    m = lagrangian.mass
    if lagrangian.potential is None:
        v_nodes = np.zeros_like(x)
    else:
        v_nodes = np.array([lagrangian.potential(np.array([xi], dtype=complex)).real for xi in x])

    s_prev = np.asarray([s0(xi) for xi in x], dtype=float) if callable(s0) else np.asarray(s0, dtype=float).copy()
    values = np.empty((steps + 1, x.size))
    values[0] = s_prev

    u_coarse = np.linspace(-u_bound, u_bound, n_u)
    du = u_coarse[1] - u_coarse[0]
    for n in range(1, steps + 1):
        # Coarse scan, vectorised over nodes: rows are velocity samples.
        cost = np.empty((n_u, x.size))
        for i, u in enumerate(u_coarse):
            cost[i] = (_interp_linear_extrap(x - u * epsilon, x, s_prev)
                       + (0.5 * m * u * u - v_nodes) * epsilon)
        best = cost.argmin(axis=0)
        if (best == 0).any() or (best == n_u - 1).any():
            raise ValueError("velocity bound too small: minimizer on the search boundary")
        incumbent = u_coarse[best]
        # One refinement pass per node around its incumbent.
        offsets = np.linspace(-du, du, n_u)
        u_fine = incumbent[None, :] + offsets[:, None]           # (n_u, nx)
        xq = x[None, :] - u_fine * epsilon
        s_interp = _interp_linear_extrap(xq.ravel(), x, s_prev).reshape(xq.shape)
        cost_fine = s_interp + (0.5 * m * u_fine ** 2 - v_nodes[None, :]) * epsilon
        s_prev = cost_fine.min(axis=0)
        values[n] = s_prev
    return GridAction(x=x, times=np.arange(steps + 1) * epsilon, values=values)


def grid_action_to_csv(table: GridAction, path) -> None:
    import csv as _csv

    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["x", "t", "S"])
        for n, t in enumerate(table.times):
            for i, xi in enumerate(table.x):
                writer.writerow([repr(float(xi)), repr(float(t)), repr(float(table.values[n, i]))])


def _taylor_extension(grad: np.ndarray, hess_rows: list, anchor_index: tuple,
                      displacement: np.ndarray, base: np.ndarray) -> complex:
    """Second-order Taylor value of the complex action off the real grid."""
    idx = anchor_index
    value = base[idx]
    g = np.array([grad[a][idx] for a in range(len(displacement))])
    h = np.array([[hess_rows[a][b][idx] for b in range(len(displacement))]
                  for a in range(len(displacement))])
    return complex(value + g @ displacement + 0.5 * displacement @ h @ displacement)


def least_action_step_residual(wave_t: WaveField, wave_prev: WaveField, frame: VertexFrame,
                               params: PhysicalParams, potential=None,
                               n_samples: int = 64, sample_floor_rel: float = 1e-6) -> float:
    """One-step defect of the generalized least-action principle.

    Both fields must be eps apart in time and share a grid, with the frame
    dimension matching the grid's. The earlier complex action is carried to
    the shifted complex arguments by a second-order Taylor expansion
    anchored at the sampled node, so the extension error is absorbed by the
    O(eps^2) contract. Returns the max defect over the sampled nodes.

    Samples are drawn from the density core (rho above sample_floor_rel of
    the peak) and kept a double stencil width clear of the floor mask: the
    Hessian is a stencil of a stencil, and the log-density clamp just
    outside the floor would otherwise leak into the expansion.
    """
    grid = wave_t.grid
    if grid.dimension != frame.dimension:
        raise ValueError("frame and grid dimensions differ")
    eps = params.epsilon
    if abs((wave_t.time - wave_prev.time) - eps) > 1e-12 * max(eps, abs(wave_t.time)):
        raise ValueError("fields must be one eps apart")

    dec_t = decompose(wave_t, params)
    dec_prev = decompose(wave_prev, params)
    sc_prev = _aligned_complex_action(dec_prev, dec_t)

    grad_t = _complex_action_gradient(dec_t)
    grad_prev = _complex_action_gradient(dec_prev)
    dxs = grid.spacing
    # The gradient of a winding phase is itself periodic, so plain periodic
    # stencils give the Hessian rows; symmetry fills the lower triangle.
    hess_prev = [[_fd4(grad_prev[min(a, b)], max(a, b), dxs[max(a, b)])
                  for b in range(grid.dimension)] for a in range(grid.dimension)]

    # Last-step shifts scale*(s^P - s^(P-1)) u^j for each point.
    period = frame.period
    scale = step_scale(params, frame.dimension)
    shifts = [scale * (frame.vertices[j]
                       - frame.vertices[frame.cycle[period - 1, j]]).astype(float)
              for j in range(frame.n_points)]

    valid = ~(_widen_mask(_widen_mask(dec_t.mask)) | _widen_mask(_widen_mask(dec_prev.mask)))
    valid &= dec_t.rho >= sample_floor_rel * dec_t.rho.max()
    valid &= dec_prev.rho >= sample_floor_rel * dec_prev.rho.max()
    idxs = np.argwhere(valid)
    if idxs.size == 0:
        raise ValueError("no valid nodes to sample")
    rng = np.random.default_rng(11)
    chosen = idxs[rng.choice(len(idxs), size=min(n_samples, len(idxs)), replace=False)]

    mesh = grid.mesh()
    worst = 0.0
    for idx in chosen:
        idx = tuple(idx)
        z = np.array([mesh[a][idx] for a in range(grid.dimension)], dtype=complex)
        lhs = dec_t.complex_action[idx]
        v = np.array([grad_t[a][idx] for a in range(grid.dimension)]) / params.mass
        v_pot = 0.0 if potential is None else potential(z)
        lag = (0.5 * params.mass * (v @ v) - v_pot) * eps
        acc = 0.0
        for shift in shifts:
            disp = -v * eps - shift
            acc += _taylor_extension(grad_prev, hess_prev, idx, disp, sc_prev)
        rhs = acc / frame.n_points + lag
        worst = max(worst, float(abs(lhs - rhs)))
    return worst
