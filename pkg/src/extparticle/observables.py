"""Period-averaged observables of the extended particle.

All statistics below average over one full period, i.e. over the steps
between two consecutive annihilation instants, and over the points. The
positions entering them are the real parts of the process samples; momenta
are finite increments m*(r(n+1) - r(n))/eps unless stated otherwise.

Two results carry the physics: the position/momentum spreads multiply to
hbar/2 exactly in 2D, and the spin (total minus orbital angular momentum)
is -hbar/2 for the "+" cycle and +hbar/2 for the "-" cycle, independent of
drift, launch point, mass and step.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .process import ProcessConfig, ProcessTrajectory, run_process

__all__ = [
    "PeriodStats",
    "SpinReport",
    "HolomorphicMap",
    "uncertainty_stats",
    "spin_z",
    "dynkin_apply",
    "dynkin_expansion_residual",
]


@dataclass(frozen=True, eq=False)
class PeriodStats:
    """Per-axis spreads over one period and their product."""

    delta_x: np.ndarray   # (dimension,)
    delta_p: np.ndarray   # (dimension,)
    product: np.ndarray   # (dimension,)
    momentum_form: str    # "increment" or "displacement"


@dataclass(frozen=True)
class SpinReport:
    """z angular momentum split into center-of-mass and internal parts."""

    total: float
    orbital: float
    intrinsic: float


def _period_window(traj: ProcessTrajectory, q: int, need_next: bool) -> tuple[int, int]:
    period = traj.frame.period
    if traj.frame.dimension == 2:
        first, last = 4 * q, 4 * q + 3
    else:
        first, last = 2 * q + 1, 2 * q + 2
    top = last + 1 if need_next else last
    if q < 0 or top > traj.times.size - 1:
        raise ValueError("trajectory does not cover the requested period")
    return first, last


def uncertainty_stats(traj: ProcessTrajectory, q: int, momentum_form: str = "increment") -> PeriodStats:
    """Spreads of position and momentum around the mean over period q.

    Positions are real parts. The "increment" momentum is
    m*(r(n+1) - r(n))/eps; the "displacement" momentum, kept because the
    one-dimensional model was originally stated with it, is
    m*(r(n) - rbar(n))/eps. Averages run over the period's instants and the
    points (1/16 weighting in 2D, 1/4 in 1D).
    """
    if momentum_form not in ("increment", "displacement"):
        raise ValueError("momentum_form must be 'increment' or 'displacement'")
    first, last = _period_window(traj, q, need_next=momentum_form == "increment")
    eps, m = traj.params.epsilon, traj.params.mass

    r = traj.points.real
    rbar = traj.mean.real
    window = slice(first, last + 1)
    dr = r[window] - rbar[window, None, :]                    # (P, J, dim)

    if momentum_form == "increment":
        p = m * (r[first + 1:last + 2] - r[window]) / eps
        pbar = m * (rbar[first + 1:last + 2] - rbar[window]) / eps
        dp = p - pbar[:, None, :]
    else:
        dp = m * dr / eps                                     # mean momentum is 0

    n_terms = dr.shape[0] * dr.shape[1]
    var_x = (dr ** 2).sum(axis=(0, 1)) / n_terms
    var_p = (dp ** 2).sum(axis=(0, 1)) / n_terms
    delta_x = np.sqrt(var_x)
    delta_p = np.sqrt(var_p)
    return PeriodStats(delta_x, delta_p, delta_x * delta_p, momentum_form)


def spin_z(traj: ProcessTrajectory, q: int) -> SpinReport:
    """Period-averaged r x p split into orbital and intrinsic parts.

    total  = (1/16) sum_n sum_j (r^j_n x p^j_n) with increment momenta,
    orbital = m * (rbar x vbar) from the period-averaged mean position and
    the period's mean velocity, intrinsic = total - orbital. The intrinsic
    part is an exact +-hbar/2 set by the cycle orientation alone.
    """
    if traj.frame.dimension != 2:
        raise ValueError("spin is defined for the two-dimensional model")
    first, last = _period_window(traj, q, need_next=True)
    eps, m = traj.params.epsilon, traj.params.mass

    r = traj.points.real
    rbar = traj.mean.real
    window = slice(first, last + 1)
    p = m * (r[first + 1:last + 2] - r[window]) / eps

    wedge = r[window, :, 0] * p[:, :, 1] - r[window, :, 1] * p[:, :, 0]
    total = wedge.sum() / (4.0 * traj.frame.n_points)

    r_avg = rbar[window].mean(axis=0)
    v_avg = (rbar[first + 1:last + 2] - rbar[window]).mean(axis=0) / eps
    orbital = m * (r_avg[0] * v_avg[1] - r_avg[1] * v_avg[0])
    return SpinReport(total=float(total), orbital=float(orbital), intrinsic=float(total - orbital))


@dataclass(frozen=True, eq=False)
class HolomorphicMap:
    """Holomorphic observable f(z, t) with its exact derivatives.

    value, time_derivative and laplacian map ((dim,) complex, float) to a
    complex scalar; gradient returns a (dim,) complex vector. Supplied
    derivatives are cross-checked against fourth-order central differences
    before use.
    """

    value: Callable
    gradient: Callable
    laplacian: Callable
    time_derivative: Callable
    name: str = "f"

    def check_derivatives(self, z: np.ndarray, t: float, h: float = 1e-2, tol: float = 1e-5) -> None:
        z = np.asarray(z, dtype=complex)
        dim = z.size
        scale = max(1.0, abs(self.value(z, t)))
        grad = np.asarray(self.gradient(z, t), dtype=complex)
        lap_fd = 0.0
        for k in range(dim):
            e = np.zeros(dim)
            e[k] = 1.0
            f = lambda s: self.value(z + s * e, t)
            d1 = (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)
            if abs(d1 - grad[k]) > tol * scale:
                raise ValueError(f"gradient of {self.name} disagrees with finite differences")
            d2 = (-f(2 * h) + 16 * f(h) - 30 * f(0.0) + 16 * f(-h) - f(-2 * h)) / (12 * h * h)
            lap_fd += d2
        if abs(lap_fd - self.laplacian(z, t)) > tol * max(scale, abs(lap_fd)):
            raise ValueError(f"laplacian of {self.name} disagrees with finite differences")
        g = lambda s: self.value(z, t + s)
        dt_fd = (-g(2 * h) + 8 * g(h) - 8 * g(-h) + g(-2 * h)) / (12 * h)
        if abs(dt_fd - self.time_derivative(z, t)) > tol * scale:
            raise ValueError(f"time derivative of {self.name} disagrees with finite differences")


def dynkin_apply(f: HolomorphicMap, z: np.ndarray, t: float, v: np.ndarray,
                 params, check: bool = True) -> complex:
    """Apply D = d/dt + v.grad - i*(hbar/2m)*laplacian to f at (z, t)."""
    z = np.asarray(z, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if check:
        f.check_derivatives(z, t)
    grad = np.asarray(f.gradient(z, t), dtype=complex)
    return (f.time_derivative(z, t) + v @ grad
            - 1j * params.hbar / (2.0 * params.mass) * f.laplacian(z, t))


def dynkin_expansion_residual(f: HolomorphicMap, cfg: ProcessConfig, q: int) -> float:
    """One-step defect of the vertex-averaged observable at t = 4q eps.

    With Y(t) the average of f over the points, the residual is
    |Y(t) - Y(t-eps) - (D f)(mean(t), t) * eps|, which shrinks as eps^2:
    the first-order offsets cancel in the vertex average and the quadratic
    ones reproduce the -i*(hbar/2m)*laplacian term of D.
    """
    if cfg.frame.dimension != 2:
        raise ValueError("the expansion residual is defined for the two-dimensional model")
    if q < 1:
        raise ValueError("need at least one completed period")
    n_t = 4 * q
    if cfg.steps < n_t:
        raise ValueError("config does not run far enough")
    traj = run_process(cfg)
    eps = cfg.params.epsilon
    t = n_t * eps

    y_t = np.mean([f.value(traj.points[n_t, j], t) for j in range(cfg.frame.n_points)])
    y_prev = np.mean([f.value(traj.points[n_t - 1, j], t - eps) for j in range(cfg.frame.n_points)])
    # The drift actually used on the step into t, recovered from the mean.
    v = (traj.mean[n_t] - traj.mean[n_t - 1]) / eps
    df = dynkin_apply(f, traj.mean[n_t], t, v, cfg.params, check=False)
    return float(abs(y_t - y_prev - df * eps))
