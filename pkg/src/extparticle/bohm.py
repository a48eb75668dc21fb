"""Pilot trajectories of the wave field and the closed-loop process.

``integrate_bohm`` advances dx/dt = grad(S)/m through a time-indexed stack
of wave-field snapshots: classic fourth-order one-step integration, cubic
interpolation in space on 1D grids (bilinear on 2D), linear interpolation
in time between snapshots.

``run_coupled`` closes the loop of the model: the extended particle's
drift is re-read from the field at every annihilation instant as the
complex velocity grad(S_c)/m evaluated at the real center of mass. The
imaginary (osmotic) part accumulates in the imaginary part of the mean and
never feeds back; the real part follows the pilot trajectory up to O(eps).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .field import WaveField, decompose, velocity_fields
from .model import DriftSpec, PhysicalParams, VertexFrame
from .process import ProcessConfig, ProcessTrajectory, run_process

__all__ = [
    "MaskedRegionError",
    "FieldSequence",
    "BohmPath",
    "CoupledRun",
    "integrate_bohm",
    "run_coupled",
    "compton_timestep",
    "bohm_path_to_csv",
    "coupled_run_to_csv",
]


class MaskedRegionError(ValueError):
    """A trajectory query landed on nodes below the density floor."""

    def __init__(self, time: float, position):
        self.time = time
        self.position = np.atleast_1d(np.asarray(position, dtype=float))
        super().__init__(f"query at t={time:.6g}, x={self.position} hit the masked region")


class FieldSequence:
    """Uniformly spaced wave-field snapshots with velocity interpolation."""

    def __init__(self, snapshots, params: PhysicalParams):
        if len(snapshots) < 2:
            raise ValueError("need at least two snapshots")
        times = np.array([s.time for s in snapshots])
        dts = np.diff(times)
        if (dts <= 0).any() or abs(dts - dts[0]).max() > 1e-10 * abs(dts[0]):
            raise ValueError("snapshots must be strictly and uniformly spaced in time")
        self.snapshots = list(snapshots)
        self.params = params
        self.t0 = float(times[0])
        self.dt = float(dts[0])
        self.t_end = float(times[-1])
        self.grid = snapshots[0].grid
        self._cache: dict[int, object] = {}

    def _fields_at(self, i: int):
        if i not in self._cache:
            dec = decompose(self.snapshots[i], self.params)
            self._cache[i] = velocity_fields(dec, self.params)
            if len(self._cache) > 8:
                self._cache.pop(min(k for k in self._cache if k != i))
        return self._cache[i]

    def _bracket(self, t: float) -> tuple[int, float]:
        rel = (t - self.t0) / self.dt
        if rel < -1e-9 or rel > len(self.snapshots) - 1 + 1e-9:
            raise ValueError(f"time {t:.6g} outside the snapshot range")
        i = int(min(max(np.floor(rel), 0), len(self.snapshots) - 2))
        return i, rel - i

    def _interp_arrays(self, fields, x: np.ndarray, t: float):
        """Spatially interpolate the per-axis velocity arrays at x."""
        grid = self.grid
        if grid.dimension == 1:
            return _interp_cubic_periodic(fields, grid, x, t, self.params)
        return _interp_bilinear_periodic(fields, grid, x, t, self.params)

    def complex_velocity(self, x, t: float) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        i, w = self._bracket(t)
        lo = self._interp_arrays(self._fields_at(i), x, t)[1]
        hi = self._interp_arrays(self._fields_at(i + 1), x, t)[1]
        return (1.0 - w) * lo + w * hi

    def bohm_velocity(self, x, t: float) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        i, w = self._bracket(t)
        lo = self._interp_arrays(self._fields_at(i), x, t)[0]
        hi = self._interp_arrays(self._fields_at(i + 1), x, t)[0]
        return (1.0 - w) * lo + w * hi


def _interp_cubic_periodic(fields, grid, x, t, params):
    """Four-point Lagrange interpolation of (bohm, complex) at x, 1D."""
    a, b, n = grid.axes[0]
    dx = (b - a) / n
    rel = (x[0] - a) / dx
    i1 = int(np.floor(rel))
    s = rel - i1
    idx = np.array([i1 - 1, i1, i1 + 1, i1 + 2]) % n
    if fields.mask[idx].any():
        raise MaskedRegionError(t, x)
    w = np.array([-s * (s - 1) * (s - 2) / 6.0,
                  (s + 1) * (s - 1) * (s - 2) / 2.0,
                  -(s + 1) * s * (s - 2) / 2.0,
                  (s + 1) * s * (s - 1) / 6.0])
    bohm = np.array([w @ fields.bohm[0][idx]])
    cplx = np.array([w @ fields.complex_velocity[0][idx]])
    return bohm, cplx


def _interp_bilinear_periodic(fields, grid, x, t, params):
    (a0, b0, n0), (a1, b1, n1) = grid.axes
    d0 = (b0 - a0) / n0
    d1 = (b1 - a1) / n1
    r0 = (x[0] - a0) / d0
    r1 = (x[1] - a1) / d1
    i0, i1 = int(np.floor(r0)), int(np.floor(r1))
    s0, s1 = r0 - i0, r1 - i1
    ii = np.array([i0, i0 + 1]) % n0
    jj = np.array([i1, i1 + 1]) % n1
    if fields.mask[np.ix_(ii, jj)].any():
        raise MaskedRegionError(t, x)
    w = np.array([[(1 - s0) * (1 - s1), (1 - s0) * s1],
                  [s0 * (1 - s1), s0 * s1]])
    bohm = np.array([(w * fields.bohm[a][np.ix_(ii, jj)]).sum() for a in range(2)])
    cplx = np.array([(w * fields.complex_velocity[a][np.ix_(ii, jj)]).sum() for a in range(2)])
    return bohm, cplx


@dataclass(frozen=True, eq=False)
class BohmPath:
    times: np.ndarray
    positions: np.ndarray  # (n, dim) real

    def at(self, t) -> np.ndarray:
        """Linear interpolation of the stored path."""
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape + (self.positions.shape[1],))
        for a in range(self.positions.shape[1]):
            out[..., a] = np.interp(t, self.times, self.positions[:, a])
        return out


@dataclass(frozen=True, eq=False)
class CoupledRun:
    trajectory: ProcessTrajectory
    path: BohmPath
    per_time: np.ndarray   # |Re mean - pilot| at every sample instant
    deviation: float       # its maximum


def integrate_bohm(source: FieldSequence, x0, t_end: float, dt: float | None = None) -> BohmPath:
    """Integrate dx/dt = pilot velocity from x0 at the source start time."""
    if dt is None:
        dt = source.dt
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end > source.t_end + 1e-9 * max(1.0, abs(source.t_end)):
        raise ValueError("t_end exceeds the stored snapshots")
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    n_steps = int(round((t_end - source.t0) / dt))
    times = source.t0 + np.arange(n_steps + 1) * dt
    out = np.empty((n_steps + 1, x.size))
    out[0] = x
    v = source.bohm_velocity
    for n in range(n_steps):
        t = times[n]
        h = min(dt, source.t_end - t)
        k1 = v(x, t)
        k2 = v(x + 0.5 * h * k1, t + 0.5 * h)
        k3 = v(x + 0.5 * h * k2, t + 0.5 * h)
        k4 = v(x + h * k3, min(t + h, source.t_end))
        x = x + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        out[n + 1] = x
    return BohmPath(times=times, positions=out)


def run_coupled(params: PhysicalParams, frame: VertexFrame, z0, source: FieldSequence,
                steps: int, path_dt: float | None = None) -> CoupledRun:
    """Drive the process off the field and compare with the pilot path."""
    drift = DriftSpec.field_coupled(lambda t, x: source.complex_velocity(x, t))
    cfg = ProcessConfig(params=params, frame=frame, z0=z0, drift=drift, steps=steps)
    t_end = steps * params.epsilon
    if t_end > source.t_end - source.t0 + 1e-9:
        raise ValueError("process runs past the stored snapshots")
    traj = run_process(cfg)
    x0 = np.atleast_1d(np.asarray(z0, dtype=complex)).real
    path = integrate_bohm(source, x0, source.t0 + t_end, dt=path_dt)
    pilot = path.at(source.t0 + traj.times)
    per_time = np.abs(traj.mean.real - pilot).max(axis=1)
    return CoupledRun(trajectory=traj, path=path, per_time=per_time,
                      deviation=float(per_time.max()))


def compton_timestep(params: PhysicalParams, dimension: int) -> float:
    """Step that spends one Planck quantum per cycle: h/(2 dim m c^2)."""
    if params.light_speed is None:
        raise ValueError("params.light_speed is required")
    if dimension not in (1, 2):
        raise ValueError("dimension must be 1 or 2")
    h = 2.0 * np.pi * params.hbar
    return h / (2.0 * dimension * params.mass * params.light_speed ** 2)


def bohm_path_to_csv(path_obj: BohmPath, path) -> None:
    dim = path_obj.positions.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "y"][: dim + 1])
        for t, pos in zip(path_obj.times, path_obj.positions):
            writer.writerow([repr(float(t))] + [repr(float(c)) for c in pos])


def coupled_run_to_csv(run: CoupledRun, path) -> None:
    traj = run.trajectory
    dim = traj.frame.dimension
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "y"][: dim + 1] + ["deviation"])
        for n, t in enumerate(traj.times):
            row = [repr(float(t))]
            row += [repr(float(c)) for c in traj.mean[n].real]
            row.append(repr(float(run.per_time[n])))
            writer.writerow(row)
