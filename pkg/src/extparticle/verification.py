"""Acceptance checks wired to frozen oracles.

Every check returns a CheckResult with the measured value, the expected
value from an independent route (enumeration of the vertex cycle, analytic
solutions, hand-frozen constants), the tolerance, and the verdict. The
suite is deterministic: randomized configurations draw from fixed seeds.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import analytic
from .bohm import FieldSequence, compton_timestep, integrate_bohm, run_coupled
from .field import Grid, WaveField, complex_hj_residual, evolve, evolve_snapshots, gaussian_packet, plane_wave, superpose
from .model import DriftSpec, PhysicalParams, step_scale, vertex_frame
from .observables import HolomorphicMap, dynkin_expansion_residual, spin_z, uncertainty_stats
from .process import ProcessConfig, increment_moments, run_process
from .variational import LagrangianSpec, classical_hj_dp, least_action_step_residual

__all__ = ["CheckResult", "CHECKS", "run_checks", "fit_loglog_slope", "convergence_table"]


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    measured: float
    expected: float
    tolerance: float
    passed: bool
    wall_time_s: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] {self.check_id}: measured={self.measured:.6g} "
                f"expected={self.expected:.6g} tol={self.tolerance:.3g} "
                f"({self.wall_time_s:.2f}s) {self.detail}".rstrip())


def _timed(check_id, fn):
    t0 = time.perf_counter()
    measured, expected, tol, passed, detail = fn()
    return CheckResult(check_id=check_id, measured=float(measured), expected=float(expected),
                       tolerance=float(tol), passed=bool(passed),
                       wall_time_s=time.perf_counter() - t0, detail=detail)


def fit_loglog_slope(xs, ys) -> float:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2 or np.unique(xs).size < 2:
        raise ValueError("degenerate sweep: need at least two distinct abscissae")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def _random_configs(rng, count, dimension):
    """Randomized physical setups used by the exact-identity checks."""
    out = []
    for _ in range(count):
        params = PhysicalParams(hbar=float(rng.uniform(0.5, 2.0)),
                                mass=float(rng.uniform(0.5, 3.0)),
                                epsilon=float(rng.uniform(1e-3, 5e-2)))
        drift = rng.normal(size=dimension) + 1j * rng.normal(size=dimension) * 0.3
        z0 = rng.normal(size=dimension) + 0j
        q = int(rng.integers(1, 6))
        out.append((params, drift, z0, q))
    return out


# process / observables


def check_spin_intrinsic():
    def body():
        rng = np.random.default_rng(2024)
        worst = 0.0
        for params, drift, z0, q in _random_configs(rng, 20, 2):
            for orientation, sign in (("+", -1.0), ("-", +1.0)):
                frame = vertex_frame(2, orientation)
                cfg = ProcessConfig(params=params, frame=frame, z0=z0,
                                    drift=DriftSpec.constant(drift), steps=4 * q + 8)
                rep = spin_z(run_process(cfg), q=q)
                expected = sign * params.hbar / 2.0
                worst = max(worst, abs(rep.intrinsic - expected) / abs(expected))
        return worst, 0.0, 1e-12, worst <= 1e-12, "max rel err, 20 configs x both orientations"
    return _timed("spin-intrinsic", body)


def check_heisenberg_2d():
    def body():
        rng = np.random.default_rng(2024)
        worst = 0.0
        for params, drift, z0, q in _random_configs(rng, 20, 2):
            frame = vertex_frame(2, "+")
            cfg = ProcessConfig(params=params, frame=frame, z0=z0,
                                drift=DriftSpec.constant(drift), steps=4 * q + 8)
            stats = uncertainty_stats(run_process(cfg), q=q, momentum_form="increment")
            expected = params.hbar / 2.0
            worst = max(worst, float(np.abs(stats.product - expected).max()) / expected)
        return worst, 0.0, 1e-12, worst <= 1e-12, "max rel err of dx*dp per axis, 20 configs"
    return _timed("heisenberg-2d", body)


def check_moments_1d():
    def body():
        combos = [PhysicalParams(hbar=h, mass=m, epsilon=e)
                  for h in (0.7, 1.0, 1.9) for m in (0.6, 1.0, 2.5) for e in (2e-3, 1e-2, 4e-2)]
        frame = vertex_frame(1, "+")
        worst = 0.0
        ratios = {"increment": [], "displacement": []}
        for params in combos:
            cfg = ProcessConfig(params=params, frame=frame, z0=[0.4],
                                drift=DriftSpec.constant([0.8]), steps=16)
            traj = run_process(cfg)
            mom = increment_moments(traj, q=2)
            if np.abs(mom.mean_increment).max() != 0.0:
                return 1.0, 0.0, 0.0, False, "mean increment not exactly zero"
            gamma2 = step_scale(params, 1) ** 2
            diag = np.diagonal(mom.point_covariance)
            worst = max(worst, float(np.abs(diag - 4.0 * gamma2).max()) / abs(4.0 * gamma2))
            for form in ratios:
                stats = uncertainty_stats(traj, q=2, momentum_form=form)
                ratios[form].append(float(stats.product[0]) / params.hbar)
        spread = max(np.ptp(ratios[f]) for f in ratios)
        worst = max(worst, spread)
        c_inc, c_dis = ratios["increment"][0], ratios["displacement"][0]
        detail = (f"C(increment)={c_inc:.12f} C(displacement)={c_dis:.12f}; "
                  f"deviation from hbar/2 claim: {c_inc - 0.5:+.4f} / {c_dis - 0.5:+.4f} (reported)")
        return worst, 0.0, 1e-12, worst <= 1e-12, detail
    return _timed("moments-1d", body)


def check_convergence_order():
    def body():
        eps_list = [1e-2, 1e-3, 1e-4, 1e-5]
        t_end = 1.0
        frame = vertex_frame(2, "+")
        errs = []
        for eps in eps_list:
            params = PhysicalParams(epsilon=eps)
            cfg = ProcessConfig(params=params, frame=frame, z0=[0.1, -0.2],
                                drift=DriftSpec.constant([0.4, 0.7]),
                                steps=int(round(t_end / eps)))
            traj = run_process(cfg)
            errs.append(float(np.abs(traj.points.real - traj.mean.real[:, None, :]).max()))
        slope = fit_loglog_slope(eps_list, errs)
        return slope, 0.5, 0.05, abs(slope - 0.5) <= 0.05, f"errors {['%.3g' % e for e in errs]}"
    return _timed("convergence-order", body)


def check_path_irregularity():
    def body():
        eps_list = [1e-2, 1e-3, 1e-4, 1e-5]
        t_end = 1.0
        frame = vertex_frame(2, "+")
        rms = []
        for eps in eps_list:
            params = PhysicalParams(epsilon=eps)
            cfg = ProcessConfig(params=params, frame=frame, z0=[0.1, -0.2],
                                drift=DriftSpec.constant([0.4, 0.7]),
                                steps=int(round(t_end / eps)))
            traj = run_process(cfg)
            fluct = (traj.points - traj.mean[:, None, :]).real
            vel = np.diff(fluct, axis=0) / eps
            rms.append(float(np.sqrt(np.mean(vel ** 2))))
        slope = fit_loglog_slope(eps_list, rms)
        return slope, -0.5, 0.05, abs(slope + 0.5) <= 0.05, f"rms {['%.3g' % v for v in rms]}"
    return _timed("path-irregularity", body)


def _dynkin_test_maps():
    return [
        HolomorphicMap(value=lambda z, t: z[0] ** 2,
                       gradient=lambda z, t: np.array([2.0 * z[0], 0.0j]),
                       laplacian=lambda z, t: 2.0 + 0j,
                       time_derivative=lambda z, t: 0.0j,
                       name="first coordinate squared"),
        HolomorphicMap(value=lambda z, t: z[0] ** 3 + z[1] ** 2,
                       gradient=lambda z, t: np.array([3.0 * z[0] ** 2, 2.0 * z[1]]),
                       laplacian=lambda z, t: 6.0 * z[0] + 2.0,
                       time_derivative=lambda z, t: 0.0j,
                       name="cubic plus square"),
        HolomorphicMap(value=lambda z, t: np.exp(0.3 * (z[0] + z[1])) + 0.5 * t * z[1],
                       gradient=lambda z, t: np.array([0.3 * np.exp(0.3 * (z[0] + z[1])),
                                                       0.3 * np.exp(0.3 * (z[0] + z[1])) + 0.5 * t]),
                       laplacian=lambda z, t: 2 * 0.09 * np.exp(0.3 * (z[0] + z[1])),
                       time_derivative=lambda z, t: 0.5 * z[1],
                       name="exponential with drift term"),
    ]


def check_dynkin_expansion():
    def body():
        eps_list = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4]
        frame = vertex_frame(2, "+")
        slopes = []
        for fmap in _dynkin_test_maps():
            residuals = []
            for eps in eps_list:
                params = PhysicalParams(epsilon=eps)
                cfg = ProcessConfig(params=params, frame=frame, z0=[0.2, -0.3],
                                    drift=DriftSpec.constant([0.5, 0.25]), steps=16)
                residuals.append(dynkin_expansion_residual(fmap, cfg, q=2))
            slopes.append(fit_loglog_slope(eps_list, residuals))
        worst = max(abs(s - 2.0) for s in slopes)
        detail = "slopes " + ", ".join(f"{s:.4f}" for s in slopes)
        return max(slopes, key=lambda s: abs(s - 2.0)), 2.0, 0.1, worst <= 0.1, detail
    return _timed("dynkin-expansion", body)


# schrodinger field


def check_schrodinger_free_gaussian():
    def body():
        params = PhysicalParams(epsilon=0.01)
        grid = Grid(axes=((-40.0, 40.0, 1024),))
        sigma0 = 1.0
        psi0 = gaussian_packet(grid, sigma0=sigma0, center=[-2.0], k0=[1.0])
        # width doubles at tau = sqrt(3); run a little past it
        t_end = 1.8 * 2.0 * params.mass * sigma0 ** 2 / params.hbar
        steps = 10000
        psi_t = evolve(psi0, None, params, dt=t_end / steps, steps=steps)
        x = grid.coords()[0]
        ref = analytic.free_gaussian_psi(x, t_end, sigma0=sigma0, x0=-2.0, k0=1.0,
                                         hbar=params.hbar, mass=params.mass)
        l2 = float(np.sqrt(np.sum(np.abs(psi_t.values - ref) ** 2) * grid.cell_volume))
        drift = abs(psi_t.norm() - 1.0)
        width_ratio = analytic.free_gaussian_width(t_end, sigma0=sigma0) / sigma0
        passed = l2 < 1e-6 and drift < 1e-10 and width_ratio >= 2.0
        detail = f"norm drift {drift:.3g} over {steps} steps, width x{width_ratio:.2f}"
        return l2, 0.0, 1e-6, passed, detail
    return _timed("schrodinger-free-gaussian", body)


def _analytic_gaussian_2d(grid, t):
    X, Y = grid.mesh()
    vals = (analytic.free_gaussian_psi(X, t, sigma0=1.3, x0=-0.5, k0=0.8)
            * analytic.free_gaussian_psi(Y, t, sigma0=1.1, x0=0.4, k0=-0.5))
    return WaveField(grid=grid, time=t, values=vals)


def check_complex_hj_ratio():
    def body():
        params = PhysicalParams(epsilon=0.01)
        grid = Grid(axes=((-20.0, 20.0, 512),))
        x = grid.coords()[0]

        def wave_at(t):
            return WaveField(grid=grid, time=t,
                             values=analytic.free_gaussian_psi(x, t, sigma0=1.2, x0=-1.0, k0=0.9))

        t_mid = 0.5
        res = []
        for h in (0.02, 0.01):
            trio = (wave_at(t_mid - h), wave_at(t_mid), wave_at(t_mid + h))
            res.append(complex_hj_residual(trio, None, params))
        ratio = res[0] / res[1]
        return ratio, 4.0, 1.0, abs(ratio - 4.0) <= 1.0, f"residuals {res[0]:.3g}, {res[1]:.3g}"
    return _timed("complex-hj-ratio", body)


def check_least_action_step():
    def body():
        grid = Grid(axes=((-12.0, 12.0, 128), (-12.0, 12.0, 128)))
        frame = vertex_frame(2, "+")
        eps_list = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4]
        t_ref = 0.3
        residuals = []
        for eps in eps_list:
            params = PhysicalParams(epsilon=eps)
            residuals.append(least_action_step_residual(
                _analytic_gaussian_2d(grid, t_ref), _analytic_gaussian_2d(grid, t_ref - eps),
                frame, params))
        slope = fit_loglog_slope(eps_list, residuals)
        return slope, 2.0, 0.2, abs(slope - 2.0) <= 0.2, f"residuals {['%.3g' % r for r in residuals]}"
    return _timed("least-action-step", body)


# bohm / coupled


def check_bohm_paths():
    def body():
        params = PhysicalParams(epsilon=0.01)
        grid = Grid(axes=((-20.0, 20.0, 512),))
        sigma0, x0, k0 = 1.5, -3.0, 1.2
        psi0 = gaussian_packet(grid, sigma0=sigma0, center=[x0], k0=[k0])
        snaps = evolve_snapshots(psi0, None, params, dt=0.002, steps=1000, record_every=10)
        seq = FieldSequence(snaps, params)
        start = x0 + 1.0
        path = integrate_bohm(seq, [start], 2.0, dt=0.01)
        ref = analytic.free_gaussian_path(start, 2.0, sigma0=sigma0, x0=x0, k0=k0)
        gauss_err = abs(float(path.positions[-1, 0]) - ref)

        pw = plane_wave(grid, modes=[3])
        snaps_pw = evolve_snapshots(pw, None, params, dt=0.002, steps=1000, record_every=10)
        seq_pw = FieldSequence(snaps_pw, params)
        path_pw = integrate_bohm(seq_pw, [0.5], 2.0, dt=0.01)
        k = 2.0 * np.pi * 3 / 40.0
        pw_err = abs(float(path_pw.positions[-1, 0]) - (0.5 + k * params.hbar / params.mass * 2.0))

        passed = gauss_err < 1e-4 and pw_err < 1e-10
        return gauss_err, 0.0, 1e-4, passed, f"plane-wave err {pw_err:.3g} (tol 1e-10)"
    return _timed("bohm-paths", body)


def _coupled_snapshots():
    grid = Grid(axes=((-12.0, 12.0, 128), (-12.0, 12.0, 128)))
    pa = gaussian_packet(grid, sigma0=1.0, center=[-1.0, 0.5], k0=[0.9, -0.6])
    pb = gaussian_packet(grid, sigma0=1.4, center=[-0.5, 0.0], k0=[-1.5, 1.2])
    psi0 = superpose([pa, pb], weights=[1.0, 0.6])
    base = PhysicalParams(epsilon=1e-3)
    return evolve_snapshots(psi0, None, base, dt=0.0025, steps=160, record_every=1)


def check_coupled_run():
    def body():
        snaps = _coupled_snapshots()
        frame = vertex_frame(2, "+")
        t_end = 0.4
        eps_list = [1e-2, 1e-3, 1e-4]
        devs = []
        for eps in eps_list:
            params = PhysicalParams(epsilon=eps)
            seq = FieldSequence(snaps, params)
            run = run_coupled(params, frame, [-1.0 + 0j, 0.5 + 0j], seq,
                              int(round(t_end / eps)))
            devs.append(run.deviation)
        slope = fit_loglog_slope(eps_list, devs)
        monotone = devs[0] > devs[1] > devs[2]
        passed = monotone and slope >= 1.0
        detail = f"deviations {['%.3g' % d for d in devs]}, monotone={monotone}"
        return slope, 1.0, 0.0, passed, detail
    return _timed("coupled-run", body)


# classical baseline


def check_classical_dp():
    def body():
        lag = LagrangianSpec(mass=1.0)
        t_end = 0.5
        # curved initial action with a closed-form evolution for the
        # refinement cascade; linear initial action for velocity recovery
        a, p0 = 0.15, 0.73
        errs = []
        for nx, eps in ((81, 0.02), (161, 0.01), (321, 0.005)):
            x = np.linspace(-6.0, 6.0, nx)
            ga = classical_hj_dp(lag, lambda xx: a * xx * xx + p0 * xx, x,
                                 epsilon=eps, steps=int(round(t_end / eps)), u_bound=4.0)
            inner = (x > -3.0) & (x < 3.0)
            exact = (a * x * x + p0 * x - p0 ** 2 * t_end / 2.0) / (1.0 + 2.0 * a * t_end)
            errs.append(float(np.abs(ga.values[-1][inner] - exact[inner]).max()))
        monotone = errs[0] > errs[1] > errs[2]

        x = np.linspace(-6.0, 6.0, 321)
        ga = classical_hj_dp(lag, lambda xx: p0 * xx, x, epsilon=0.005,
                             steps=int(round(t_end / 0.005)), u_bound=4.0)
        inner = (x > -3.0) & (x < 3.0)
        vel = np.gradient(ga.values[-1], x) / lag.mass
        vel_err = float(np.abs(vel[inner] - p0 / lag.mass).max())

        passed = monotone and vel_err <= 1e-3
        detail = f"action errors {['%.3g' % e for e in errs]}, monotone={monotone}"
        return vel_err, 0.0, 1e-3, passed, detail
    return _timed("classical-dp", body)


def check_compton_step():
    def body():
        # frozen oracle: h/(4 m c^2) and h/(2 m c^2) for the electron,
        # h = 6.62607015e-34, m = 9.1093837015e-31, c = 299792458
        expected_2d = 2.023324948590845e-21
        expected_1d = 4.04664989718169e-21
        params = PhysicalParams(hbar=6.62607015e-34 / (2.0 * np.pi), mass=9.1093837015e-31,
                                epsilon=1.0, light_speed=299792458.0)
        got_2d = compton_timestep(params, 2)
        got_1d = compton_timestep(params, 1)
        rel = max(abs(got_2d - expected_2d) / expected_2d, abs(got_1d - expected_1d) / expected_1d)
        return got_2d, expected_2d, 1e-6 * expected_2d, rel <= 1e-6, f"1D {got_1d:.6e}"
    return _timed("compton-step", body)


CHECKS = {
    "spin-intrinsic": check_spin_intrinsic,
    "heisenberg-2d": check_heisenberg_2d,
    "moments-1d": check_moments_1d,
    "convergence-order": check_convergence_order,
    "path-irregularity": check_path_irregularity,
    "dynkin-expansion": check_dynkin_expansion,
    "schrodinger-free-gaussian": check_schrodinger_free_gaussian,
    "complex-hj-ratio": check_complex_hj_ratio,
    "least-action-step": check_least_action_step,
    "bohm-paths": check_bohm_paths,
    "coupled-run": check_coupled_run,
    "classical-dp": check_classical_dp,
    "compton-step": check_compton_step,
}


def run_checks(names=None) -> list[CheckResult]:
    names = list(CHECKS) if names is None else list(names)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown checks: {unknown}")
    return [CHECKS[n]() for n in names]


def convergence_table(eps_list, errors):
    """Rows (epsilon, error) plus the fitted log-log slope."""
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 3:
        raise ValueError("degenerate sweep: need at least 3 points")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("sweep must be strictly decreasing")
    slope = fit_loglog_slope(eps_list, errors)
    return [(e, float(err)) for e, err in zip(eps_list, errors)], slope
