"""Scenario-driven command line harness.

Verbs: simulate, observables, field, bohm, coupled, converge, verify.
Each run reads a JSON scenario (a bundled name or a file path), executes
the requested pipeline, writes CSV/JSON artifacts under
<out>/<scenario>/ and a RunReport JSON, and exits 0 only if every check
passed. Exit codes: 0 pass, 1 check failure, 2 config error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import analytic
from .bohm import (FieldSequence, bohm_path_to_csv, coupled_run_to_csv, integrate_bohm,
                   run_coupled)
from .field import (Grid, WaveField, complex_hj_residual, density_sigma, evolve,
                    evolve_snapshots, gaussian_packet, plane_wave, superpose,
                    wavefield_to_binary, wavefield_to_csv)
from .model import DriftSpec, PhysicalParams, step_scale, vertex_frame
from .observables import HolomorphicMap, dynkin_expansion_residual, spin_z, uncertainty_stats
from .process import ProcessConfig, increment_moments, recurrence_identity_residual, run_process, trajectory_to_csv
from .verification import CHECKS, CheckResult, convergence_table, fit_loglog_slope, run_checks

_CONVERGE_TARGETS = ("process", "dynkin", "hj_residual", "coupled")


class ConfigError(ValueError):
    pass


def _load_scenario(ref: str) -> dict:
    """Load a scenario from a file path or a bundled scenario name."""
    text = None
    try:
        with open(ref) as fh:
            text = fh.read()
    except OSError:
        name = ref if ref.endswith(".json") else ref + ".json"
        try:
            text = (resources.files("extparticle") / "scenarios" / name).read_text()
        except (OSError, FileNotFoundError):
            raise ConfigError(f"no scenario file or bundled scenario named {ref!r}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise _ParseError(str(exc))
    if not isinstance(data, dict) or "name" not in data:
        raise ConfigError("scenario must be a JSON object with a 'name' field")
    return data


class _ParseError(ValueError):
    pass


def _params(scn: dict, override_eps=None) -> PhysicalParams:
    phys = scn.get("physics", {})
    eps = override_eps if override_eps is not None else phys.get("epsilon", 1e-2)
    return PhysicalParams(hbar=phys.get("hbar", 1.0), mass=phys.get("mass", 1.0),
                          epsilon=eps, light_speed=phys.get("light_speed"))


def _complex_vector(pairs) -> np.ndarray:
    return np.array([complex(re, im) for re, im in pairs])


def _process_config(scn: dict, params: PhysicalParams, orientation=None) -> ProcessConfig:
    model = scn["model"]
    frame = vertex_frame(model["dimension"], orientation or model.get("orientation", "+"))
    drift_spec = model.get("drift", {"kind": "constant", "value": [[0.0, 0.0]] * model["dimension"]})
    if drift_spec["kind"] != "constant":
        raise ConfigError("scenario drift must be constant; coupled runs use the coupled verb")
    drift = DriftSpec.constant(_complex_vector(drift_spec["value"]))
    return ProcessConfig(params=params, frame=frame, z0=_complex_vector(model["z0"]),
                         drift=drift, steps=model["steps"])


def _grid(field_cfg: dict) -> Grid:
    return Grid(axes=tuple((float(a), float(b), int(n)) for a, b, n in field_cfg["axes"]))


def _initial_field(field_cfg: dict, grid: Grid) -> WaveField:
    init = field_cfg["initial"]
    kind = init["kind"]
    if kind == "gaussian":
        return gaussian_packet(grid, sigma0=init["sigma0"], center=init.get("center"),
                               k0=init.get("k0"))
    if kind == "plane_wave":
        return plane_wave(grid, modes=init["modes"])
    if kind == "superposition":
        parts, weights = [], []
        for part in init["parts"]:
            weights.append(part.get("weight", 1.0))
            parts.append(gaussian_packet(grid, sigma0=part["sigma0"],
                                         center=part.get("center"), k0=part.get("k0")))
        return superpose(parts, weights=weights)
    raise ConfigError(f"unknown initial field kind {kind!r}")


def _potential(field_cfg: dict, params: PhysicalParams):
    pot = field_cfg.get("potential", {"kind": "free"})
    if pot["kind"] == "free":
        return None
    if pot["kind"] == "harmonic":
        omega = float(pot["omega"])
        mass = params.mass

        def vfun(*xs):
            return 0.5 * mass * omega ** 2 * sum(np.asarray(x) ** 2 for x in xs)

        return vfun
    raise ConfigError(f"unknown potential kind {pot['kind']!r}")


def _check(check_id, measured, expected, tolerance, passed, wall, detail="") -> CheckResult:
    return CheckResult(check_id=check_id, measured=float(measured), expected=float(expected),
                       tolerance=float(tolerance), passed=bool(passed), wall_time_s=wall,
                       detail=detail)


def _report(scn_name: str, checks: list[CheckResult], outdir) -> dict:
    report = {
        "scenario": scn_name,
        "passed": all(c.passed for c in checks),
        "checks": [
            {"id": c.check_id, "measured": c.measured, "expected": c.expected,
             "tolerance": c.tolerance, "passed": c.passed, "wall_time_s": c.wall_time_s,
             "detail": c.detail}
            for c in checks
        ],
    }
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
    return report


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# verb implementations


def cmd_simulate(scn, outdir, args):
    params = _params(scn, args.epsilon)
    cfg = _process_config(scn, params, args.orientation)
    t0 = time.perf_counter()
    traj = run_process(cfg)
    residual = recurrence_identity_residual(traj)
    wall = time.perf_counter() - t0
    outdir.mkdir(parents=True, exist_ok=True)
    trajectory_to_csv(traj, outdir / "trajectory.csv")
    return [_check("recurrence-identity", residual, 0.0, 0.0, residual == 0.0, wall,
                   "exact integer bookkeeping")]


def cmd_observables(scn, outdir, args):
    params = _params(scn, args.epsilon)
    cfg = _process_config(scn, params, args.orientation)
    obs = scn.get("observables", {})
    q = int(obs.get("q", 1))
    t0 = time.perf_counter()
    traj = run_process(cfg)
    checks = []
    payload = {"scenario": scn["name"], "q": q}
    if cfg.frame.dimension == 2:
        stats = uncertainty_stats(traj, q=q, momentum_form=obs.get("momentum_form", "increment"))
        rep = spin_z(traj, q=q)
        expected_spin = -params.hbar / 2.0 if cfg.frame.orientation == "+" else params.hbar / 2.0
        wall = time.perf_counter() - t0
        rel_spin = abs(rep.intrinsic - expected_spin) / abs(expected_spin)
        rel_prod = float(np.abs(stats.product - params.hbar / 2.0).max()) / (params.hbar / 2.0)
        checks.append(_check("spin-intrinsic", rep.intrinsic, expected_spin,
                             1e-12 * abs(expected_spin), rel_spin <= 1e-12, wall,
                             f"total {rep.total:.6g}, orbital {rep.orbital:.6g}"))
        checks.append(_check("heisenberg-product", float(stats.product.max()),
                             params.hbar / 2.0, 1e-12 * params.hbar / 2.0,
                             rel_prod <= 1e-12, 0.0, "per-axis dx*dp"))
        payload.update({
            "delta_x": stats.delta_x.tolist(), "delta_p": stats.delta_p.tolist(),
            "product": stats.product.tolist(), "momentum_form": stats.momentum_form,
            "spin_total": rep.total, "spin_orbital": rep.orbital, "spin_intrinsic": rep.intrinsic,
        })
    else:
        mom = increment_moments(traj, q=q)
        gamma2 = step_scale(params, 1) ** 2
        wall = time.perf_counter() - t0
        mean_abs = float(np.abs(mom.mean_increment).max())
        diag = np.diagonal(mom.point_covariance)
        rel_var = float(np.abs(diag - 4.0 * gamma2).max()) / abs(4.0 * gamma2)
        checks.append(_check("mean-increment", mean_abs, 0.0, 0.0, mean_abs == 0.0, wall,
                             "exactly zero by construction"))
        checks.append(_check("squared-increment", abs(complex(diag[0])), abs(4.0 * gamma2),
                             1e-12 * abs(4.0 * gamma2), rel_var <= 1e-12, 0.0,
                             f"4*gamma^2 = {4.0 * gamma2:.6g}"))
        stats = uncertainty_stats(traj, q=q, momentum_form=obs.get("momentum_form", "increment"))
        payload.update({
            "mean_increment": [[c.real, c.imag] for c in mom.mean_increment.ravel()],
            "point_covariance": [[c.real, c.imag] for c in mom.point_covariance.ravel()],
            "delta_x": stats.delta_x.tolist(), "delta_p": stats.delta_p.tolist(),
            "product": stats.product.tolist(), "momentum_form": stats.momentum_form,
        })
    outdir.mkdir(parents=True, exist_ok=True)
    trajectory_to_csv(traj, outdir / "trajectory.csv")
    with open(outdir / "observables.json", "w") as fh:
        json.dump(payload, fh, indent=2)
    return checks


def _evolve_field(scn, params):
    field_cfg = scn["field"]
    grid = _grid(field_cfg)
    psi0 = _initial_field(field_cfg, grid)
    potential = _potential(field_cfg, params)
    return field_cfg, grid, psi0, potential


def cmd_field(scn, outdir, args):
    params = _params(scn, args.epsilon)
    field_cfg, grid, psi0, potential = _evolve_field(scn, params)
    t0 = time.perf_counter()
    psi_t = evolve(psi0, potential, params, dt=field_cfg["dt"], steps=field_cfg["steps"])
    wall = time.perf_counter() - t0
    drift = abs(psi_t.norm() - 1.0)
    checks = [_check("norm-drift", drift, 0.0, 1e-10, drift < 1e-10, wall,
                     f"{field_cfg['steps']} steps")]
    init = field_cfg["initial"]
    if init["kind"] == "gaussian" and potential is None and grid.dimension == 1:
        x = grid.coords()[0]
        ref = analytic.free_gaussian_psi(
            x, psi_t.time, sigma0=init["sigma0"], x0=init.get("center", [0.0])[0],
            k0=init.get("k0", [0.0])[0], hbar=params.hbar, mass=params.mass)
        l2 = float(np.sqrt(np.sum(np.abs(psi_t.values - ref) ** 2) * grid.cell_volume))
        checks.append(_check("free-gaussian-l2", l2, 0.0, 1e-6, l2 < 1e-6, 0.0,
                             f"width x{density_sigma(psi_t)[0] / init['sigma0']:.2f}"))
    outdir.mkdir(parents=True, exist_ok=True)
    wavefield_to_csv(psi_t, params, outdir / "field_final.csv")
    wavefield_to_binary(psi_t, outdir / "field_final.wvf")
    return checks


def _snapshots(scn, params):
    field_cfg, grid, psi0, potential = _evolve_field(scn, params)
    return field_cfg, evolve_snapshots(psi0, potential, params, dt=field_cfg["dt"],
                                       steps=field_cfg["steps"],
                                       record_every=field_cfg.get("snapshot_every", 1))


def cmd_bohm(scn, outdir, args):
    params = _params(scn, args.epsilon)
    bohm_cfg = scn["bohm"]
    t0 = time.perf_counter()
    field_cfg, snaps = _snapshots(scn, params)
    seq = FieldSequence(snaps, params)
    path = integrate_bohm(seq, bohm_cfg["x0"], bohm_cfg["t_end"],
                          dt=bohm_cfg.get("path_dt"))
    wall = time.perf_counter() - t0
    outdir.mkdir(parents=True, exist_ok=True)
    bohm_path_to_csv(path, outdir / "bohm_path.csv")
    checks = []
    init = field_cfg["initial"]
    end = float(path.positions[-1, 0])
    if init["kind"] == "gaussian":
        ref = analytic.free_gaussian_path(
            bohm_cfg["x0"][0], bohm_cfg["t_end"], sigma0=init["sigma0"],
            x0=init.get("center", [0.0])[0], k0=init.get("k0", [0.0])[0],
            hbar=params.hbar, mass=params.mass)
        err = abs(end - ref)
        checks.append(_check("bohm-free-gaussian", err, 0.0, 1e-4, err < 1e-4, wall,
                             f"end {end:.6f} vs {ref:.6f}"))
    elif init["kind"] == "plane_wave":
        grid = _grid(field_cfg)
        k = 2.0 * np.pi * init["modes"][0] / grid.lengths[0]
        ref = bohm_cfg["x0"][0] + params.hbar * k / params.mass * bohm_cfg["t_end"]
        err = abs(end - ref)
        checks.append(_check("bohm-plane-wave", err, 0.0, 1e-10, err < 1e-10, wall,
                             f"end {end:.12f} vs {ref:.12f}"))
    return checks


def cmd_coupled(scn, outdir, args):
    base_params = _params(scn, args.epsilon)
    coupled_cfg = scn["coupled"]
    orientation = args.orientation or scn.get("model", {}).get("orientation", "+")
    frame = vertex_frame(2, orientation)
    z0 = _complex_vector(coupled_cfg["z0"])
    t_end = coupled_cfg["t_end"]
    t0 = time.perf_counter()
    _, snaps = _snapshots(scn, base_params)
    sweeps = scn.get("sweeps") or [base_params.epsilon]
    devs, last_run = [], None
    for eps in sweeps:
        params = _params(scn, eps)
        seq = FieldSequence(snaps, params)
        last_run = run_coupled(params, frame, z0, seq, int(round(t_end / eps)))
        devs.append(last_run.deviation)
    wall = time.perf_counter() - t0
    outdir.mkdir(parents=True, exist_ok=True)
    coupled_run_to_csv(last_run, outdir / "coupled.csv")
    _write_rows(outdir / "coupled_sweep.csv", ["epsilon", "deviation"],
                [(repr(float(e)), repr(float(d))) for e, d in zip(sweeps, devs)])
    checks = []
    if len(sweeps) >= 2:
        monotone = all(a > b for a, b in zip(devs, devs[1:]))
        slope = fit_loglog_slope(sweeps, devs)
        checks.append(_check("coupled-deviation-slope", slope, 1.0, 0.0,
                             monotone and slope >= 1.0, wall,
                             f"deviations {['%.3g' % d for d in devs]}, monotone={monotone}"))
    else:
        checks.append(_check("coupled-deviation", devs[0], 0.0, 0.0, True, wall,
                             "single-epsilon run, deviation reported, not gated"))
    q = int(scn.get("observables", {}).get("q", 1))
    params = _params(scn, sweeps[-1])
    stats = uncertainty_stats(last_run.trajectory, q=q, momentum_form="increment")
    rep = spin_z(last_run.trajectory, q=q)
    expected_spin = -params.hbar / 2.0 if orientation == "+" else params.hbar / 2.0
    rel_spin = abs(rep.intrinsic - expected_spin) / abs(expected_spin)
    rel_prod = float(np.abs(stats.product - params.hbar / 2.0).max()) / (params.hbar / 2.0)
    checks.append(_check("coupled-spin-intrinsic", rep.intrinsic, expected_spin,
                         1e-12 * abs(expected_spin), rel_spin <= 1e-12, 0.0,
                         "offsets are drift-independent"))
    checks.append(_check("coupled-heisenberg", float(stats.product.max()), params.hbar / 2.0,
                         1e-12 * params.hbar / 2.0, rel_prod <= 1e-12, 0.0, ""))
    return checks


def run_convergence(scn, target, outdir, args):
    """Fitted log-log slope plus a per-point error table for one target."""
    if target not in _CONVERGE_TARGETS:
        raise ConfigError(f"unknown convergence target {target!r}; "
                          f"choose from {_CONVERGE_TARGETS}")
    sweeps = scn.get("sweeps")
    if not sweeps or len(sweeps) < 3:
        raise ConfigError("convergence needs a 'sweeps' list with at least 3 points")
    t0 = time.perf_counter()
    if target == "process":
        base_eps = scn.get("physics", {}).get("epsilon", 1e-2)
        errors = []
        for eps in sweeps:
            params = _params(scn, eps)
            cfg = _process_config(scn, params, args.orientation)
            steps = max(cfg.frame.period, int(round(cfg.steps * base_eps / eps)))
            cfg = ProcessConfig(params=params, frame=cfg.frame, z0=cfg.z0, drift=cfg.drift,
                                steps=steps)
            traj = run_process(cfg)
            errors.append(float(np.abs(traj.points.real - traj.mean.real[:, None, :]).max()))
        expected, tol = 0.5, 0.05
    elif target == "dynkin":
        fmap = HolomorphicMap(value=lambda z, t: z[0] ** 2,
                              gradient=lambda z, t: np.array([2.0 * z[0], 0.0j]),
                              laplacian=lambda z, t: 2.0 + 0j,
                              time_derivative=lambda z, t: 0.0j,
                              name="first coordinate squared")
        errors = []
        for eps in sweeps:
            params = _params(scn, eps)
            cfg = _process_config(scn, params, args.orientation)
            errors.append(dynkin_expansion_residual(fmap, cfg, q=2))
        expected, tol = 2.0, 0.1
    elif target == "hj_residual":
        params = _params(scn, args.epsilon)
        grid = Grid(axes=((-20.0, 20.0, 512),))
        x = grid.coords()[0]

        def wave_at(t):
            return WaveField(grid=grid, time=t, values=analytic.free_gaussian_psi(
                x, t, sigma0=1.2, x0=-1.0, k0=0.9, hbar=params.hbar, mass=params.mass))

        errors = [complex_hj_residual((wave_at(0.5 - h), wave_at(0.5), wave_at(0.5 + h)),
                                      None, params) for h in sweeps]
        expected, tol = 2.0, 0.4
    else:  # coupled
        coupled_cfg = scn["coupled"]
        frame = vertex_frame(2, args.orientation or scn.get("model", {}).get("orientation", "+"))
        z0 = _complex_vector(coupled_cfg["z0"])
        _, snaps = _snapshots(scn, _params(scn, args.epsilon))
        errors = []
        for eps in sweeps:
            params = _params(scn, eps)
            seq = FieldSequence(snaps, params)
            run = run_coupled(params, frame, z0, seq, int(round(coupled_cfg["t_end"] / eps)))
            errors.append(run.deviation)
        expected, tol = 1.0, 0.0
    table, slope = convergence_table(sweeps, errors)
    wall = time.perf_counter() - t0
    outdir.mkdir(parents=True, exist_ok=True)
    _write_rows(outdir / "convergence.csv", ["epsilon", "error"],
                [(repr(e), repr(err)) for e, err in table])
    if target == "coupled":
        monotone = all(a > b for a, b in zip(errors, errors[1:]))
        passed = monotone and slope >= 1.0
    else:
        passed = abs(slope - expected) <= tol
    return [_check(f"convergence-{target}", slope, expected, tol, passed, wall,
                   f"errors {['%.3g' % e for e in errors]}")]


def cmd_converge(scn, outdir, args):
    target = args.target or scn.get("convergence", {}).get("target")
    if target is None:
        raise ConfigError("converge needs --target or a 'convergence.target' entry")
    return run_convergence(scn, target, outdir, args)


def cmd_verify(scn, outdir, args):
    names = scn.get("checks") if scn else None
    results = run_checks(names)
    return results


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="extparticle",
        description="deterministic extended-particle process laboratory")
    parser.add_argument("verb", choices=["simulate", "observables", "field", "bohm",
                                         "coupled", "converge", "verify"])
    parser.add_argument("--config", help="scenario file path or bundled scenario name")
    parser.add_argument("--out", default="out", help="output directory root")
    parser.add_argument("--epsilon", type=float, default=None, help="override time step")
    parser.add_argument("--orientation", choices=["+", "-"], default=None,
                        help="override cycle orientation")
    parser.add_argument("--target", choices=list(_CONVERGE_TARGETS), default=None,
                        help="convergence target (converge verb)")
    parser.add_argument("--seedless", action="store_true",
                        help="no-op; runs are deterministic, no seeds involved")
    args = parser.parse_args(argv)

    scn = None
    if args.config is not None:
        try:
            scn = _load_scenario(args.config)
        except _ParseError as exc:
            print(f"config parse error: {exc}", file=sys.stderr)
            return 2
        except ConfigError as exc:
            print(f"config validation error: {exc}", file=sys.stderr)
            return 2
    elif args.verb != "verify":
        print("config validation error: this verb requires --config", file=sys.stderr)
        return 2

    name = scn["name"] if scn else "acceptance"
    outdir = Path(args.out) / name
    handlers = {"simulate": cmd_simulate, "observables": cmd_observables, "field": cmd_field,
                "bohm": cmd_bohm, "coupled": cmd_coupled, "converge": cmd_converge,
                "verify": cmd_verify}
    try:
        checks = handlers[args.verb](scn, outdir, args)
    except (_ParseError,) as exc:
        print(f"config parse error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        print(f"config validation error: {exc}", file=sys.stderr)
        return 2

    report = _report(name, checks, outdir)
    for c in checks:
        print(c.line())
    print(f"report: {outdir / 'report.json'}")
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
