import numpy as np
import pytest

from extparticle.model import DriftSpec, PhysicalParams, step_scale, vertex_frame
from extparticle.process import (ProcessConfig, classical_limit, increment_moments,
                                 recurrence_identity_residual, run_process,
                                 trajectory_from_csv, trajectory_to_csv)


def _config(dim=2, orientation="+", steps=12, eps=0.01, drift=None, z0=None, hbar=1.0, mass=1.0):
    frame = vertex_frame(dim, orientation)
    if drift is None:
        drift = np.zeros(dim, dtype=complex)
    if z0 is None:
        z0 = np.zeros(dim, dtype=complex)
    return ProcessConfig(params=PhysicalParams(hbar=hbar, mass=mass, epsilon=eps),
                         frame=frame, z0=np.asarray(z0, dtype=complex),
                         drift=DriftSpec.constant(drift), steps=steps)


def _reference_run(cfg):
    """Step-by-step enumeration of the recurrence, independent of the engine."""
    frame, params = cfg.frame, cfg.params
    scale = step_scale(params, frame.dimension)
    period = frame.period
    pts = np.empty((cfg.steps + 1, frame.n_points, frame.dimension), dtype=complex)
    pts[0] = cfg.z0[None, :] + np.zeros((frame.n_points, frame.dimension))
    for n in range(1, cfg.steps + 1):
        q = (n - 1) // period
        v = cfg.drift.at(q * period * params.epsilon)
        for j in range(frame.n_points):
            prev = frame.vertices[frame.cycle[(n - 1) % period, j]]
            cur = frame.vertices[frame.cycle[n % period, j]]
            pts[n, j] = pts[n - 1, j] + v * params.epsilon + scale * (cur - prev)
    return pts


@pytest.mark.parametrize("dim,orientation", [(1, "+"), (2, "+"), (2, "-")])
def test_engine_matches_stepwise_enumeration(dim, orientation):
    rng = np.random.default_rng(5 + dim)
    for _ in range(4):
        cfg = _config(dim, orientation, steps=int(rng.integers(5, 20)),
                      eps=float(rng.uniform(1e-3, 5e-2)),
                      drift=rng.normal(size=dim) + 1j * rng.normal(size=dim),
                      z0=rng.normal(size=dim), hbar=float(rng.uniform(0.5, 2.0)),
                      mass=float(rng.uniform(0.5, 2.0)))
        traj = run_process(cfg)
        ref = _reference_run(cfg)
        assert np.abs(traj.points - ref).max() < 1e-14


def test_points_rejoin_mean_at_annihilation_instants():
    cfg = _config(2, steps=20, drift=[0.3 + 0.1j, -0.2])
    traj = run_process(cfg)
    for n in (0, 4, 8, 12, 16, 20):
        # all four points coincide with the mean exactly, not approximately
        assert np.all(traj.points[n] == traj.mean[n][None, :])


def test_mean_follows_drift_alone():
    v = np.array([0.25 - 0.4j, 1.0 + 0.2j])
    cfg = _config(2, steps=16, drift=v, z0=[1.0, -2.0])
    traj = run_process(cfg)
    t = traj.times[:, None]
    assert np.abs(traj.mean - (cfg.z0[None, :] + v[None, :] * t)).max() < 1e-13


def test_recurrence_identity_is_exact():
    rng = np.random.default_rng(17)
    for dim in (1, 2):
        cfg = _config(dim, steps=int(rng.integers(8, 30)),
                      drift=rng.normal(size=dim) + 1j * rng.normal(size=dim),
                      z0=rng.normal(size=dim))
        assert recurrence_identity_residual(run_process(cfg)) == 0.0


def test_period_drift_is_frozen_within_each_period():
    # closed-form drift evaluated only at annihilation instants 0, 4eps, ...
    seen = []
    drift = DriftSpec.closed_form(lambda t: (seen.append(t), [t, 0.0])[1])
    frame = vertex_frame(2)
    cfg = ProcessConfig(params=PhysicalParams(epsilon=0.1), frame=frame,
                        z0=np.zeros(2, dtype=complex), drift=drift, steps=11)
    run_process(cfg)
    assert seen == pytest.approx([0.0, 0.4, 0.8])


def test_increment_moments_1d_match_enumeration():
    # one period of the free 1D process: dw = gamma*(s^n - s^(n-1))u^j
    params = PhysicalParams(hbar=1.3, mass=0.7, epsilon=0.02)
    cfg = _config(1, steps=8, eps=params.epsilon, hbar=params.hbar, mass=params.mass,
                  drift=[0.6], z0=[0.1])
    traj = run_process(cfg)
    mom = increment_moments(traj, q=2)
    gamma = step_scale(params, 1)
    # swap flips each point across the center: increments are -+2 gamma u^j,
    # rows are period steps, columns the two points
    incs = np.array([[-2.0 * gamma, 2.0 * gamma], [2.0 * gamma, -2.0 * gamma]])
    assert np.abs(mom.mean_increment).max() == 0.0
    want = (incs[:, :, None] * incs[:, None, :]).mean(axis=0)
    assert np.abs(mom.point_covariance - want).max() < 1e-15
    assert mom.point_covariance[0, 0] == pytest.approx(4.0 * gamma ** 2, rel=1e-13)
    assert mom.coordinate_covariance[0, 0] == pytest.approx(4.0 * gamma ** 2, rel=1e-13)


def test_classical_limit_is_the_drift_path():
    v = np.array([0.5 + 0.0j, -0.3 + 0.1j])
    cfg = _config(2, steps=10, drift=v, z0=[2.0, 1.0])
    path = classical_limit(cfg)
    t = path.times[:, None]
    assert np.abs(path.positions - (cfg.z0[None, :] + v[None, :] * t)).max() < 1e-13


def test_trajectory_csv_round_trip(tmp_path):
    cfg = _config(2, steps=9, drift=[0.2 + 0.3j, -0.1], z0=[0.4, -0.7])
    traj = run_process(cfg)
    path = tmp_path / "traj.csv"
    trajectory_to_csv(traj, path)
    times, points, mean = trajectory_from_csv(path)
    assert np.array_equal(times, traj.times)
    assert np.array_equal(points, traj.points)
    assert np.array_equal(mean, traj.mean)


def test_runs_are_deterministic():
    cfg = _config(2, steps=40, drift=[0.9 + 0.2j, 0.1], z0=[0.3, 0.8])
    a = run_process(cfg)
    b = run_process(cfg)
    assert np.array_equal(a.points, b.points)


def test_config_validation():
    frame = vertex_frame(2)
    with pytest.raises(ValueError):
        ProcessConfig(params=PhysicalParams(), frame=frame, z0=np.zeros(1, dtype=complex),
                      drift=DriftSpec.constant([0.0, 0.0]), steps=4)
    with pytest.raises(ValueError):
        ProcessConfig(params=PhysicalParams(), frame=frame, z0=np.zeros(2, dtype=complex),
                      drift=DriftSpec.constant([0.0]), steps=4)
    with pytest.raises(ValueError):
        ProcessConfig(params=PhysicalParams(), frame=frame, z0=np.zeros(2, dtype=complex),
                      drift=DriftSpec.constant([0.0, 0.0]), steps=0)
