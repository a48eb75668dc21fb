import numpy as np
import pytest

from extparticle.analytic import free_gaussian_path
from extparticle.bohm import (BohmPath, FieldSequence, MaskedRegionError, bohm_path_to_csv,
                              compton_timestep, coupled_run_to_csv, integrate_bohm, run_coupled)
from extparticle.field import Grid, WaveField, evolve_snapshots, gaussian_packet, plane_wave
from extparticle.model import PhysicalParams, vertex_frame

PARAMS = PhysicalParams(hbar=1.0, mass=1.0, epsilon=1e-3)


def _gaussian_snaps(center=-3.0, k0=1.2, sigma0=1.5, steps=1000, every=10):
    grid = Grid(axes=((-20.0, 20.0, 512),))
    psi = gaussian_packet(grid, sigma0=sigma0, center=[center], k0=[k0])
    return evolve_snapshots(psi, None, PARAMS, dt=0.002, steps=steps, record_every=every)


def test_sequence_needs_two_uniform_snapshots():
    snaps = _gaussian_snaps(steps=40, every=10)
    with pytest.raises(ValueError):
        FieldSequence(snaps[:1], PARAMS)
    with pytest.raises(ValueError):
        FieldSequence([snaps[0], snaps[1], snaps[3]], PARAMS)


def test_plane_wave_velocity_is_uniform():
    grid = Grid(axes=((-20.0, 20.0, 512),))
    psi = plane_wave(grid, modes=[3])
    snaps = evolve_snapshots(psi, None, PARAMS, dt=0.01, steps=10, record_every=5)
    seq = FieldSequence(snaps, PARAMS)
    k = 2.0 * np.pi * 3 / 40.0
    for x in (-7.3, 0.11, 5.9):
        v = seq.bohm_velocity(np.array([x]), 0.033)
        assert v[0] == pytest.approx(k, rel=1e-10)


def test_gaussian_path_matches_analytic_spread_law():
    seq = FieldSequence(_gaussian_snaps(), PARAMS)
    start = np.array([-2.0])
    path = integrate_bohm(seq, start, 2.0, dt=0.01)
    want = free_gaussian_path(start[0], 2.0, sigma0=1.5, x0=-3.0, k0=1.2)
    assert abs(path.positions[-1, 0] - want) < 1e-4


def test_path_translation_equivariance():
    # shifting the packet and the launch point by whole cells shifts the path
    shift = 40.0 / 512 * 64
    a = FieldSequence(_gaussian_snaps(center=-3.0), PARAMS)
    b = FieldSequence(_gaussian_snaps(center=-3.0 + shift), PARAMS)
    pa = integrate_bohm(a, np.array([-2.0]), 1.5, dt=0.01)
    pb = integrate_bohm(b, np.array([-2.0 + shift]), 1.5, dt=0.01)
    assert np.abs((pb.positions - shift) - pa.positions).max() < 1e-9


def test_integration_is_deterministic():
    seq = FieldSequence(_gaussian_snaps(), PARAMS)
    p1 = integrate_bohm(seq, np.array([-2.0]), 1.0, dt=0.01)
    p2 = integrate_bohm(seq, np.array([-2.0]), 1.0, dt=0.01)
    assert np.array_equal(p1.positions, p2.positions)


def test_masked_region_is_refused():
    seq = FieldSequence(_gaussian_snaps(steps=40, every=10), PARAMS)
    with pytest.raises(MaskedRegionError) as info:
        integrate_bohm(seq, np.array([15.0]), 0.05, dt=0.01)
    assert info.value.position is not None


def test_path_at_interpolates_times():
    times = np.array([0.0, 1.0, 2.0])
    positions = np.array([[0.0], [2.0], [6.0]])
    path = BohmPath(times=times, positions=positions)
    assert path.at(0.5)[0] == pytest.approx(1.0)
    assert path.at(1.5)[0] == pytest.approx(4.0)


def test_bohm_path_csv(tmp_path):
    import csv

    seq = FieldSequence(_gaussian_snaps(), PARAMS)
    path = integrate_bohm(seq, np.array([-2.0]), 0.5, dt=0.05)
    out = tmp_path / "path.csv"
    bohm_path_to_csv(path, out)
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x"]
    assert len(rows) == 1 + path.times.size
    assert float(rows[-1][0]) == path.times[-1]


def _coupled_snaps():
    grid = Grid(axes=((-12.0, 12.0, 128), (-12.0, 12.0, 128)))
    psi = gaussian_packet(grid, sigma0=1.2, center=[-1.0, 0.5], k0=[0.9, -0.6])
    return evolve_snapshots(psi, None, PARAMS, dt=0.005, steps=40, record_every=1)


def test_coupled_run_deviation_shrinks_with_epsilon():
    snaps = _coupled_snaps()
    frame = vertex_frame(2)
    z0 = np.array([-1.0 + 0j, 0.5 + 0j])
    devs = []
    for eps in (1e-2, 1e-3):
        params = PhysicalParams(hbar=1.0, mass=1.0, epsilon=eps)
        run = run_coupled(params, frame, z0, FieldSequence(snaps, params),
                          int(round(0.2 / eps)))
        devs.append(run.deviation)
    assert devs[1] < devs[0]


def test_coupled_run_csv(tmp_path):
    import csv

    snaps = _coupled_snaps()
    params = PhysicalParams(hbar=1.0, mass=1.0, epsilon=1e-2)
    run = run_coupled(params, vertex_frame(2), np.array([-1.0 + 0j, 0.5 + 0j]),
                      FieldSequence(snaps, params), 20)
    out = tmp_path / "coupled.csv"
    coupled_run_to_csv(run, out)
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x", "y", "deviation"]
    assert len(rows) == 1 + 21


def test_compton_timestep_formula():
    hbar = 6.62607015e-34 / (2.0 * np.pi)
    params = PhysicalParams(hbar=hbar, mass=9.1093837015e-31, epsilon=1.0,
                            light_speed=299792458.0)
    got = compton_timestep(params, dimension=2)
    want = 2.0 * np.pi * hbar / (4.0 * params.mass * params.light_speed ** 2)
    assert got == pytest.approx(want, rel=1e-14)
    with pytest.raises(ValueError):
        compton_timestep(PhysicalParams(), dimension=2)
