import numpy as np
import pytest

from extparticle.model import DriftSpec, PhysicalParams, step_scale, vertex_frame
from extparticle.observables import (HolomorphicMap, dynkin_apply, dynkin_expansion_residual,
                                     spin_z, uncertainty_stats)
from extparticle.process import ProcessConfig, run_process


def _config(dim, orientation="+", steps=16, eps=0.01, hbar=1.0, mass=1.0,
            drift=None, z0=None):
    frame = vertex_frame(dim, orientation)
    drift = np.zeros(dim, dtype=complex) if drift is None else np.asarray(drift, dtype=complex)
    z0 = np.zeros(dim, dtype=complex) if z0 is None else np.asarray(z0, dtype=complex)
    return ProcessConfig(params=PhysicalParams(hbar=hbar, mass=mass, epsilon=eps),
                         frame=frame, z0=z0, drift=DriftSpec.constant(drift), steps=steps)


def _period_points(cfg, q):
    """Hand enumeration of the real positions over period q and one step past."""
    frame, params = cfg.frame, cfg.params
    scale = step_scale(params, frame.dimension)
    period = frame.period
    v = cfg.drift.payload
    out = []
    for n in range(period * q, period * (q + 1) + 1):
        offs = frame.vertices[frame.cycle[n % period]] - frame.vertices[frame.cycle[0]]
        z = cfg.z0 + v * (n * params.epsilon) + scale * offs
        out.append(z.real.copy())
    return np.array(out)  # (period+1, n_points, dim)


@pytest.mark.parametrize("orientation,sign", [("+", -1.0), ("-", 1.0)])
def test_spin_intrinsic_matches_enumeration(orientation, sign):
    rng = np.random.default_rng(31)
    for _ in range(6):
        hbar = float(rng.uniform(0.4, 2.5))
        cfg = _config(2, orientation, steps=24, eps=float(rng.uniform(1e-3, 5e-2)),
                      hbar=hbar, mass=float(rng.uniform(0.4, 2.5)),
                      drift=rng.normal(size=2) + 1j * rng.normal(size=2),
                      z0=rng.normal(size=2))
        q = int(rng.integers(1, 5))
        rep = spin_z(run_process(cfg), q=q)

        r = _period_points(cfg, q)
        eps, m = cfg.params.epsilon, cfg.params.mass
        p = m * (r[1:] - r[:-1]) / eps
        wedge = r[:-1, :, 0] * p[:, :, 1] - r[:-1, :, 1] * p[:, :, 0]
        total = wedge.mean()
        rbar = r.mean(axis=1)
        r_avg = rbar[:-1].mean(axis=0)
        v_avg = (rbar[1:] - rbar[:-1]).mean(axis=0) / eps
        orbital = m * (r_avg[0] * v_avg[1] - r_avg[1] * v_avg[0])

        assert rep.total == pytest.approx(total, abs=1e-12)
        assert rep.orbital == pytest.approx(orbital, abs=1e-12)
        assert rep.intrinsic == pytest.approx(sign * hbar / 2.0, rel=1e-13)


def test_spin_requires_two_dimensions():
    with pytest.raises(ValueError):
        spin_z(run_process(_config(1)), q=1)


def test_spin_needs_enough_steps():
    with pytest.raises(ValueError):
        spin_z(run_process(_config(2, steps=6)), q=1)


@pytest.mark.parametrize("form", ["increment", "displacement"])
def test_uncertainty_2d_exact_values(form):
    rng = np.random.default_rng(77)
    for _ in range(5):
        hbar = float(rng.uniform(0.4, 2.5))
        mass = float(rng.uniform(0.4, 2.5))
        eps = float(rng.uniform(1e-3, 5e-2))
        cfg = _config(2, steps=16, eps=eps, hbar=hbar, mass=mass,
                      drift=rng.normal(size=2), z0=rng.normal(size=2))
        stats = uncertainty_stats(run_process(cfg), q=2, momentum_form=form)
        # per-axis spread of the four corners is sqrt(hbar*eps/2m) in both forms
        assert stats.delta_x == pytest.approx(
            [np.sqrt(hbar * eps / (2 * mass))] * 2, rel=1e-13)
        assert stats.delta_p == pytest.approx(
            [np.sqrt(hbar * mass / (2 * eps))] * 2, rel=1e-13)
        assert stats.product == pytest.approx([hbar / 2.0] * 2, rel=1e-13)


def test_uncertainty_1d_constants_are_parameter_free():
    products = {"increment": [], "displacement": []}
    for hbar in (0.5, 1.0, 1.7):
        for mass in (0.6, 2.2):
            for eps in (1e-3, 2e-2):
                cfg = _config(1, steps=12, eps=eps, hbar=hbar, mass=mass, drift=[0.4])
                for form in products:
                    stats = uncertainty_stats(run_process(cfg), q=2, momentum_form=form)
                    products[form].append(stats.product[0] / hbar)
    # increment momentum gives C = sqrt(2), displacement gives C = 1; both
    # differ from hbar/2 and that gap does not shrink with any parameter
    assert np.ptp(products["increment"]) < 1e-13
    assert np.ptp(products["displacement"]) < 1e-13
    assert products["increment"][0] == pytest.approx(np.sqrt(2.0), rel=1e-13)
    assert products["displacement"][0] == pytest.approx(1.0, rel=1e-13)


def test_uncertainty_rejects_unknown_form():
    with pytest.raises(ValueError):
        uncertainty_stats(run_process(_config(2)), q=1, momentum_form="midpoint")


def _square_map():
    return HolomorphicMap(
        value=lambda z, t: z[0] ** 2,
        gradient=lambda z, t: np.array([2.0 * z[0], 0.0 * z[1]]),
        laplacian=lambda z, t: 2.0 + 0.0j,
        time_derivative=lambda z, t: 0.0j,
        name="square of the first coordinate")


def test_dynkin_apply_known_value():
    cfg = _config(2, drift=[0.5, 0.25], z0=[0.2, -0.3])
    f = _square_map()
    z = np.array([0.4 + 0.1j, 0.0j])
    v = cfg.drift.payload
    got = dynkin_apply(f, z, 0.0, v, cfg.params)
    want = v[0] * 2.0 * z[0] - 1j * cfg.params.hbar / (2.0 * cfg.params.mass) * 2.0
    assert got == pytest.approx(want, rel=1e-14)


def test_dynkin_residual_closed_form_for_square():
    # for f = z1^2 under constant drift the one-step defect is exactly (v1*eps)^2
    for eps in (1e-2, 1e-3, 1e-4):
        cfg = _config(2, steps=16, eps=eps, drift=[0.5, 0.25], z0=[0.2, -0.3])
        res = dynkin_expansion_residual(_square_map(), cfg, q=2)
        assert res == pytest.approx(abs(0.5 * eps) ** 2, rel=1e-9)


def test_dynkin_residual_guards():
    with pytest.raises(ValueError):
        dynkin_expansion_residual(_square_map(), _config(1), q=1)
    with pytest.raises(ValueError):
        dynkin_expansion_residual(_square_map(), _config(2, steps=4), q=2)
