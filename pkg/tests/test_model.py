import numpy as np
import pytest

from extparticle.model import (DriftSpec, PhysicalParams, step_increment, step_scale,
                               vertex_frame, vertex_offset)


def test_params_reject_nonpositive_values():
    with pytest.raises(ValueError):
        PhysicalParams(hbar=0.0)
    with pytest.raises(ValueError):
        PhysicalParams(mass=-1.0)
    with pytest.raises(ValueError):
        PhysicalParams(epsilon=0.0)
    with pytest.raises(ValueError):
        PhysicalParams(light_speed=-3e8)


def test_frame_1d_geometry():
    frame = vertex_frame(1)
    assert frame.period == 2
    assert frame.n_points == 2
    assert np.array_equal(frame.vertices, [[1], [-1]])
    # the swap is its own inverse
    assert np.array_equal(frame.sigma[frame.sigma], [0, 1])


@pytest.mark.parametrize("orientation,sigma", [("+", [1, 2, 3, 0]), ("-", [3, 0, 1, 2])])
def test_frame_2d_cycles(orientation, sigma):
    frame = vertex_frame(2, orientation)
    assert frame.period == 4
    assert np.array_equal(frame.vertices, [[1, 1], [1, -1], [-1, -1], [-1, 1]])
    assert np.array_equal(frame.sigma, sigma)
    # one full period returns every point to its own vertex
    assert np.array_equal(frame.cycle[-1][frame.sigma], np.arange(4))


def test_opposite_orientations_are_inverse_permutations():
    plus = vertex_frame(2, "+")
    minus = vertex_frame(2, "-")
    assert np.array_equal(plus.sigma[minus.sigma], np.arange(4))


def test_frame_rejects_bad_inputs():
    with pytest.raises(ValueError):
        vertex_frame(3)
    with pytest.raises(ValueError):
        vertex_frame(2, "x")


def test_step_scale_square():
    rng = np.random.default_rng(11)
    for _ in range(10):
        params = PhysicalParams(hbar=rng.uniform(0.3, 3.0), mass=rng.uniform(0.3, 3.0),
                                epsilon=rng.uniform(1e-4, 1e-1))
        for dim in (1, 2):
            gamma = step_scale(params, dim)
            want = 1j * params.hbar * params.epsilon / (dim * params.mass)
            assert gamma ** 2 == pytest.approx(want, rel=1e-14)
            assert gamma.real == gamma.imag > 0


def test_vertex_offset_closes_each_period():
    for dim, orientation in [(1, "+"), (2, "+"), (2, "-")]:
        frame = vertex_frame(dim, orientation)
        for j in range(frame.n_points):
            assert np.array_equal(vertex_offset(frame, frame.period, j), [0] * dim)
            # partial offsets stay on the integer lattice spanned by vertices
            for n in range(1, frame.period):
                off = vertex_offset(frame, n, j)
                assert off.dtype == np.int64


def test_step_increments_sum_to_zero_over_a_period():
    params = PhysicalParams(epsilon=0.02)
    for dim in (1, 2):
        frame = vertex_frame(dim)
        for j in range(frame.n_points):
            total = sum(step_increment(frame, params, n, j) for n in range(1, frame.period + 1))
            assert np.all(total == 0)


def test_drift_spec_kinds():
    c = DriftSpec.constant([1.0 + 2.0j])
    assert np.array_equal(c.at(0.7), [1.0 + 2.0j])
    f = DriftSpec.closed_form(lambda t: [t, 2 * t])
    assert np.array_equal(f.at(0.5), [0.5, 1.0])
    g = DriftSpec.field_coupled(lambda t, x: x * t)
    assert np.array_equal(g.at(2.0, np.array([3.0, 4.0])), [6.0, 8.0])
    with pytest.raises(ValueError):
        g.at(2.0)
    with pytest.raises(ValueError):
        DriftSpec("weird", [1.0])
    with pytest.raises(ValueError):
        DriftSpec.closed_form("not callable")
