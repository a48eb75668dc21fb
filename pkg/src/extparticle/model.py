"""Vertex geometry and dimensional constants of the extended-particle model.

An extended particle is a small set of points riding the vertices of a
reference cell: the two endpoints of a segment in one dimension, the four
corners of the unit square in two. A cyclic permutation advances every
point one vertex per time step epsilon, so each point returns to its own
vertex after one full period (2 steps in 1D, 4 steps in 2D).

Vertex coordinates and their per-step offsets are exact integers. The
single complex factor returned by ``step_scale`` is the only floating
multiplier ever applied to them, which keeps period-closure sums exactly
zero in floating point. Downstream modules (process engine, observables)
rely on that exactness.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "PhysicalParams",
    "VertexFrame",
    "DriftSpec",
    "vertex_frame",
    "step_scale",
    "vertex_offset",
    "step_increment",
]

ORIENTATIONS = ("+", "-")


@dataclass(frozen=True)
class PhysicalParams:
    """Reduced action quantum, particle mass, time step, optional light speed."""

    hbar: float = 1.0
    mass: float = 1.0
    epsilon: float = 0.01
    light_speed: float | None = None

    def __post_init__(self) -> None:
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.light_speed is not None and not self.light_speed > 0:
            raise ValueError("light_speed must be positive when given")


@dataclass(frozen=True, eq=False)
class VertexFrame:
    """Integer vertex set plus the cyclic permutation acting on it.

    ``sigma`` maps vertex indices: s u^j = u^sigma[j]. ``cycle`` is the
    precomputed table of permutation powers, cycle[r, j] = index of s^r u^j,
    so all offset lookups stay in exact integer arithmetic.
    """

    dimension: int
    orientation: str
    vertices: np.ndarray  # (n_points, dimension) int64
    sigma: np.ndarray     # (n_points,) int64
    cycle: np.ndarray     # (period, n_points) int64

    @property
    def n_points(self) -> int:
        return self.vertices.shape[0]

    @property
    def period(self) -> int:
        return self.cycle.shape[0]


def vertex_frame(dimension: int, orientation: str = "+") -> VertexFrame:
    """Build the canonical frame for the given dimension.

    1D: vertices +1, -1 and the swap (both orientations coincide).
    2D: unit-square corners (1,1), (1,-1), (-1,-1), (-1,1); "+" cycles them
    in that order (clockwise), "-" is the inverse cycle.
    """
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}")
    if dimension == 1:
        vertices = np.array([[1], [-1]], dtype=np.int64)
        sigma = np.array([1, 0], dtype=np.int64)
    elif dimension == 2:
        vertices = np.array([[1, 1], [1, -1], [-1, -1], [-1, 1]], dtype=np.int64)
        if orientation == "+":
            sigma = np.array([1, 2, 3, 0], dtype=np.int64)
        else:
            sigma = np.array([3, 0, 1, 2], dtype=np.int64)
    else:
        raise ValueError("dimension must be 1 or 2")

    period = vertices.shape[0]
    cycle = np.empty((period, vertices.shape[0]), dtype=np.int64)
    cycle[0] = np.arange(vertices.shape[0])
    for r in range(1, period):
        cycle[r] = sigma[cycle[r - 1]]
    frame = VertexFrame(dimension, orientation, vertices, sigma, cycle)
    # The permutation must return every point home after one period and
    # keep the vertex average at zero; fail loudly if either breaks.
    if not np.array_equal(sigma[cycle[period - 1]], cycle[0]):
        raise ValueError("permutation order does not match the period")
    if vertices.sum(axis=0).any():
        raise ValueError("vertex set is not centered")
    return frame


def step_scale(params: PhysicalParams, dimension: int) -> complex:
    """Complex amplitude of one vertex step: (1+i) sqrt(hbar*eps / (2*dim*m)).

    Its square is i*hbar*eps/m in 1D and i*hbar*eps/(2m) in 2D, the scale
    that makes the period-averaged second moments come out at the quantum
    values.
    """
    if dimension not in (1, 2):
        raise ValueError("dimension must be 1 or 2")
    root = np.sqrt(params.hbar * params.epsilon / (2.0 * dimension * params.mass))
    return complex(root, root)


def vertex_offset(frame: VertexFrame, n: int, j: int) -> np.ndarray:
    """Integer offset s^n u^j - u^j of point j after n steps."""
    if n < 0:
        raise ValueError("step index must be non-negative")
    if not 0 <= j < frame.n_points:
        raise ValueError("point index out of range")
    return frame.vertices[frame.cycle[n % frame.period, j]] - frame.vertices[j]


def step_increment(frame: VertexFrame, params: PhysicalParams, n: int, j: int) -> np.ndarray:
    """Complex displacement of point j during step n: scale * (s^n - s^(n-1)) u^j."""
    if n < 1:
        raise ValueError("step index must be at least 1")
    if not 0 <= j < frame.n_points:
        raise ValueError("point index out of range")
    prev = frame.vertices[frame.cycle[(n - 1) % frame.period, j]]
    cur = frame.vertices[frame.cycle[n % frame.period, j]]
    return step_scale(params, frame.dimension) * (cur - prev)


@dataclass(frozen=True, eq=False)
class DriftSpec:
    """Drift velocity sampled at annihilation instants.

    kind "constant":      payload is a complex vector, one entry per axis.
    kind "closed_form":   payload is a callable t -> complex vector.
    kind "field_coupled": payload is a callable (t, x) -> complex vector with
                          x the real center-of-mass position; used when the
                          drift is read off a wave field.
    """

    kind: str
    payload: object

    KINDS = ("constant", "closed_form", "field_coupled")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise ValueError(f"drift kind must be one of {self.KINDS}")
        if self.kind == "constant":
            value = np.atleast_1d(np.asarray(self.payload, dtype=complex))
            object.__setattr__(self, "payload", value)
        elif not callable(self.payload):
            raise ValueError(f"{self.kind} drift needs a callable payload")

    @classmethod
    def constant(cls, value) -> "DriftSpec":
        return cls("constant", value)

    @classmethod
    def closed_form(cls, fn: Callable) -> "DriftSpec":
        return cls("closed_form", fn)

    @classmethod
    def field_coupled(cls, fn: Callable) -> "DriftSpec":
        return cls("field_coupled", fn)

    def at(self, t: float, x: np.ndarray | None = None) -> np.ndarray:
        """Evaluate the drift at time t (and position x for coupled drifts)."""
        if self.kind == "constant":
            return self.payload
        if self.kind == "closed_form":
            return np.atleast_1d(np.asarray(self.payload(t), dtype=complex))
        if x is None:
            raise ValueError("field_coupled drift needs the current position")
        return np.atleast_1d(np.asarray(self.payload(t, x), dtype=complex))
