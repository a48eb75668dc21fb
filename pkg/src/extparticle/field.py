"""Periodic Schrodinger solver and the phase/density decomposition.

Evolution uses the symmetric split-step spectral scheme: half a potential
phase, one exact kinetic step in Fourier space, half a potential phase.
All multipliers have unit modulus, so the discrete norm is preserved to
rounding no matter how many steps are taken.

``decompose`` splits psi into the density rho = |psi|^2 and the action
S = hbar * (phase unwrapped from the node of maximal rho), and forms the
complex action S - i*(hbar/2)*ln(rho). Nodes with rho below a relative
floor are flagged invalid and never repaired. Gradients account for the
winding of the phase across the periodic box (a plane wave has a linear,
non-periodic action), by removing the linear ramp before differencing and
adding its slope back.
"""
from __future__ import annotations

import inspect
import struct
from dataclasses import dataclass

import numpy as np

from .model import PhysicalParams

__all__ = [
    "Grid",
    "WaveField",
    "PhaseDecomposition",
    "VelocityFields",
    "gaussian_packet",
    "plane_wave",
    "superpose",
    "evolve",
    "evolve_snapshots",
    "decompose",
    "velocity_fields",
    "complex_hj_residual",
    "density_sigma",
    "wavefield_to_csv",
    "wavefield_to_binary",
    "wavefield_from_binary",
]

RHO_FLOOR_REL = 1e-12
_STENCIL_RADIUS = 2


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform periodic grid, one or two axes of (min, max, nodes)."""

    axes: tuple

    def __post_init__(self) -> None:
        axes = tuple((float(a), float(b), int(n)) for a, b, n in self.axes)
        object.__setattr__(self, "axes", axes)
        if len(axes) not in (1, 2):
            raise ValueError("grid must have one or two axes")
        for a, b, n in axes:
            if b <= a:
                raise ValueError("axis max must exceed min")
            if n < 64 or n & (n - 1):
                raise ValueError("nodes per axis must be a power of two, at least 64")

    @property
    def dimension(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(n for _, _, n in self.axes)

    @property
    def spacing(self) -> tuple:
        return tuple((b - a) / n for a, b, n in self.axes)

    @property
    def lengths(self) -> tuple:
        return tuple(b - a for a, b, _ in self.axes)

    def coords(self) -> list:
        return [a + np.arange(n) * (b - a) / n for a, b, n in self.axes]

    def mesh(self) -> list:
        return list(np.meshgrid(*self.coords(), indexing="ij"))

    def wavenumbers(self) -> list:
        return [2.0 * np.pi * np.fft.fftfreq(n, d=(b - a) / n) for a, b, n in self.axes]

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))


@dataclass(frozen=True, eq=False)
class WaveField:
    grid: Grid
    time: float
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            raise ValueError("values do not match the grid shape")
        object.__setattr__(self, "values", values)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume))


def gaussian_packet(grid: Grid, sigma0, center=None, k0=None) -> WaveField:
    """Product of per-axis free Gaussian packets at t = 0."""
    from .analytic import free_gaussian_psi

    dim = grid.dimension
    sigma0 = np.broadcast_to(np.asarray(sigma0, dtype=float), (dim,))
    center = np.zeros(dim) if center is None else np.broadcast_to(np.asarray(center, dtype=float), (dim,))
    k0 = np.zeros(dim) if k0 is None else np.broadcast_to(np.asarray(k0, dtype=float), (dim,))
    lines = [free_gaussian_psi(x, 0.0, sigma0=s, x0=c, k0=k)
             for x, s, c, k in zip(grid.coords(), sigma0, center, k0)]
    values = lines[0] if dim == 1 else np.multiply.outer(lines[0], lines[1])
    return WaveField(grid=grid, time=0.0, values=values)


def plane_wave(grid: Grid, modes) -> WaveField:
    """Unit-amplitude plane wave; k is fixed by integer modes per axis."""
    modes = np.atleast_1d(np.asarray(modes, dtype=int))
    if modes.size != grid.dimension:
        raise ValueError("one integer mode per axis")
    phase = 0.0
    for x, m, L in zip(grid.mesh(), modes, grid.lengths):
        phase = phase + 2.0 * np.pi * m / L * x
    return WaveField(grid=grid, time=0.0, values=np.exp(1j * phase))


def superpose(fields, weights=None) -> WaveField:
    """Weighted sum of same-grid fields, renormalised to unit norm."""
    if weights is None:
        weights = np.ones(len(fields))
    values = sum(w * f.values for w, f in zip(weights, fields))
    out = WaveField(grid=fields[0].grid, time=fields[0].time, values=values)
    return WaveField(grid=out.grid, time=out.time, values=out.values / out.norm())


def _potential_on_mesh(potential, grid: Grid, t: float):
    """Potential as an array on the grid; None means free."""
    if potential is None:
        return None
    if isinstance(potential, np.ndarray):
        return potential
    if callable(potential):
        params = inspect.signature(potential).parameters
        if len(params) > grid.dimension:
            return np.asarray(potential(*grid.mesh(), t), dtype=float)
        return np.asarray(potential(*grid.mesh()), dtype=float)
    raise ValueError("potential must be None, an array, or a callable")


def _potential_is_static(potential, grid: Grid) -> bool:
    return not (callable(potential)
                and len(inspect.signature(potential).parameters) > grid.dimension)


def evolve(psi: WaveField, potential, params: PhysicalParams, dt: float, steps: int) -> WaveField:
    """Advance psi by steps * dt with the split-step spectral scheme."""
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if steps == 0 or dt == 0.0:
        return WaveField(grid=psi.grid, time=psi.time + steps * dt, values=psi.values.copy())
    grid = psi.grid
    ks = grid.wavenumbers()
    if grid.dimension == 1:
        k2 = ks[0] ** 2
    else:
        k2 = np.add.outer(ks[0] ** 2, ks[1] ** 2)
    kinetic = np.exp(-1j * params.hbar * k2 * dt / (2.0 * params.mass))

    values = psi.values.copy()
    static = _potential_is_static(potential, grid)
    half = None
    if static:
        v_arr = _potential_on_mesh(potential, grid, psi.time)
        half = 1.0 if v_arr is None else np.exp(-0.5j * v_arr * dt / params.hbar)
    for n in range(steps):
        if not static:
            t_mid = psi.time + (n + 0.5) * dt
            v_arr = _potential_on_mesh(potential, grid, t_mid)
            half = np.exp(-0.5j * v_arr * dt / params.hbar)
        values = half * np.fft.ifftn(kinetic * np.fft.fftn(half * values))
    return WaveField(grid=grid, time=psi.time + steps * dt, values=values)


def evolve_snapshots(psi: WaveField, potential, params: PhysicalParams, dt: float,
                     steps: int, record_every: int = 1) -> list:
    """Like evolve, returning the field every record_every steps."""
    if record_every < 1:
        raise ValueError("record_every must be positive")
    out = [WaveField(grid=psi.grid, time=psi.time, values=psi.values.copy())]
    current = psi
    done = 0
    while done < steps:
        chunk = min(record_every, steps - done)
        current = evolve(current, potential, params, dt, chunk)
        out.append(current)
        done += chunk
    return out


@dataclass(frozen=True, eq=False)
class PhaseDecomposition:
    """rho, unwrapped action S, complex action, and the invalid-node mask.

    mask is True where rho fell below rho_floor; S and log_rho are not
    meaningful there. winding holds the integer phase turns per axis, used
    to differentiate S on the periodic box.
    """

    grid: Grid
    time: float
    rho: np.ndarray
    action: np.ndarray          # S, real
    log_rho: np.ndarray         # clamped at the floor
    complex_action: np.ndarray  # S - i*(hbar/2)*log rho
    mask: np.ndarray            # True = invalid
    seed: tuple
    winding: tuple
    rho_floor: float
    hbar: float


def _unwrap_ring(rolled: np.ndarray, bad: np.ndarray) -> np.ndarray:
    """Unwrap rings (last axis) anchored at index 0, splicing at a dead arc.

    A plain forward unwrap reaches the nodes left of the anchor the long
    way round, through whatever noise sits below the density floor, and
    drags spurious turns back into the far side of the support. Unwrap in
    both directions instead and switch to the backward branch past the
    last flagged node, so both sides of the support are reached without
    crossing it.
    """
    fwd = np.unwrap(rolled, axis=-1)
    bwd = np.unwrap(rolled[..., ::-1], axis=-1)[..., ::-1]
    two_pi = 2.0 * np.pi
    # anchor the backward branch across the ring-closure step, one hop
    # left of the anchor, not through the far side of the ring
    delta = np.angle(np.exp(1j * (rolled[..., -1:] - rolled[..., :1])))
    bwd = bwd + two_pi * np.round((fwd[..., :1] + delta - bwd[..., -1:]) / two_pi)
    pos = np.arange(rolled.shape[-1])
    last_bad = np.max(np.where(bad, pos, -1), axis=-1, keepdims=True)
    return np.where((pos > last_bad) & (last_bad >= 0), bwd, fwd)


def _unwrap_from_seed(theta: np.ndarray, seed: tuple, bad: np.ndarray) -> np.ndarray:
    if theta.ndim == 1:
        rolled = np.roll(theta, -seed[0])
        rolled = _unwrap_ring(rolled, np.roll(bad, -seed[0]))
        return np.roll(rolled, seed[0])
    rolled = np.roll(theta, (-seed[0], -seed[1]), axis=(0, 1))
    bad_r = np.roll(bad, (-seed[0], -seed[1]), axis=(0, 1))
    col = _unwrap_ring(rolled[:, 0], bad_r[:, 0])
    rows = _unwrap_ring(rolled, bad_r)
    rows = rows + (col - rows[:, 0])[:, None]
    return np.roll(rows, (seed[0], seed[1]), axis=(0, 1))


def _axis_winding(theta: np.ndarray, bad: np.ndarray, seed: tuple, axis: int) -> int:
    """Integer turns of the raw phase around one full loop of the box.

    Counted only when the loop through the seed never dips below the
    density floor; through dead nodes the phase is noise and the count
    meaningless, so 0 is reported (the unwrap then keeps the action
    continuous across the box closure, which is all the downstream
    stencils need).
    """
    if theta.ndim == 1:
        line, line_bad = theta, bad
    elif axis == 0:
        line, line_bad = theta[:, seed[1]], bad[:, seed[1]]
    else:
        line, line_bad = theta[seed[0], :], bad[seed[0], :]
    if line_bad.any():
        return 0
    steps = np.angle(np.exp(1j * np.diff(np.append(line, line[0]))))
    return int(np.round(steps.sum() / (2.0 * np.pi)))


def decompose(psi: WaveField, params: PhysicalParams, rho_floor_rel: float = RHO_FLOOR_REL) -> PhaseDecomposition:
    rho = np.abs(psi.values) ** 2
    peak = float(rho.max())
    if peak <= 0.0:
        raise ValueError("field vanishes everywhere, nothing to decompose")
    floor = rho_floor_rel * peak
    mask = rho < floor
    if mask.all():
        raise ValueError("all nodes are below the density floor")
    seed = np.unravel_index(int(np.argmax(rho)), rho.shape)

    theta = np.angle(psi.values)
    theta_u = _unwrap_from_seed(theta, seed, mask)
    winding = tuple(_axis_winding(theta, mask, seed, a) for a in range(psi.grid.dimension))
    action = params.hbar * theta_u
    log_rho = np.log(np.maximum(rho, floor))
    complex_action = action - 0.5j * params.hbar * log_rho
    return PhaseDecomposition(grid=psi.grid, time=psi.time, rho=rho, action=action,
                              log_rho=log_rho, complex_action=complex_action, mask=mask,
                              seed=seed, winding=winding, rho_floor=floor, hbar=params.hbar)


def _fd4(arr: np.ndarray, axis: int, dx: float) -> np.ndarray:
    """Fourth-order central first derivative on a periodic axis."""
    return (-np.roll(arr, -2, axis) + 8.0 * np.roll(arr, -1, axis)
            - 8.0 * np.roll(arr, 1, axis) + np.roll(arr, 2, axis)) / (12.0 * dx)


def _fd4_second(arr: np.ndarray, axis: int, dx: float) -> np.ndarray:
    """Fourth-order central second derivative on a periodic axis."""
    return (-np.roll(arr, -2, axis) + 16.0 * np.roll(arr, -1, axis) - 30.0 * arr
            + 16.0 * np.roll(arr, 1, axis) - np.roll(arr, 2, axis)) / (12.0 * dx * dx)


def _ramp(dec: PhaseDecomposition) -> np.ndarray:
    """Winding part of the action, slope hbar*2pi*w/L along each axis.

    Built as a sawtooth anchored at the seed so its branch jump lands
    exactly where the unwrapped phase changes branch; the difference
    action - ramp is then continuous across the whole periodic box.
    """
    grid = dec.grid
    ramp = np.zeros(grid.shape)
    for a in range(grid.dimension):
        n = grid.shape[a]
        d = (np.arange(n) - dec.seed[a]) % n
        line = dec.hbar * 2.0 * np.pi * dec.winding[a] * d / n
        shape = [1] * grid.dimension
        shape[a] = n
        ramp = ramp + line.reshape(shape)
    return ramp


def _ramp_slopes(dec: PhaseDecomposition) -> np.ndarray:
    return np.array([dec.hbar * 2.0 * np.pi * dec.winding[a] / dec.grid.lengths[a]
                     for a in range(dec.grid.dimension)])


def _widen_mask(mask: np.ndarray, radius: int = _STENCIL_RADIUS) -> np.ndarray:
    wide = mask.copy()
    for axis in range(mask.ndim):
        for shift in range(1, radius + 1):
            wide |= np.roll(mask, shift, axis) | np.roll(mask, -shift, axis)
    return wide


def _complex_action_gradient(dec: PhaseDecomposition) -> np.ndarray:
    """Winding-aware gradient of the complex action, shape (dim, *grid)."""
    grid = dec.grid
    periodic_part = dec.complex_action - _ramp(dec)
    slopes = _ramp_slopes(dec)
    return np.stack([_fd4(periodic_part, a, grid.spacing[a]) + slopes[a]
                     for a in range(grid.dimension)])


@dataclass(frozen=True, eq=False)
class VelocityFields:
    """Pilot velocity grad(S)/m and its complex extension grad(S_c)/m."""

    grid: Grid
    time: float
    bohm: np.ndarray              # (dim, *grid) real
    complex_velocity: np.ndarray  # (dim, *grid) complex
    mask: np.ndarray              # widened by the stencil radius


def velocity_fields(dec: PhaseDecomposition, params: PhysicalParams) -> VelocityFields:
    grid = dec.grid
    periodic_action = dec.action - _ramp(dec)
    slopes = _ramp_slopes(dec)
    grad_s = np.stack([_fd4(periodic_action, a, grid.spacing[a]) + slopes[a]
                       for a in range(grid.dimension)])
    bohm = grad_s / params.mass
    complex_velocity = _complex_action_gradient(dec) / params.mass
    return VelocityFields(grid=grid, time=dec.time, bohm=bohm,
                          complex_velocity=complex_velocity, mask=_widen_mask(dec.mask))


def _aligned_complex_action(dec: PhaseDecomposition, ref: PhaseDecomposition) -> np.ndarray:
    """Complex action of dec with its phase branch matched to ref's.

    Independent unwraps of nearby snapshots can disagree by 2*pi*hbar on
    parts of the box (their seeds, hence branch cuts, need not coincide).
    While the true action moves by less than pi*hbar between the two
    times (a sampling condition on the snapshot spacing) the mismatch is
    exactly the pointwise whole-turn multiple removed here.
    """
    delta = (dec.action - ref.action) / dec.hbar
    action = ref.action + dec.hbar * np.angle(np.exp(1j * delta))
    return action - 0.5j * dec.hbar * dec.log_rho


def complex_hj_residual(fields, potential, params: PhysicalParams) -> float:
    """Max defect of dS/dt + (grad S_c)^2/2m + V - i(hbar/2m) lap S_c.

    fields are three WaveFields at equally spaced times; the time
    derivative is the central difference of the outer pair, spatial terms
    sit on the middle one.
    """
    if len(fields) != 3:
        raise ValueError("need three consecutive wave fields")
    prev, mid, nxt = fields
    h1 = mid.time - prev.time
    h2 = nxt.time - mid.time
    if h1 <= 0 or abs(h1 - h2) > 1e-12 * max(abs(h1), abs(h2)):
        raise ValueError("wave fields must be equally spaced in time")
    if prev.grid is not mid.grid and prev.grid.axes != mid.grid.axes:
        raise ValueError("wave fields must share a grid")

    dec_prev = decompose(prev, params)
    dec_mid = decompose(mid, params)
    dec_next = decompose(nxt, params)
    sc_prev = _aligned_complex_action(dec_prev, dec_mid)
    sc_next = _aligned_complex_action(dec_next, dec_mid)
    dsdt = (sc_next - sc_prev) / (h1 + h2)

    grid = mid.grid
    grad = _complex_action_gradient(dec_mid)
    periodic_part = dec_mid.complex_action - _ramp(dec_mid)
    lap = sum(_fd4_second(periodic_part, a, grid.spacing[a]) for a in range(grid.dimension))
    v_arr = _potential_on_mesh(potential, grid, mid.time)
    if v_arr is None:
        v_arr = 0.0

    residual = (dsdt + (grad ** 2).sum(axis=0) / (2.0 * params.mass) + v_arr
                - 0.5j * params.hbar / params.mass * lap)
    valid = ~_widen_mask(dec_prev.mask | dec_mid.mask | dec_next.mask)
    if not valid.any():
        raise ValueError("no valid nodes for the residual")
    return float(np.abs(residual[valid]).max())


def density_sigma(psi: WaveField) -> np.ndarray:
    """Per-axis standard deviation of the normalised density."""
    grid = psi.grid
    rho = np.abs(psi.values) ** 2
    w = rho / rho.sum()
    mesh = grid.mesh()
    out = []
    for a in range(grid.dimension):
        mu = float((w * mesh[a]).sum())
        out.append(np.sqrt(float((w * (mesh[a] - mu) ** 2).sum())))
    return np.asarray(out)


def wavefield_to_csv(psi: WaveField, params: PhysicalParams, path) -> None:
    """Write coordinates, re/im of psi, rho and S, one node per row."""
    import csv as _csv

    dec = decompose(psi, params)
    grid = psi.grid
    mesh = grid.mesh()
    coord_names = ["x", "y"][: grid.dimension]
    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(coord_names + ["re", "im", "rho", "S"])
        flat = [m.ravel() for m in mesh]
        vals = psi.values.ravel()
        rho = dec.rho.ravel()
        action = dec.action.ravel()
        for i in range(vals.size):
            row = [repr(float(f[i])) for f in flat]
            row += [repr(float(vals[i].real)), repr(float(vals[i].imag)),
                    repr(float(rho[i])), repr(float(action[i]))]
            writer.writerow(row)


_BINARY_MAGIC = b"WVF1"


def wavefield_to_binary(psi: WaveField, path) -> None:
    """Dump psi to the documented little-endian binary layout.

    Header: magic "WVF1", uint32 ndim, then per axis uint32 nodes, float64
    min, float64 max; float64 time. Payload: row-major complex values as
    (re, im) float64 pairs.
    """
    grid = psi.grid
    with open(path, "wb") as fh:
        fh.write(_BINARY_MAGIC)
        fh.write(struct.pack("<I", grid.dimension))
        for a, b, n in grid.axes:
            fh.write(struct.pack("<Idd", n, a, b))
        fh.write(struct.pack("<d", psi.time))
        fh.write(np.ascontiguousarray(psi.values, dtype="<c16").tobytes())


def wavefield_from_binary(path) -> WaveField:
    with open(path, "rb") as fh:
        if fh.read(4) != _BINARY_MAGIC:
            raise ValueError("not a wave-field dump")
        ndim, = struct.unpack("<I", fh.read(4))
        axes = []
        for _ in range(ndim):
            n, a, b = struct.unpack("<Idd", fh.read(20))
            axes.append((a, b, n))
        time, = struct.unpack("<d", fh.read(8))
        grid = Grid(axes=tuple(axes))
        values = np.frombuffer(fh.read(), dtype="<c16").reshape(grid.shape)
    return WaveField(grid=grid, time=time, values=values.astype(complex))
