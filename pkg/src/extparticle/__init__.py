"""Numerical laboratory for deterministic extended-particle processes.

The package builds periodic two-point (1D) and four-point (2D) processes
from exact integer vertex bookkeeping, measures their emergent statistics
(spin, uncertainty products, increment moments, generator expansions),
solves the matching wave equation spectrally, and closes the loop by
coupling the process drift to the evolving field.
"""
from .analytic import (
    free_gaussian_path,
    free_gaussian_phase,
    free_gaussian_psi,
    free_gaussian_rho,
    free_gaussian_velocity,
    free_gaussian_width,
    plane_wave_psi,
)
from .bohm import (
    BohmPath,
    CoupledRun,
    FieldSequence,
    MaskedRegionError,
    bohm_path_to_csv,
    compton_timestep,
    coupled_run_to_csv,
    integrate_bohm,
    run_coupled,
)
from .field import (
    Grid,
    PhaseDecomposition,
    VelocityFields,
    WaveField,
    complex_hj_residual,
    decompose,
    density_sigma,
    evolve,
    evolve_snapshots,
    gaussian_packet,
    plane_wave,
    superpose,
    velocity_fields,
    wavefield_from_binary,
    wavefield_to_binary,
    wavefield_to_csv,
)
from .model import (
    DriftSpec,
    PhysicalParams,
    VertexFrame,
    step_increment,
    step_scale,
    vertex_frame,
    vertex_offset,
)
from .observables import (
    HolomorphicMap,
    PeriodStats,
    SpinReport,
    dynkin_apply,
    dynkin_expansion_residual,
    spin_z,
    uncertainty_stats,
)
from .process import (
    ClassicalPath,
    IncrementMoments,
    ProcessConfig,
    ProcessTrajectory,
    classical_limit,
    increment_moments,
    recurrence_identity_residual,
    run_process,
    trajectory_from_csv,
    trajectory_to_csv,
)
from .variational import (
    ComplexScalarField,
    GridAction,
    LagrangianSpec,
    classical_hj_dp,
    complex_fenchel_legendre,
    complex_min,
    fenchel_transform,
    grid_action_to_csv,
    least_action_step_residual,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
