"""Stokes waves with constant vorticity: dispersion, spectral residual,
Lyapunov-Schmidt reduction and resonant bifurcation drivers."""

from .bifurcation import (
    BranchPoint,
    MountainPassResult,
    mountain_pass,
    nonresonant_branch,
    orbit_distance,
    orbit_distinct,
    orbit_tag,
    refine_critical_point,
    resonant_fixed_momentum,
    resonant_fixed_speed,
)
from .dispersion import (
    ClassificationRecord,
    PhysicalParams,
    atlas_scan,
    bifurcation_speed,
    bond_numbers,
    classify_kernel,
    find_resonant_kappa,
    kernel_regime,
    omega,
    phase_speed,
)
from .errors import (
    DomainError,
    ExpansionDivergenceError,
    GeometryError,
    GridTooSmallError,
    MisuseError,
    NonConvergenceError,
    ProjectionLeakError,
    ResonanceSearchError,
    StokesError,
    UnsupportedConfigurationError,
)
from .reduction import (
    KernelData,
    ReducedVector,
    c_of_v,
    coords,
    embed,
    kernel_basis,
    preconditioner_apply,
    project_V,
    project_W,
    range_solve,
    reduced_grad,
    reduced_momentum,
    reduced_phi,
    sympl_form,
)
from .wavefield import (
    SpectralGrid,
    SurfaceState,
    dno_apply,
    flat_dno_apply,
    hamiltonian,
    hamiltonian_wahlen,
    linearized_apply,
    momentum,
    residual,
    wahlen_backward,
    wahlen_forward,
)

__version__ = "0.1.0"
