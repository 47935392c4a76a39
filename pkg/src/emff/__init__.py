"""Electromagnetic formation flight: optimal dipole allocation and swarm power analysis."""

from .magnetics import (
    MU0,
    MIN_SEPARATION,
    CoilDesign,
    DipoleWaveform,
    InteractionOperator,
    Wrench,
    ZeroSeparationError,
    averaged_wrench,
    build_los_frame,
    dipole_field_wrench,
    instantaneous_wrench,
    interaction_operator,
    psi_stack,
    time_average_oracle,
)
from .dual import (
    DualCertificate,
    DualProblem,
    SolverError,
    psd_feasible,
    solve_dual,
    solve_dual_batch,
)
from .allocation import (
    AllocationSolution,
    GapViolationError,
    GramLift,
    NoFeasiblePointError,
    RecoveryError,
    allocate,
    brute_force_allocate,
    extract_waveforms,
    recover_gram,
)
from .orbit import (
    K_J2,
    MU_EARTH,
    R_EARTH,
    OrbitContext,
    RelativeElements,
    StablePlane,
    desired_trajectory,
    freq_mismatch_disturbance,
    integrate_dynamics,
    j2_core_matrix,
    j2_disturbance_matrix,
    make_context,
    propagate_analytic,
    propagate_analytic_state,
    relative_elements,
)
from .brigade import (
    DisturbanceField,
    GridConfig,
    equilibrium_residuals,
    force_weight,
    pair_command,
    telescoping_oracle,
    torque_weight,
    unit_wrench,
    weighting,
)
from .power import (
    PowerReport,
    compute_power_report,
    dipole_metric,
    orbit_time_grid,
    pair_power_w_star,
    peak_power,
    power_index,
    surface_ratio,
    total_power,
)

__version__ = "0.1.0"
