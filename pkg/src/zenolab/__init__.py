"""Numerical experiments on projective measurement protocols for a decaying
two-level atom: an exactly causal 1D atom-field solver, a discrete conveyor
lattice, a measurement protocol engine, and an external-detector extension.
"""

__version__ = "0.1.0"

from .errors import SimulationLimitError
from .lattice import (
    LatticeModel,
    LatticeState,
    new_lattice_model,
    rotation_core_step,
    lattice_step,
    verify_one_sided,
    product_identity_residual,
)
from .atomfield import (
    ModelParams,
    AtomFieldModel,
    AtomFieldState,
    build_model,
    init_excited,
    init_two_particle,
    step,
    evolve_to,
)
from .measure import (
    RegionProjector,
    wave_zone_projector,
    whole_region_projector,
    field_region_projector,
    lattice_projector,
    MeasurementSchedule,
    make_schedule,
    interior_equal_schedule,
    zeno_schedule,
    apply_measurement,
    run_noclick_branch,
    run_branch_tree,
    run_monte_carlo,
    measured_survival,
    compute_survival_curve,
    fit_short_time_alpha,
    fit_decay_rate,
    zeno_scan,
    theorem_residual,
    best_ring_deviation,
)
