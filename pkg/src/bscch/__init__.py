"""Desk-scale simulator for a coupled bulk-surface phase-field system.

Bulk Cahn-Hilliard dynamics on the unit disk coupled to a surface
Cahn-Hilliard equation on its boundary through two extended parameters
(K for the phase fields, L for the chemical potentials) spanning
Dirichlet, Robin, and Neumann couplings, with singular potentials handled
by Moreau-Yosida regularization and a conservative, energy-stable
convex-splitting time integrator.
"""

from .assembly import CouplingParams, Mobility, VelocityField, assemble_core, sigma
from .diagnostics import (
    CDReport,
    DiagnosticsRecord,
    LimitReport,
    continuous_dependence_experiment,
    limit_study,
)
from .elliptic import (
    BulkSurfacePair,
    InverseCoupledOperator,
    dual_norm,
    estimate_poincare_constant,
    manufactured_errors,
    solve_coupled_poisson,
    solve_inverse_S,
)
from .errors import (
    BscchError,
    InvalidArgument,
    MeshParseError,
    SolverFailure,
    StepFailure,
    ValidationError,
)
from .mesh import TriMesh, generate_disk_mesh, mesh_stats, read_mesh, write_mesh
from .potentials import (
    Potential,
    check_domination,
    eval_regularized,
    make_potential,
    moreau_envelope,
    resolvent,
    verify_scalar_properties,
    yosida,
)
from .stepper import (
    InitialDataSpec,
    NewtonParams,
    RunConfig,
    RunParams,
    RunResult,
    State,
    Stepper,
    epsilon_continuation,
    make_initial_data,
    run,
)

__version__ = "0.1.0"
