"""Two-well problems under linear differential constraints (curl, div, curl-curl).

Closed-form compatibility quantifiers, the relaxed excess energy, explicit
branching microstructures with exact energy ledgers, and grid/Fourier
energy evaluation.
"""

from .compatibility import (
    CompatQuantifiers,
    EquicompatibleError,
    LaminationSet,
    multiplier_p,
    optimal_directions,
    quantifiers,
    quantifiers_oracle,
    vanishing_order_fit,
)
from .construction import (
    BranchField,
    CellSpec,
    assemble_chan_conti,
    assemble_grad,
    choose_N,
    make_layout,
    sawtooth,
    symmetrize_field,
    unit_cell,
)
from .energy import (
    EnergyBreakdown,
    GridField,
    elastic_energy,
    elastic_energy_exact,
    fourier_relaxed_energy,
    sample_grid,
    surface_energy,
    surface_energy_grid,
)
from .operators import (
    DiffOp,
    compatible_part_sq,
    project_compatible,
    project_compatible_oracle,
    project_many,
    symbol_apply,
    symbol_many,
)
from .reduction import PureRegimeError, Reduction, build_field, cc_branching, grad_branching, reduce_to_canonical
from .relaxation import (
    DegenerateDataError,
    ProblemData,
    RelaxReport,
    compatible_approximation,
    envelope_at_fraction,
    optimal_fraction,
    relax,
)
from .scaling import SweepRecord, fit_records, run_oracles, sweep, sweep_point

__version__ = "0.1.0"
