"""Fixed-energy phase shifts and stable inversion for layered potentials."""

from .forward import (
    LayeredPotential,
    PhaseShiftSet,
    SolverError,
    add_noise,
    phase_shifts,
)
from .global_search import (
    SearchParams,
    StabilityReport,
    reduced_random_search,
    stability_index,
)
from .local_search import LineSearchSpec, MinimizerRecord, local_minimize
from .objective import (
    AdmissibleBox,
    Configuration,
    UndefinedObjectiveError,
    make_objective,
    misfit,
    potential_distance,
    potential_norm,
    well_summary,
)
from .riccati import RiccatiTable, modified_riccati_table, power_solutions, riccati_table

__all__ = [
    "AdmissibleBox",
    "Configuration",
    "LayeredPotential",
    "LineSearchSpec",
    "MinimizerRecord",
    "PhaseShiftSet",
    "RiccatiTable",
    "SearchParams",
    "SolverError",
    "StabilityReport",
    "UndefinedObjectiveError",
    "add_noise",
    "local_minimize",
    "make_objective",
    "misfit",
    "modified_riccati_table",
    "phase_shifts",
    "potential_distance",
    "potential_norm",
    "power_solutions",
    "reduced_random_search",
    "riccati_table",
    "stability_index",
    "well_summary",
]
