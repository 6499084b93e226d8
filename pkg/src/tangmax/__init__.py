"""tangmax: a numerical lab for Schrodinger maximal functions along
tangential power curves.

Band-limited periodic data evolve exactly under the free propagator; the
package measures the L2 growth in the spatial scale R of the maximal value
of |u| along rescaled power curves, audits the cube-counting facts behind
the dyadic reduction, and fits growth exponents against the critical index
max{(1-2*alpha)/2, n/(2(n+1))}.
"""

from .curves import ModelCurve, RescaledCurve, arc_length, holder_ratio, lattice_neighborhood
from .cubes import (
    CubeSet,
    DensityReport,
    ball_density,
    density_bound_report,
    density_bound_sweep,
    dyadic_range,
    dyadic_slice,
    overlap_report,
    shift_invariance_checks,
    witness_cubes,
)
from .errors import BudgetError, DomainError, StructuralError, TangmaxError, ValidationError
from .fields import (
    FieldSpec,
    PeriodicBandLimitedField,
    evaluate,
    evaluate_grid,
    evaluate_points,
    generate,
    grid_norm_l2,
    modulate,
    norm_l2,
    parse_spec_text,
    spec_hash,
    spec_text,
)
from .runtime import get_workers, set_workers
from .scan import DEFAULT_ROW_BUDGET, MaximalProfile, NormRatios, lattice_l2, norm_ratio, scan
from .stability import (
    StabilityInstance,
    StabilityReport,
    averaged_stability_ratio,
    ratio_by_truncation,
    stability_ratio,
    stability_sweep,
    tail_weight_bound,
)
from .sweeps import (
    ExponentFit,
    SweepRecord,
    auto_tol,
    critical_exponent,
    density_restriction_ratio,
    fit_power_law,
    run_sweep,
    slice_bound,
    slice_bound_max,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
