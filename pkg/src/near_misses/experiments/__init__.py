"""Desk-scale experiments built on the counting, oscillatory and bootstrap modules."""

from .diophantine import (
    ApproxFunction,
    DAConvergence,
    DyadicReport,
    da_convergence_check,
    da_dyadic_count_check,
    log_psi,
    power_psi,
)
from .dimension_growth import (
    DimensionGrowthRow,
    PropertyPManifold,
    dimension_growth_count,
    dimension_growth_sweep,
    find_witness_direction,
    get_manifold,
    manifold_catalog,
)
from .robert_sargos import RSRow, robert_sargos_brute, robert_sargos_count, rs_sweep
from .stats import GrowthFit, growth_exponent
from .sweeps import (
    DeltaRule,
    SweepRow,
    SweepSpec,
    SweepTable,
    asymptotic_sweep,
    bound_shape_check,
    example2_lower_bound,
    fermat_excess_sweep,
    indicator_sandwich_check,
)
