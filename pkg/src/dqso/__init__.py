"""Dissipative quadratic stochastic operators on the finite simplex."""

from .simplex import (
    MajorizationVerdict,
    NotMajorizedError,
    SimplexPoint,
    Transfer,
    apply_transfers,
    is_majorized,
    majorization_gap,
    sample_uniform,
    t_transform_chain,
)
from .operators import (
    AmbiguousDiagonal,
    BlockPartition,
    HeredityTensor,
    NoUnitDiagonal,
    ValidationIssue,
    extract_partition,
    validate,
)
from .dissipativity import (
    AuditReport,
    Counterexample,
    DissipativityVerdict,
    audit_necessary,
    check_dissipative,
)
from .structure import (
    ClassificationVerdict,
    CycleStructure,
    FixedPointSet,
    NoConvergence,
    NotCanonical,
    classify,
    fixed_point_set,
    numeric_fixed_points,
    transfer_cycles,
)
from .dynamics import (
    LyapunovSeries,
    OmegaReport,
    TrajectoryRecord,
    cesaro_means,
    lyapunov_series,
    omega_limit,
    trajectory,
)

__version__ = "0.1.0"
