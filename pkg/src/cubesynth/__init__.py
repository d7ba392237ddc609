"""Noise-free differentially private synthetic data on the Boolean cube.

The library reweights a fresh uniform sample (the reduced space) so that
its low-degree marginals match the true data's, then draws synthetic
records from the reweighted sample.  Privacy comes from the bounded
sensitivity of the selected density, not from added noise.
"""

from .conditioning import (
    ConditioningVerdict,
    ReducedSpace,
    check_conditioning,
    conditioning_threshold,
    draw_reduced_space,
    draw_until_conditioned,
    smallest_singular_value,
    space_from_slots,
)
from .cube import (
    Dataset,
    FourierVector,
    MarginalQuery,
    WalshIndex,
    all_queries,
    enumerate_low_degree,
    fourier_of_dataset,
    low_degree_count,
    marginal_from_fourier,
    marginal_value,
    query_count,
    walsh_eval,
)
from .dataio import BitTable, ingest, read_binary, read_csv, write_binary, write_csv
from .errors import (
    ConditioningFailure,
    ConditioningViolationError,
    ConfigurationError,
    CubeSynthError,
    IndeterminateError,
    InputError,
    IntegrityError,
    ParseError,
    SolverError,
)
from .evaluation import (
    AccuracyReport,
    CalibrationParams,
    DeviationEstimate,
    MatchResult,
    accuracy_report,
    empirical_l1_deviation,
    exact_match,
    full_cube,
    recommend_k,
    recommend_m,
    recommend_m_master,
)
from .pipeline import (
    PipelineConfig,
    RunReport,
    auto_k,
    generate,
    privacy_k_bound,
    sample_categorical,
)
from .privacy import (
    AuditRecord,
    NeighborPair,
    PrivacyBudget,
    audit_sensitivity,
    epsilon_for_k,
    neighbor_fourier_gap,
    neighbor_fourier_gap_bound,
    sensitivity_bound,
)
from .solver import (
    AffineConstraints,
    Box,
    FeasibilityResult,
    SlotDensity,
    feasibility,
    project_affine,
    project_box,
    proximal_point,
    shrinkage_lambda,
    uniform_weights,
)

__version__ = "0.1.0"
