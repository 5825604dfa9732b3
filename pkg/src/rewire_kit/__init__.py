"""rewire-kit: yearly co-attendance networks, specialization and rewiring
metrics, community structure, counterfactual simulations, and the
fixed-effects panel regression, from five CSV tables or a synthetic
generator."""

__version__ = "0.1.0"

from .errors import ConfigError, DataValidationError, PipelineError, RewireKitError
from .dataset import (
    Dataset,
    Event,
    build_dataset,
    load_dataset,
    member_interest_terms,
    normalize_term,
    validate,
    write_dataset,
)
from .synth import SynthConfig, SynthTruth, generate_synthetic, generate_synthetic_with_truth
from .netbuild import (
    AttendanceVector,
    MemberGraph,
    YearSlice,
    attendance_vectors,
    build_member_graph,
    project_members,
    tfidf_incidence,
    yearly_slice,
)
from .metrics import (
    InterestDistribution,
    TermTenureRecord,
    ego_interest_distribution,
    mean_active_tenure,
    member_turnover,
    novelty,
    novelty_series,
    population_interest_distribution,
    specialization,
    specialization_scores,
    tenure,
    term_adopter_tenure,
)
from .community import ModularityReport, Partition, louvain, modularity
from .counterfactual import (
    ModularitySeries,
    PropensityTable,
    YearModularity,
    estimate_propensities,
    modularity_series,
    simulate_static,
    simulate_undifferentiated,
)
from .econometrics import PanelRow, RegressionResult, build_panel, fit_fe_panel
from .pipeline import ARTIFACTS, PipelineConfig, config_hash, run_pipeline

__all__ = [
    "ARTIFACTS",
    "AttendanceVector",
    "ConfigError",
    "DataValidationError",
    "Dataset",
    "Event",
    "InterestDistribution",
    "MemberGraph",
    "ModularityReport",
    "ModularitySeries",
    "PanelRow",
    "Partition",
    "PipelineConfig",
    "PipelineError",
    "PropensityTable",
    "RegressionResult",
    "RewireKitError",
    "SynthConfig",
    "SynthTruth",
    "TermTenureRecord",
    "YearModularity",
    "YearSlice",
    "attendance_vectors",
    "build_dataset",
    "build_member_graph",
    "build_panel",
    "config_hash",
    "ego_interest_distribution",
    "estimate_propensities",
    "fit_fe_panel",
    "generate_synthetic",
    "generate_synthetic_with_truth",
    "load_dataset",
    "louvain",
    "mean_active_tenure",
    "member_interest_terms",
    "member_turnover",
    "modularity",
    "modularity_series",
    "normalize_term",
    "novelty",
    "novelty_series",
    "population_interest_distribution",
    "project_members",
    "run_pipeline",
    "simulate_static",
    "simulate_undifferentiated",
    "specialization",
    "specialization_scores",
    "tenure",
    "term_adopter_tenure",
    "tfidf_incidence",
    "validate",
    "write_dataset",
    "yearly_slice",
]
