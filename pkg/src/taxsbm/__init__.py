"""Co-occurrence network estimation and block-model community detection.

The pipeline turns zero-inflated compositional count data into a binary
co-occurrence network (log-ratio transform, rank correlation, FDR control)
and infers its community structure with a Bayesian stochastic block model
whose label prior can borrow strength from a taxonomy tree.
"""

from .errors import (
    CoverageError,
    GenerationError,
    ParseError,
    TaxsbmError,
    UndefinedCorrelationError,
    ValidationError,
)
from .inference import (
    FitSummary,
    KSelection,
    bic,
    map_labels,
    posterior_mean_omega,
    select_k,
    summarize,
)
from .ingest import (
    AbundanceMatrix,
    BinaryNetwork,
    TaxonomyMap,
    load_abundance,
    load_network,
    load_taxonomy,
    read_adjacency,
    write_adjacency,
)
from .metrics import ari, genus_community_strength, nodal_strength, shannon
from .network import (
    CorrelationResult,
    bh_adjust,
    build_cooccurrence,
    build_tree_adjacency,
    spearman_pvalue,
    spearman_rho,
)
from .sbm import (
    BlockCounts,
    ChainTrace,
    CommunityAssignment,
    EdgeProbabilityMatrix,
    SamplerConfig,
    derive_seed,
    edge_counts,
    gibbs_run,
    log_joint,
    log_likelihood,
    mrf_log_prior_term,
    sample_omega,
    sample_z,
)
from .simgen import (
    ScenarioSpec,
    SyntheticDataset,
    assign_labels,
    default_suite,
    generate_dataset,
    generate_suite,
    sample_network,
)
from .transform import (
    CompositionMatrix,
    TransformedMatrix,
    geometric_mean_nonzero,
    mclr,
    relative_abundance,
)

__version__ = "0.1.0"
