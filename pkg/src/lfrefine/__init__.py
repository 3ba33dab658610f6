"""Labeling-function structure refinement for weak supervision.

Given votes from labeling functions and one embedding per function, the
package removes redundant functions, builds a correlation structure
from the remaining ones, and aggregates their votes with a
structure-aware probabilistic label model. Synthetic data with planted
structure, savings accounting, and a CLI round out the pipeline.
"""

from .data import (
    Bundle,
    DependencyStructure,
    EmbeddingSet,
    GoldLabels,
    SimilarityMatrix,
    TaskConfig,
    ValidationError,
    VoteMatrix,
    validate_bundle,
)
from .evalreport import (
    headline_metric,
    prompts_saved,
    remove_one_toy,
    render_rows,
    score,
    sweep,
    tokens_saved,
)
from .labelmodel import (
    LabelModelParams,
    PosteriorLabels,
    fit,
    fit_timer,
    majority_vote,
    predict,
    second_moments,
    triplet_accuracies,
)
from .providers import (
    PromptedLF,
    ProviderConfig,
    ProviderError,
    embed_prompts,
    load_prompted_lfs,
    render_prompt,
)
from .refine import (
    RefineParams,
    edge_budget,
    empirical_structure,
    greedy_edges,
    greedy_removal,
    refine_structure,
    resolve_removal_count,
)
from .similarity import (
    agreement_matrix,
    cosine_matrix,
    double_fault_matrix,
    matrix_rank_correlation,
)
from .synth import (
    GroupSpec,
    SynthData,
    SynthSpec,
    closed_form_moments,
    generate,
    inject_redundancy,
    load_spec,
    task_config,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Bundle",
    "DependencyStructure",
    "EmbeddingSet",
    "GoldLabels",
    "SimilarityMatrix",
    "TaskConfig",
    "ValidationError",
    "VoteMatrix",
    "validate_bundle",
    "headline_metric",
    "prompts_saved",
    "remove_one_toy",
    "render_rows",
    "score",
    "sweep",
    "tokens_saved",
    "LabelModelParams",
    "PosteriorLabels",
    "fit",
    "fit_timer",
    "majority_vote",
    "predict",
    "second_moments",
    "triplet_accuracies",
    "PromptedLF",
    "ProviderConfig",
    "ProviderError",
    "embed_prompts",
    "load_prompted_lfs",
    "render_prompt",
    "RefineParams",
    "edge_budget",
    "empirical_structure",
    "greedy_edges",
    "greedy_removal",
    "refine_structure",
    "resolve_removal_count",
    "agreement_matrix",
    "cosine_matrix",
    "double_fault_matrix",
    "matrix_rank_correlation",
    "GroupSpec",
    "SynthData",
    "SynthSpec",
    "closed_form_moments",
    "generate",
    "inject_redundancy",
    "load_spec",
    "task_config",
]
