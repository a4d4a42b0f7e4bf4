"""Synthetic-image atlas toolkit.

A toy style-based generator with a binary weights format, closed-form
latent factorization, traversal rendering and atlas assembly, shallow
Frechet distance scoring, a rating-study HTTP service, and the statistics
that summarize its exported logs.
"""

from .errors import (
    Conflict,
    FormatError,
    InvalidDimension,
    InvalidInput,
    InvalidLayer,
    NoData,
    NotFound,
    NumericalFailure,
    NumericalWarning,
    StyleAtlasError,
    TrainingDiverged,
    Unauthorized,
    Undefined,
    ValidationError,
)
from .generator import (
    GeneratedImage,
    LatentCode,
    StyleVector,
    StyleWeights,
    adain,
    estimate_w_mean,
    map_latent,
    noise_for_seed,
    output_rescale,
    random_weights,
    resolution_for,
    style_from_w,
    synthesize,
)
from .sgw1 import load_weights, save_weights
from .factorization import (
    AttributeDirection,
    directions_from_json,
    directions_to_json,
    sefa,
    stack_affine,
    verify_spectrum,
)
from .traversal import (
    ProgressionSequence,
    TraversalSpec,
    make_progression,
    render_traversal,
    traversal_alphas,
    traverse_codes,
)
from .tsne import Embedding2D, tsne
from .atlas import (
    AtlasConfig,
    FeatureVector,
    PrototypeSet,
    build_atlas,
    extract_features,
    label_attributes,
    load_manifest,
)
from .metrics import (
    GaussianSummary,
    fd_from_feature_sets,
    fid_between_sets,
    fit_gaussian,
    frechet_distance,
    select_checkpoint,
)
from .training import TrainConfig, TrainResult, procedural_dataset, train
from .stats import (
    agreement_matrix,
    difficulty_by_category,
    exact_binomial_test,
    krippendorff_alpha,
    one_prop_ztest,
    plausibility_summary,
    progression_slope,
    progression_summary,
    ranking_stats,
    rolling_mean,
    turing_summary,
)
from .analysis import analyze, write_report

__all__ = [
    "AtlasConfig",
    "AttributeDirection",
    "Conflict",
    "Embedding2D",
    "FeatureVector",
    "FormatError",
    "GaussianSummary",
    "GeneratedImage",
    "InvalidDimension",
    "InvalidInput",
    "InvalidLayer",
    "LatentCode",
    "NoData",
    "NotFound",
    "NumericalFailure",
    "NumericalWarning",
    "ProgressionSequence",
    "PrototypeSet",
    "StyleAtlasError",
    "StyleVector",
    "StyleWeights",
    "TrainConfig",
    "TrainResult",
    "TrainingDiverged",
    "TraversalSpec",
    "Unauthorized",
    "Undefined",
    "ValidationError",
    "adain",
    "agreement_matrix",
    "analyze",
    "build_atlas",
    "difficulty_by_category",
    "directions_from_json",
    "directions_to_json",
    "estimate_w_mean",
    "exact_binomial_test",
    "extract_features",
    "fd_from_feature_sets",
    "fid_between_sets",
    "fit_gaussian",
    "frechet_distance",
    "krippendorff_alpha",
    "label_attributes",
    "load_manifest",
    "load_weights",
    "make_progression",
    "map_latent",
    "noise_for_seed",
    "one_prop_ztest",
    "output_rescale",
    "plausibility_summary",
    "procedural_dataset",
    "progression_slope",
    "progression_summary",
    "random_weights",
    "ranking_stats",
    "render_traversal",
    "resolution_for",
    "rolling_mean",
    "save_weights",
    "sefa",
    "select_checkpoint",
    "stack_affine",
    "style_from_w",
    "synthesize",
    "train",
    "traversal_alphas",
    "traverse_codes",
    "tsne",
    "turing_summary",
    "verify_spectrum",
    "write_report",
]
