"""Python access to the mcrec simulator, metrics and pipeline stages."""

from ._core import (
    MECHANISMS,
    STAGES,
    ConfigError,
    MissingArtifact,
    auuc,
    auuc_random,
    best_mechanism,
    cate,
    derive_seed,
    gauc,
    hitrate_at_k,
    invoking_ratio,
    mechanism_index,
    ndcg_at_k,
    qini,
    run_stage,
    select_lambda,
    select_mechanism,
    smooth_labels,
    uplift_curve,
)

__all__ = [
    "MECHANISMS",
    "STAGES",
    "ConfigError",
    "MissingArtifact",
    "auuc",
    "auuc_random",
    "best_mechanism",
    "cate",
    "derive_seed",
    "gauc",
    "hitrate_at_k",
    "invoking_ratio",
    "mechanism_index",
    "ndcg_at_k",
    "qini",
    "run_stage",
    "select_lambda",
    "select_mechanism",
    "smooth_labels",
    "uplift_curve",
]
