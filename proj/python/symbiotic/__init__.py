"""Semantic-segmentation-guided attribute prediction toolkit."""

from ._core import (  # noqa: F401
    attribute_names,
    average_precision,
    balanced_accuracy,
    classification_error,
    footprint,
    generate_dataset,
    global_avg_pool,
    gradcheck,
    inspect_phi,
    region_names,
    region_pool,
    run_cli,
    spatial_softmax_mask,
)

__all__ = [
    "attribute_names",
    "average_precision",
    "balanced_accuracy",
    "classification_error",
    "footprint",
    "generate_dataset",
    "global_avg_pool",
    "gradcheck",
    "inspect_phi",
    "region_names",
    "region_pool",
    "run_cli",
    "spatial_softmax_mask",
]
