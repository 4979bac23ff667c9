"""Inception encoder-decoder lesion segmentation core."""

from ._iifcn import (
    Model,
    admissible,
    augment_pair,
    bottleneck_extent,
    evaluate,
    harden,
    jaccard_loss,
    load_model,
    nearest_admissible,
    refine,
    reweight_filter,
    synth_dataset,
    threshold_mask,
)

__all__ = [
    "Model",
    "admissible",
    "augment_pair",
    "bottleneck_extent",
    "evaluate",
    "harden",
    "jaccard_loss",
    "load_model",
    "nearest_admissible",
    "refine",
    "reweight_filter",
    "synth_dataset",
    "threshold_mask",
]
