"""Signal transformations and the transformation-recognition dataset builder."""

from app.augment.pretext import build_pretext_dataset
from app.augment.transforms import (
    TRANSFORMS,
    add_gaussian_noise,
    apply_transform,
    crop_resize,
    magnitude_warp,
    permute,
    time_warp,
)

__all__ = [
    "TRANSFORMS",
    "add_gaussian_noise",
    "magnitude_warp",
    "permute",
    "time_warp",
    "crop_resize",
    "apply_transform",
    "build_pretext_dataset",
]
