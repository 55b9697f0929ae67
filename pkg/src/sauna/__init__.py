"""Uncertainty-aware soft labels and regression losses for vessel segmentation."""

from .errors import DegenerateMaskError, FieldFormatError, InputError, SaunaError
from .grid import BinaryMask, ScalarField, load_field, load_mask, render_heatmap, save_field, save_mask
from .losses import (
    LossConfig,
    combined_loss,
    focal_l1_reference,
    gjml,
    gjml_grad,
    stable_focal_l1,
    stable_focal_l1_grad,
)
from .metrics import aggregate, binarize, confusion, metrics_from_confusion
from .transforms import SaunaParams, distance_transform, sauna_components, sauna_transform

__version__ = "0.1.0"
