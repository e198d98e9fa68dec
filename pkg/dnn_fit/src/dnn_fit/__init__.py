"""Neural window-to-control generators for the precipitation simulator."""

from .data import WindowDataset
from .export import export_ur, stitch_controls, write_control_csv
from .losses import rollout_loss
from .models import build_ann, build_gru, trainable_parameters
from .physics import KineticParams, rollout
from .train import DivergenceError, TrainConfig, train

__version__ = "0.1.0"
__all__ = [
    "WindowDataset", "export_ur", "stitch_controls", "write_control_csv",
    "rollout_loss", "build_ann", "build_gru", "trainable_parameters",
    "KineticParams", "rollout", "DivergenceError", "TrainConfig", "train",
]
