from .scenes import SyntheticScene, gen_scene
from .model import ToyModel, model_forward
from .train import TrainRecord, batch_objective, feature_separation, train_run

__all__ = [
    "SyntheticScene",
    "gen_scene",
    "ToyModel",
    "model_forward",
    "TrainRecord",
    "batch_objective",
    "feature_separation",
    "train_run",
]
