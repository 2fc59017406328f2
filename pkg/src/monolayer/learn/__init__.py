"""Desk-scale classifiers and the train/test degradation grid."""
from .data import DatasetSpec, load_dataset, read_idx
from .model import ModelSpec, ModelState, backward, forward, init_model
from .optim import adam_step
from .train import GridResult, TrainConfig, evaluate, run_grid, train

__all__ = ["DatasetSpec", "load_dataset", "read_idx", "ModelSpec", "ModelState", "backward", "forward",
           "init_model", "adam_step", "GridResult", "TrainConfig", "evaluate", "run_grid", "train"]
