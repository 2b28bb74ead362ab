"""Dense-network substrate: autodiff, layers, losses, optimizers, model I/O."""

from .autodiff import TapeError, Var
from .gradcheck import grad_check
from .losses import LossError, attach_loss, loss
from .network import (
    Activation,
    Dense,
    GradientTape,
    Model,
    NetworkSpec,
    ParameterSet,
    Reshape,
    ShapeError,
    Softmax,
    SpecError,
    backward,
    check_params,
    dense_stack,
    forward,
    init_params,
)
from .optim import GradientError, OptimizerState, optimizer_step
from .serialize import (
    ChecksumError,
    ModelFileError,
    NotModelFileError,
    load_model,
    load_params,
    save_model,
    save_params,
)
from .training import EpochStats, TrainingDiverged, train_network, write_history_csv

__all__ = [
    "Activation",
    "ChecksumError",
    "Dense",
    "EpochStats",
    "GradientError",
    "GradientTape",
    "LossError",
    "Model",
    "ModelFileError",
    "NetworkSpec",
    "NotModelFileError",
    "OptimizerState",
    "ParameterSet",
    "Reshape",
    "ShapeError",
    "Softmax",
    "SpecError",
    "TapeError",
    "TrainingDiverged",
    "Var",
    "attach_loss",
    "backward",
    "check_params",
    "dense_stack",
    "forward",
    "grad_check",
    "init_params",
    "load_model",
    "load_params",
    "loss",
    "optimizer_step",
    "save_model",
    "save_params",
    "train_network",
    "write_history_csv",
]
