"""Bidirectional LSTM classifier written directly in numpy."""

from .lstm import CellState, LstmParams, bilstm_layer_forward, cell_update, lstm_cell_forward
from .model import (
    ForwardCache,
    Model,
    ModelConfig,
    backward,
    cross_entropy,
    forward,
    init_model,
    loss_and_grad,
    model_forward,
    predict,
    softmax,
    xavier_init,
)
from .optim import AdamState, EpochRecord, TrainConfig, TrainingError, TrainResult, adam_step, train
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint

__all__ = [
    "AdamState", "CellState", "CheckpointError", "EpochRecord", "ForwardCache", "LstmParams",
    "Model", "ModelConfig", "TrainConfig", "TrainResult", "TrainingError", "adam_step",
    "backward", "bilstm_layer_forward", "cell_update", "cross_entropy", "forward",
    "init_model", "load_checkpoint", "loss_and_grad", "lstm_cell_forward", "model_forward",
    "predict", "save_checkpoint", "softmax", "train", "xavier_init",
]
