"""Small numpy CNN engine: layers, Adam, model, training."""

from .layers import (
    conv2d_backward,
    conv2d_forward,
    dense_backward,
    dense_forward,
    maxpool2d_backward,
    maxpool2d_forward,
    relu_backward,
    relu_forward,
    sigmoid,
    weighted_bce,
)
from .model import (
    ArchConfig,
    ModelParams,
    backward,
    build_model,
    classify,
    forward,
    load_checkpoint,
    predict,
    save_checkpoint,
)
from .optim import AdamState, adam_step, lr_at_epoch
from .train import EpochRecord, TrainConfig, TrainReport, evaluate, train
