"""Dense and 1-D convolutional regression networks written on numpy."""
from .estimators import (
    CNNSurrogate,
    DivergenceError,
    LearningCurve,
    MLPSurrogate,
    TrainConfig,
    load_surrogate,
    train_network,
)
from .layers import AddChannel, Conv1D, Dense, Flatten, MaxPool1D, ReLU, conv1d_forward, dense_forward, maxpool1d, relu
from .network import MLP_HIDDEN, Network, build_cnn, build_mlp, build_network
from .optim import Adam, AdamState, adam_step

__all__ = [
    "Adam", "AdamState", "AddChannel", "CNNSurrogate", "Conv1D", "Dense", "DivergenceError", "Flatten",
    "LearningCurve", "MLPSurrogate", "MLP_HIDDEN", "MaxPool1D", "Network", "ReLU", "TrainConfig", "adam_step",
    "build_cnn", "build_mlp", "build_network", "conv1d_forward", "dense_forward", "load_surrogate", "maxpool1d",
    "relu", "train_network",
]
