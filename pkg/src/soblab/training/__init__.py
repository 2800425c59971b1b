"""Derivative-supervised training of a low-rank kernel operator network."""

from .datasets import (  # noqa: F401
    GENERATORS,
    DatasetSizes,
    OperatorDataset,
    load_dataset,
    mls_derivative_targets,
    save_dataset,
    synth_dataset,
)
from .losses import (  # noqa: F401
    GradientPair,
    der_loss,
    l2_loss,
    pcgrad_merge,
    relative_l2_error,
    sobolev_loss,
)
from .loop import MODES, TrainConfig, TrainReport, train  # noqa: F401
from .mlp import ReluMLP  # noqa: F401
from .operator_net import (  # noqa: F401
    Batch,
    OperatorNet,
    backward,
    evaluate_losses,
    make_operator_net,
    net_forward,
    predict_gradients,
    predict_values,
)
