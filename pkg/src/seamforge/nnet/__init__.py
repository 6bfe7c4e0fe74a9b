from .checkpoint import load_checkpoint, save_checkpoint
from .layers import conv2d, separable_conv2d
from .loss import BCE_EPS, bce_loss
from .network import TAP_BACKBONE, TAP_FC1, Network, build_detector

__all__ = [
    "BCE_EPS",
    "Network",
    "TAP_BACKBONE",
    "TAP_FC1",
    "bce_loss",
    "build_detector",
    "conv2d",
    "load_checkpoint",
    "save_checkpoint",
    "separable_conv2d",
]
