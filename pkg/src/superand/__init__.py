"""Unsupervised embedding learning engine.

Instances are embedded on the unit hypersphere and discriminated against a
slowly-updated memory bank; an entropy-ranked curriculum progressively
groups nearest-neighbor pairs into local classes while an augmentation
alignment loss keeps embeddings invariant to crops, flips, and color
jitter. Training uses analytic gradients throughout (no autodiff) and is
evaluated with weighted k-NN classification.
"""

from ._backend import BACKEND as kernel_backend
from .config import TrainConfig
from .data_io import Dataset, gen_synthetic_blobs, hold_out_split, load_cifar10
from .encoder import EncoderParams, EncoderShape, encode_batch, encode_forward, init_encoder
from .evaluator import top1_accuracy, weighted_knn_predict, weighted_knn_predict_batch
from .memory_bank import MemoryBank, init_bank
from .trainer import TrainResult, train

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "EncoderParams",
    "EncoderShape",
    "MemoryBank",
    "TrainConfig",
    "TrainResult",
    "encode_batch",
    "encode_forward",
    "gen_synthetic_blobs",
    "hold_out_split",
    "init_bank",
    "init_encoder",
    "kernel_backend",
    "load_cifar10",
    "top1_accuracy",
    "train",
    "weighted_knn_predict",
    "weighted_knn_predict_batch",
    "__version__",
]
