"""Dense numeric primitives shared by every other module.

All arithmetic is float64; inputs may be any 1-D array-like. Public
operations never return NaN or Inf: degenerate inputs raise instead.
"""

import numpy as np

from ._backend import kernels
from .errors import DegenerateInputError, ParameterError

#: ITU-R BT.601 luma weights, used for grayscale conversion everywhere.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

#: Tolerance for "sums to one" checks on probability vectors.
PROB_SUM_TOL = 1e-9


def _as_vector(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ParameterError(f"{name} must be a non-empty 1-D vector")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite entries")
    return arr


def validate_prob_vector(p, name: str = "p") -> np.ndarray:
    """Check that p is a probability vector: entries >= 0, sum within 1e-9 of 1."""
    arr = _as_vector(p, name)
    if np.any(arr < 0.0):
        raise ParameterError(f"{name} has negative entries")
    total = float(arr.sum())
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise ParameterError(f"{name} sums to {total!r}, not 1")
    return arr


def l2_normalize(v) -> np.ndarray:
    """Scale v to unit Euclidean norm."""
    arr = _as_vector(v, "v")
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise DegenerateInputError("cannot normalize a zero vector")
    return arr / norm


def softmax_temp(scores, tau: float) -> np.ndarray:
    """Temperature softmax: exp(s_j/tau) / sum_k exp(s_k/tau).

    Computed with max subtraction so large scores cannot overflow.
    """
    arr = _as_vector(scores, "scores")
    if tau <= 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    return kernels.softmax_rows(arr[None, :], float(tau))[0]


def shannon_entropy(p) -> float:
    """Entropy -sum(p_j ln p_j) of a probability vector, with 0*ln 0 = 0."""
    arr = validate_prob_vector(p)
    return float(kernels.entropy_rows(arr[None, :])[0])


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between a and b, clamped to [-1, 1]."""
    va = _as_vector(a, "a")
    vb = _as_vector(b, "b")
    if va.shape != vb.shape:
        raise ParameterError(f"shape mismatch: {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("cosine similarity of a zero vector is undefined")
    return float(np.clip(np.dot(va, vb) / (na * nb), -1.0, 1.0))


def luminance(image: np.ndarray) -> np.ndarray:
    """Collapse an (..., H, W, 3) RGB array to (..., H, W) luma."""
    img = np.asarray(image, dtype=np.float64)
    if img.shape[-1] != 3:
        raise ParameterError(f"expected a trailing RGB axis of size 3, got {img.shape}")
    return img @ LUMA_WEIGHTS
