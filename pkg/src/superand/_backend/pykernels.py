"""NumPy implementations of the row-wise hot kernels.

These are the reference semantics for the compiled backend in
``ckernels.pyx``: index-valued results (top-k) must agree exactly,
float results to within ordinary float64 rounding. Inputs are assumed
validated by the calling module; the only checks here guard kernel
preconditions that would otherwise corrupt output silently.
"""

import numpy as np

NAME = "python"


def softmax_rows(scores: np.ndarray, tau: float) -> np.ndarray:
    """Row-wise softmax of scores/tau with max subtraction."""
    z = np.asarray(scores, dtype=np.float64) / tau
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax_rows(scores: np.ndarray, tau: float) -> np.ndarray:
    """Row-wise log-softmax of scores/tau. -inf entries stay -inf."""
    z = np.asarray(scores, dtype=np.float64) / tau
    m = z.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(z - m).sum(axis=1, keepdims=True))
    return z - lse


def entropy_rows(p: np.ndarray) -> np.ndarray:
    """Row-wise -sum(p * log p) with the 0*log 0 = 0 convention."""
    p = np.asarray(p, dtype=np.float64)
    plogp = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    return -plogp.sum(axis=1)


def ema_update_row(bank: np.ndarray, i: int, v: np.ndarray, eta: float) -> float:
    """Blend row i of bank toward v and renormalize in place.

    Returns the pre-normalization norm; 0.0 means the blend was a zero
    vector and the row was left untouched.
    """
    row = (1.0 - eta) * bank[i] + eta * np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(row))
    if norm > 0.0:
        bank[i] = row / norm
    return norm


def topk_desc_rows(sims: np.ndarray, k: int, exclude=None) -> np.ndarray:
    """Per-row indices of the k largest entries, ties broken by lower index.

    ``exclude`` optionally gives one column per row to skip (the row's own
    instance during neighbor discovery).
    """
    sims = np.asarray(sims, dtype=np.float64)
    n_eligible = sims.shape[1] - (0 if exclude is None else 1)
    if not 1 <= k <= n_eligible:
        raise ValueError(f"k={k} out of range for {n_eligible} eligible columns")
    if exclude is not None:
        sims = sims.copy()
        sims[np.arange(sims.shape[0]), np.asarray(exclude, dtype=np.int64)] = -np.inf
    order = np.argsort(-sims, axis=1, kind="stable")
    return np.ascontiguousarray(order[:, :k]).astype(np.int64)
