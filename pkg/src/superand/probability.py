"""Softmax probability vectors and relationship vectors over the memory bank.

An embedding's "instance probabilities" treat every memory row as the
prototype of its own class; the tempered softmax of the similarity logits
gives the chance of the embedding being assigned to each instance-class.
Relationship vectors are the full cosine-similarity profile of one
embedding against the bank, used to compare an image with its augmented
version.
"""

import numpy as np

from ._backend import kernels
from .errors import DegenerateInputError, ParameterError
from .memory_bank import MemoryBank


def _check_tau(tau: float) -> float:
    if tau <= 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    return float(tau)


def instance_probs(bank: MemoryBank, v, tau: float) -> np.ndarray:
    """Tempered softmax of the bank-row similarity logits of v."""
    tau = _check_tau(tau)
    logits = bank.all_similarities(v)
    return kernels.softmax_rows(logits[None, :], tau)[0]


def excluded_probs(bank: MemoryBank, v, self_index: int, tau: float) -> np.ndarray:
    """Instance probabilities with the embedding's own class removed.

    Returns N-1 entries: the softmax over all rows except ``self_index``,
    in index order with that entry deleted.
    """
    tau = _check_tau(tau)
    if bank.count < 2:
        raise DegenerateInputError("self-excluded probabilities need at least 2 rows")
    if not 0 <= self_index < bank.count:
        raise IndexError(f"self index {self_index} out of range for bank of {bank.count}")
    logits = bank.all_similarities(v).copy()
    logits[self_index] = -np.inf
    p = kernels.softmax_rows(logits[None, :], tau)[0]
    return np.delete(p, self_index)


def relationship_vector(bank: MemoryBank, v) -> np.ndarray:
    """Cosine similarity of v against every memory row."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (bank.dim,):
        raise ParameterError(f"expected a vector of dim {bank.dim}, got shape {v.shape}")
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise DegenerateInputError("relationship vector of a zero vector is undefined")
    row_norms = np.linalg.norm(bank.rows, axis=1)
    return np.clip((bank.rows @ v) / (row_norms * norm), -1.0, 1.0)


def batch_relationship_vectors(bank: MemoryBank, vs: np.ndarray) -> np.ndarray:
    """Rows of relationship vectors for a batch; rows assumed unit-norm banks.

    Unlike :func:`relationship_vector` this skips the per-row norm division
    (rows are unit by bank invariant) so the loss gradients can chain
    through a single closed form. No clamping: raw values feed softmaxes.
    """
    vs = np.asarray(vs, dtype=np.float64)
    norms = np.linalg.norm(vs, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateInputError("relationship vector of a zero vector is undefined")
    return (vs @ bank.rows.T) / norms[:, None]


def augmented_pair_probs(r_batch, r_hat_batch, tau: float):
    """Batch softmax probabilities comparing plain and augmented profiles.

    For each batch position i two softmaxes over the n batch instances are
    formed from raw dot products of relationship vectors:

    * ``diag[i]``: probability that the augmented profile r_hat_i is
      matched to its own instance, softmax_k(r_k . r_hat_i / tau) at k=i.
    * ``offdiag[i, j]`` (j != i): probability that the plain profile r_i is
      confused with instance j, softmax_k(r_k . r_i / tau) at k=j. The
      diagonal of ``offdiag`` is zeroed: no instance is "confused" with
      itself.
    """
    tau = _check_tau(tau)
    r = np.asarray(r_batch, dtype=np.float64)
    r_hat = np.asarray(r_hat_batch, dtype=np.float64)
    if r.ndim != 2 or r.shape != r_hat.shape:
        raise ParameterError(
            f"relationship batches must share an (n, N) shape, got {r.shape} vs {r_hat.shape}"
        )
    n = r.shape[0]
    alpha = kernels.softmax_rows(r_hat @ r.T, tau)
    beta = kernels.softmax_rows(r @ r.T, tau)
    diag = alpha[np.arange(n), np.arange(n)].copy()
    offdiag = beta.copy()
    offdiag[np.arange(n), np.arange(n)] = 0.0
    return diag, offdiag
