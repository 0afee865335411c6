"""Loss values and analytic gradients for the three training objectives.

All gradients are taken with respect to the batch embeddings (and their
augmented counterparts) only; memory rows are constants because they are
updated outside the gradient path. Each loss returns its scalar value
summed over the batch plus per-embedding gradients, verified against
central finite differences in the test suite.

Gradient forms, with p = softmax(M v / tau) and memory matrix M:

* neighborhood classification: d(-ln sum_{j in C} p_j)/dv
  = M^T (p - q) / tau, where q is p restricted to C and renormalized.
* self-excluded entropy H of p~: dH/dv = -M^T (p~ * (ln p~ + H)) / tau.
* augmentation alignment: chain rule through the batch softmaxes of
  relationship-vector dot products, then through r(v) = M v / ||v||,
  whose Jacobian projects out the radial direction.
"""

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import DegenerateInputError, ParameterError, StateError
from .memory_bank import MemoryBank
from .neighborhood import NeighborhoodState
from .probability import batch_relationship_vectors

#: Floor applied to 1 - p before its logarithm so saturated confusion
#: probabilities cannot produce infinities.
LOG_FLOOR = 1e-12


@dataclass
class BatchMembership:
    """Curriculum role of each batch instance.

    ``selected[i]`` marks batch position i as part of a discovered local
    class; ``neighbor_lists[i]`` then holds the memory indices of its
    neighborhood (unused and empty for complement instances).
    """

    selected: np.ndarray
    neighbor_lists: tuple

    @classmethod
    def from_state(cls, state: NeighborhoodState, batch_indices) -> "BatchMembership":
        batch_indices = np.asarray(batch_indices, dtype=np.int64)
        selected = state.selected_mask[batch_indices]
        lists = tuple(
            state.neighbors[idx] if sel else np.empty(0, dtype=np.int64)
            for idx, sel in zip(batch_indices, selected)
        )
        return cls(selected=np.asarray(selected, dtype=bool), neighbor_lists=lists)


@dataclass
class LossBundle:
    """Scalar loss components and total, with gradients for both branches."""

    and_value: float
    ue_value: float
    aug_value: float
    total_value: float
    grad_v: np.ndarray      # (n, D): d total / d v_i
    grad_v_hat: np.ndarray  # (n, D): d total / d v_hat_i


def _batch(vs) -> np.ndarray:
    vs = np.asarray(vs, dtype=np.float64)
    if vs.ndim != 2:
        raise ParameterError(f"expected an (n, D) batch, got shape {vs.shape}")
    return vs


def and_loss(bank: MemoryBank, vs, batch_indices, membership: BatchMembership, tau: float):
    """Neighborhood classification loss and its embedding gradients.

    Selected instances must place probability mass on their own class plus
    their neighborhood; complement instances are scored as singletons.
    """
    vs = _batch(vs)
    batch_indices = np.asarray(batch_indices, dtype=np.int64)
    n = vs.shape[0]
    if batch_indices.shape != (n,) or membership.selected.shape != (n,):
        raise ParameterError("batch embeddings, indices, and membership sizes disagree")
    logp = kernels.log_softmax_rows(vs @ bank.rows.T, float(tau))
    probs = np.exp(logp)
    mask = np.zeros((n, bank.count), dtype=bool)
    mask[np.arange(n), batch_indices] = True
    for i in range(n):
        if membership.selected[i]:
            neigh = membership.neighbor_lists[i]
            if len(neigh) == 0:
                raise StateError(
                    f"selected batch instance {int(batch_indices[i])} has no neighbor list"
                )
            mask[i, neigh] = True
    # ln sum_{j in C} p_j via a second max-subtracted reduction, so tiny
    # class masses at sharp temperatures cannot underflow to -inf.
    masked_logp = np.where(mask, logp, -np.inf)
    peak = masked_logp.max(axis=1, keepdims=True)
    log_mass = peak[:, 0] + np.log(np.exp(masked_logp - peak).sum(axis=1))
    value = float(-log_mass.sum())
    target = np.where(mask, np.exp(logp - log_mass[:, None]), 0.0)
    grad = (probs - target) @ bank.rows / tau
    return value, grad


def ue_loss(bank: MemoryBank, vs, batch_indices, tau: float):
    """Sum of self-excluded softmax entropies and its embedding gradients.

    Minimizing this sharpens each instance's affinity to its nearest
    non-self instances, pulling nearby points together.
    """
    if bank.count < 2:
        raise DegenerateInputError("self-excluded entropy needs at least 2 memory rows")
    vs = _batch(vs)
    batch_indices = np.asarray(batch_indices, dtype=np.int64)
    n = vs.shape[0]
    logits = vs @ bank.rows.T
    logits[np.arange(n), batch_indices] = -np.inf
    logp = kernels.log_softmax_rows(logits, float(tau))
    p = np.exp(logp)
    safe_logp = np.where(p > 0.0, logp, 0.0)  # excluded entries: 0 * log 0 := 0
    entropies = -(p * safe_logp).sum(axis=1)
    value = float(entropies.sum())
    dz = -p * (safe_logp + entropies[:, None]) / tau
    grad = dz @ bank.rows
    return value, grad


def aug_loss(bank: MemoryBank, vs, v_hats, tau: float):
    """Augmentation alignment loss with gradients for both branches.

    Each instance's relationship profile r_i (similarities to all memory
    rows) must match its augmented profile r_hat_i better than any other
    batch instance's profile, and plain profiles must not be confused
    with each other.
    """
    if tau <= 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    vs = _batch(vs)
    v_hats = _batch(v_hats)
    if vs.shape != v_hats.shape:
        raise ParameterError(f"branch shapes disagree: {vs.shape} vs {v_hats.shape}")
    n = vs.shape[0]
    eye = np.arange(n)

    r = batch_relationship_vectors(bank, vs)
    r_hat = batch_relationship_vectors(bank, v_hats)

    # Matching term: each augmented profile classified as its own instance.
    hat_logits = r_hat @ r.T                       # [i, k] = r_hat_i . r_k
    log_alpha = kernels.log_softmax_rows(hat_logits, float(tau))
    alpha = np.exp(log_alpha)
    value = float(-log_alpha[eye, eye].sum())
    d_alpha = alpha.copy()
    d_alpha[eye, eye] -= 1.0
    d_alpha /= tau                                 # d value / d hat_logits

    # Confusion term: plain profiles must not be mistaken for each other.
    plain_logits = r @ r.T
    beta = kernels.softmax_rows(plain_logits, float(tau))
    one_minus = np.maximum(1.0 - beta, LOG_FLOOR)
    off = ~np.eye(n, dtype=bool)
    value += float(-np.log(one_minus[off]).sum()) if n > 1 else 0.0
    ratio = np.where(off, beta / one_minus, 0.0)   # beta_il / (1 - beta_il), l != i
    d_beta = (ratio - beta * ratio.sum(axis=1, keepdims=True)) / tau

    grad_r = d_alpha.T @ r_hat + d_beta.T @ r + d_beta @ r
    grad_r_hat = d_alpha @ r

    grad_v = _chain_through_profile(bank, vs, grad_r)
    grad_v_hat = _chain_through_profile(bank, v_hats, grad_r_hat)
    return value, grad_v, grad_v_hat


def _chain_through_profile(bank: MemoryBank, vs: np.ndarray, grad_r: np.ndarray) -> np.ndarray:
    """Back-propagate profile gradients through r(v) = M v / ||v||."""
    norms = np.linalg.norm(vs, axis=1, keepdims=True)
    units = vs / norms
    pre = grad_r @ bank.rows
    radial = (pre * units).sum(axis=1, keepdims=True)
    return (pre - radial * units) / norms


def total_loss(and_result, ue_result, aug_result, w: float) -> LossBundle:
    """Combine the three losses: and + w * ue + aug, gradients included."""
    if w < 0:
        raise ParameterError(f"entropy-loss weight must be non-negative, got {w}")
    and_value, and_grad = and_result
    ue_value, ue_grad = ue_result
    aug_value, aug_grad_v, aug_grad_v_hat = aug_result
    total = and_value + w * ue_value + aug_value
    grad_v = and_grad + w * ue_grad + aug_grad_v
    return LossBundle(
        and_value=and_value,
        ue_value=ue_value,
        aug_value=aug_value,
        total_value=total,
        grad_v=grad_v,
        grad_v_hat=aug_grad_v_hat.copy(),
    )
