"""k-NN neighborhood discovery and the entropy-ranked curriculum.

Each round, every instance's k most similar peers (by memory-row dot
product) become its neighborhood. Instances are then ranked by the
entropy of their instance probabilities; the lowest-entropy fraction
(growing linearly with the round number) is selected as trustworthy
local classes, the rest stay singleton classes.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import ParameterError
from .memory_bank import MemoryBank


@dataclass
class NeighborhoodState:
    """Per-round snapshot of neighbor lists, curriculum selection, entropies."""

    neighbors: np.ndarray      # (N, k) int64, row i excludes i itself
    selected_mask: np.ndarray  # (N,) bool, True = treated as a local class
    entropies: np.ndarray      # (N,) float64
    round_index: int
    k: int

    @property
    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.selected_mask)

    @property
    def complement(self) -> np.ndarray:
        return np.flatnonzero(~self.selected_mask)


def discover_neighbors(bank: MemoryBank, k: int) -> np.ndarray:
    """For every instance, indices of its k most similar other instances.

    Ties broken toward the lower index.
    """
    n = bank.count
    if not 1 <= k <= n - 1:
        raise ParameterError(f"neighborhood size k={k} must be in [1, {n - 1}]")
    sims = bank.rows @ bank.rows.T
    return kernels.topk_desc_rows(sims, k, exclude=np.arange(n, dtype=np.int64))


def compute_instance_entropies(bank: MemoryBank, tau: float) -> np.ndarray:
    """Entropy of each instance's probability vector, using its memory row
    as the embedding estimate."""
    if tau <= 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    probs = kernels.softmax_rows(bank.rows @ bank.rows.T, float(tau))
    return kernels.entropy_rows(probs)


def select_curriculum(entropies, ratio: float):
    """Split instances into (selected, complement) by entropy rank.

    Selected are the floor(ratio * N) lowest-entropy instances, ties broken
    toward the lower index. A half-ulp nudge keeps products like 0.3 * 10
    from flooring one short of the exact integer.
    """
    entropies = np.asarray(entropies, dtype=np.float64)
    if not 0.0 <= ratio <= 1.0:
        raise ParameterError(f"selection ratio must be in [0, 1], got {ratio}")
    n = entropies.shape[0]
    m = int(math.floor(ratio * n + 1e-9))
    order = np.argsort(entropies, kind="stable")
    selected = np.sort(order[:m])
    complement = np.sort(order[m:])
    return selected, complement


def round_ratio(round_index: int, total_rounds: int) -> float:
    """Linear curriculum schedule: fraction selected at a 1-based round."""
    if not 1 <= round_index <= total_rounds:
        raise ParameterError(
            f"round {round_index} out of range for {total_rounds} total rounds"
        )
    return round_index / total_rounds


def build_state(
    bank: MemoryBank, k: int, round_index: int, total_rounds: int, tau: float
) -> NeighborhoodState:
    """Discover neighbors and select the curriculum for one round."""
    neighbors = discover_neighbors(bank, k)
    entropies = compute_instance_entropies(bank, tau)
    ratio = round_ratio(round_index, total_rounds)
    selected, _ = select_curriculum(entropies, ratio)
    mask = np.zeros(bank.count, dtype=bool)
    mask[selected] = True
    return NeighborhoodState(
        neighbors=neighbors,
        selected_mask=mask,
        entropies=entropies,
        round_index=round_index,
        k=k,
    )
