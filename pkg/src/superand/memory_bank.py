"""Per-instance embedding memory with exponential-moving-average updates.

The bank holds one unit-norm row per dataset instance. Rows drift toward
the latest embedding of their instance via EMA and are renormalized after
every update, so row dot products always equal cosine similarities.
"""

import numpy as np

from ._backend import kernels
from .errors import DegenerateInputError, ParameterError

_ROW_NORM_TOL = 1e-6


class MemoryBank:
    """N x D matrix of unit-norm instance embeddings."""

    def __init__(self, rows: np.ndarray, validate: bool = True):
        rows = np.ascontiguousarray(rows, dtype=np.float64)
        if rows.ndim != 2:
            raise ParameterError(f"bank rows must be 2-D, got shape {rows.shape}")
        n, d = rows.shape
        if n < 1 or d < 2:
            raise ParameterError(f"bank needs n >= 1 rows and d >= 2 dims, got {n}x{d}")
        if validate:
            norms = np.linalg.norm(rows, axis=1)
            bad = np.abs(norms - 1.0) > _ROW_NORM_TOL
            if np.any(bad):
                raise ParameterError(
                    f"{int(bad.sum())} bank rows are not unit-norm (first: {int(np.argmax(bad))})"
                )
        self.rows = rows

    @classmethod
    def initialize(cls, n: int, d: int, seed: int) -> "MemoryBank":
        """Fresh bank of n rows drawn isotropically on the d-sphere."""
        if n < 1 or d < 2:
            raise ParameterError(f"bank needs n >= 1 and d >= 2, got n={n}, d={d}")
        rng = np.random.default_rng(seed)
        rows = rng.standard_normal((n, d))
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)
        return cls(rows, validate=False)

    @property
    def count(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def all_similarities(self, v) -> np.ndarray:
        """Dot product of v against every row (cosine, since rows are unit)."""
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.dim,):
            raise ParameterError(f"expected a vector of dim {self.dim}, got shape {v.shape}")
        return self.rows @ v

    def ema_update(self, i: int, v, eta: float) -> None:
        """Row i <- normalize((1 - eta) * row_i + eta * v). Other rows untouched."""
        if not 0 <= i < self.count:
            raise IndexError(f"row index {i} out of range for bank of {self.count}")
        if not 0.0 < eta <= 1.0:
            raise ParameterError(f"eta must be in (0, 1], got {eta}")
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.dim,):
            raise ParameterError(f"expected a vector of dim {self.dim}, got shape {v.shape}")
        norm = kernels.ema_update_row(self.rows, i, v, float(eta))
        if norm == 0.0:
            raise DegenerateInputError(f"EMA blend for row {i} produced a zero vector")

    def copy(self) -> "MemoryBank":
        return MemoryBank(self.rows.copy(), validate=False)


def init_bank(n: int, d: int, seed: int) -> MemoryBank:
    return MemoryBank.initialize(n, d, seed)
