"""Kernel backend selection.

The row-wise hot kernels exist twice: a Cython extension (``ckernels``)
and a NumPy fallback (``pykernels``) with identical semantics. The
compiled module is preferred when importable; set ``SUPERAND_PURE=1`` to
force the fallback (used by the benchmark and for debugging).
"""

import os

if os.environ.get("SUPERAND_PURE"):
    from . import pykernels as kernels
else:
    try:
        from . import ckernels as kernels
    except ImportError:
        from . import pykernels as kernels

BACKEND = kernels.NAME

__all__ = ["kernels", "BACKEND"]
