"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
twins are used. Set ``BIRKHOFF_LAB_PURE=1`` to force the fallback.
"""

import os

from birkhoff_lab import _kernels_py

BACKEND = "python"

if os.environ.get("BIRKHOFF_LAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from birkhoff_lab import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

gibbs_moves = _impl.gibbs_moves
compensated_sums = _impl.compensated_sums
mean_pair_distance = _impl.mean_pair_distance
transport_accept = _impl.transport_accept

__all__ = ["BACKEND", "gibbs_moves", "compensated_sums", "mean_pair_distance", "transport_accept"]
