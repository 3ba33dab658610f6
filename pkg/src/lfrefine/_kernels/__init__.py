"""Backend selection for the greedy selection kernels.

The compiled extension is used when available; otherwise the pure-numpy
fallback with identical semantics takes over. Set LFREFINE_KERNEL=python
to force the fallback (the benchmark suite uses this to compare both).
"""

import os

from . import fallback

BACKEND = "numpy"
_impl = fallback

if os.environ.get("LFREFINE_KERNEL", "").lower() not in {"python", "numpy", "fallback"}:
    try:
        from . import _greedy as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass

greedy_removal = _impl.greedy_removal
greedy_edges = _impl.greedy_edges
