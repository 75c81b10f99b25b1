"""Backend selection for the hot kernels.

The compiled extension is used when importable; set ``KIRINLAB_PURE_PYTHON=1``
to force the Python/numpy implementation.
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("KIRINLAB_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "python" if _impl is _pykernels else "cython"

brute_force_max = _impl.brute_force_max
propagate = _impl.propagate
greedy_assign = _impl.greedy_assign


def backends() -> dict:
    """Every importable implementation, keyed by name (for tests and benchmarks)."""
    found = {"python": _pykernels}
    try:
        from . import _kernels

        found["cython"] = _kernels
    except ImportError:
        pass
    return found
