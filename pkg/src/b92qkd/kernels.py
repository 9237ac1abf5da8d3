"""Backend selection for the phase-error bound search.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``B92QKD_PURE_PYTHON`` is set to a non-empty value, the
pure-Python implementation is used. Both expose ``split_x`` and
``max_x_over_splits`` with identical signatures.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("B92QKD_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

split_x = _impl.split_x
max_x_over_splits = _impl.max_x_over_splits


def backends() -> dict:
    """All importable backends by name, for benchmarking and cross-checks."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels  # type: ignore[attr-defined]

        out["cython"] = _kernels
    except ImportError:
        pass
    return out
