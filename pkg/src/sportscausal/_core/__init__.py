"""Numerical core with backend selection.

The compiled Cython kernel is preferred; a pure-NumPy implementation with
identical semantics is the fallback. Set ``SPORTSCAUSAL_BACKEND=python``
to force the fallback (used by the benchmark and the backend-parity tests).
"""

import os

from . import _kalman_py

if os.environ.get("SPORTSCAUSAL_BACKEND", "").lower() == "python":
    kalman_filter = _kalman_py.kalman_filter
    BACKEND = "python"
else:
    try:
        from . import _kalman_cy

        kalman_filter = _kalman_cy.kalman_filter
        BACKEND = "cython"
    except ImportError:
        kalman_filter = _kalman_py.kalman_filter
        BACKEND = "python"


def backend_name() -> str:
    """Name of the filter kernel in use: 'cython' or 'python'."""
    return BACKEND
