"""Backend selection for the window integrator.

The compiled extension is used when it imports; setting ``EMFF_PURE_PYTHON=1``
forces the NumPy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
integrate_window = _kernels_py.integrate_window

if os.environ.get("EMFF_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "cython"
        integrate_window = _kernels.integrate_window

__all__ = ["BACKEND", "integrate_window"]
