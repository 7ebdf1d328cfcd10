"""Kernel backend selection.

The compiled extension is used when it imports; setting ``CSCHED_PURE=1``
forces the pure-Python implementation.
"""

import os

from . import _pykernels as python_backend

try:
    from . import _kernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("CSCHED_PURE", "") not in ("1", "true", "yes"):
    _impl = compiled_backend
else:
    _impl = python_backend

BACKEND = _impl.BACKEND
Timeline = _impl.Timeline
evaluate = _impl.evaluate
fitness_many = _impl.fitness_many
branch_and_bound = _impl.branch_and_bound


def backends():
    """Available backend modules keyed by name."""
    out = {"python": python_backend}
    if compiled_backend is not None:
        out["cython"] = compiled_backend
    return out
