"""Kernel backend selection.

The compiled extension is used when it imports; set ``CASIGA_PURE_PYTHON=1``
to force the numpy implementation.
"""
import os

from . import _kernels_py

BACKENDS = {"python": _kernels_py}

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None
else:
    BACKENDS["cython"] = _compiled

if _compiled is not None and not os.environ.get("CASIGA_PURE_PYTHON"):
    BACKEND = "cython"
else:
    BACKEND = "python"


def get_kernel(name=None):
    """Element stiffness function of the named (or active) backend."""
    name = BACKEND if name is None else name
    try:
        return BACKENDS[name].element_stiffness
    except KeyError:
        raise ValueError("kernel backend %r unavailable (have %s)" % (name, sorted(BACKENDS)))
