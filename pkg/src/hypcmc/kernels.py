"""Backend selection for the assembly kernels.

The compiled extension is used when it imports; setting
``HYPCMC_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

import numpy as np

from hypcmc import _assembly_py

BACKENDS = {"python": _assembly_py}
try:
    from hypcmc import _assembly as _compiled
except ImportError:
    _compiled = None
else:
    BACKENDS["cython"] = _compiled

if _compiled is not None and not os.environ.get("HYPCMC_PURE_PYTHON"):
    BACKEND = "cython"
else:
    BACKEND = "python"


def get(name=None):
    return BACKENDS[name or BACKEND]


def prepare(mesh):
    """Contiguous, correctly typed element data for ``mesh``."""
    return (np.ascontiguousarray(mesh.triangles, dtype=np.dtype("l")),
            np.ascontiguousarray(mesh.signed_areas, dtype=float),
            np.ascontiguousarray(mesh.basis_gradients, dtype=float))
