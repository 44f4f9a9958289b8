"""Select the compiled kernel module when available.

Set ``GEODEFECT_PURE_PYTHON=1`` to force the NumPy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("GEODEFECT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

metric_jet1 = _impl.metric_jet1
geodesic_accel = _impl.geodesic_accel
rk4_integrate = _impl.rk4_integrate


def backends():
    """Both kernel modules keyed by name, compiled one only if importable."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels as _compiled
    except ImportError:
        return out
    out["cython"] = _compiled
    return out
