"""Hot-kernel backend selection.

The compiled Cython core is used when available; the pure-NumPy fallback
is selected otherwise. Override with CASSIGSM_KERNELS=cython|python|auto.
Both backends share the same contracts and reduction order, so swapping
them changes speed, not results (beyond last-ulp rounding).
"""

import os

from . import _pykern

_choice = os.environ.get("CASSIGSM_KERNELS", "auto").lower()
if _choice not in ("auto", "cython", "python"):
    raise ValueError(f"CASSIGSM_KERNELS must be auto, cython or python, got {_choice!r}")

if _choice == "python":
    _impl = _pykern
else:
    try:
        from . import _ckern as _impl
    except ImportError:
        if _choice == "cython":
            raise
        _impl = _pykern

forward_shift_sum = _impl.forward_shift_sum
adjoint_extract = _impl.adjoint_extract
similarity_filters = _impl.similarity_filters
separable_local_mean = _impl.separable_local_mean


def backend():
    """Name of the active kernel backend: 'cython' or 'python'."""
    return _impl.BACKEND_NAME
