"""Kernel backend selection.

The compiled extension (``singular_plap._fvcore``) is preferred when it was
built; otherwise the NumPy implementation is used.  Override with the
environment variable ``SINGULAR_PLAP_KERNELS=python`` or ``=compiled``.
"""

import os

from . import _python

try:
    from singular_plap import _fvcore as _compiled
except ImportError:
    _compiled = None

_requested = os.environ.get("SINGULAR_PLAP_KERNELS", "").strip().lower()
if _requested in ("python", "numpy"):
    _impl = _python
elif _requested in ("compiled", "cython"):
    if _compiled is None:
        raise ImportError(
            "SINGULAR_PLAP_KERNELS=compiled but the extension is not built; "
            "reinstall with a C compiler available"
        )
    _impl = _compiled
elif _requested:
    raise ImportError(f"unknown kernel backend {_requested!r}")
else:
    _impl = _compiled if _compiled is not None else _python

BACKEND = _impl.BACKEND
residual = _impl.residual
jacobian = _impl.jacobian
tridiag_solve = _impl.tridiag_solve


def available_backends():
    out = {"python": _python}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out
