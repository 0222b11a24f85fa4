"""Kernel backend selection.

The compiled extension is preferred when importable; otherwise the pure
numpy fallback is used.  Set UROM_KERNEL=pure or UROM_KERNEL=compiled to
force a backend (forcing an absent compiled backend raises).
"""

import os

from . import pure

_forced = os.environ.get("UROM_KERNEL", "")
_impl = pure
_backend = "pure"

if _forced != "pure":
    try:
        from . import _ext

        _impl = _ext
        _backend = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise

PROJ_WHOLE = pure.PROJ_WHOLE
PROJ_BOX = pure.PROJ_BOX
PROJ_BALL = pure.PROJ_BALL
PROJ_SIMPLEX = pure.PROJ_SIMPLEX

extragradient_affine = _impl.extragradient_affine


def backend():
    """Active backend name: 'compiled' or 'pure'."""
    return _backend
