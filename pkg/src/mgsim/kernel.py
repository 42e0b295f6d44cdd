"""Kernel backend selection.

The compiled Cython kernel is used when it imports and its array layout
matches ``mgsim.layout``; otherwise the pure-Python kernel is used. Set
``MGSIM_PURE_PYTHON=1`` to force the fallback.
"""

import logging
import os

from mgsim import _pykernel
from mgsim.layout import layout_signature

log = logging.getLogger(__name__)


def _load_compiled():
    from mgsim import _ckernel

    if tuple(_ckernel.layout_signature()) != layout_signature():
        raise ImportError("compiled kernel layout is stale; rebuild the extension")
    return _ckernel


if os.environ.get("MGSIM_PURE_PYTHON"):
    _impl, BACKEND = _pykernel, "python"
else:
    try:
        _impl, BACKEND = _load_compiled(), "cython"
    except ImportError as exc:
        log.debug("compiled kernel unavailable (%s); using pure-Python kernel", exc)
        _impl, BACKEND = _pykernel, "python"

Kernel = _impl.Kernel
PyKernel = _pykernel.Kernel


def compiled_kernel():
    """The compiled ``Kernel`` class, or ``None`` when not built."""
    try:
        return _load_compiled().Kernel
    except ImportError:
        return None
