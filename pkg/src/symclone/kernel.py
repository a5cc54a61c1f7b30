"""Selects the integration kernel: compiled if importable, numpy otherwise.

Set ``SYMCLONE_PURE_PYTHON=1`` to force the numpy kernel.
"""

import os
from types import ModuleType

from . import _pykernel

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

BACKENDS: dict[str, ModuleType] = {"python": _pykernel}
if _ckernel is not None:
    BACKENDS["compiled"] = _ckernel

if _ckernel is not None and not os.environ.get("SYMCLONE_PURE_PYTHON"):
    DEFAULT_BACKEND = "compiled"
else:
    DEFAULT_BACKEND = "python"


def get_backend(name=None) -> ModuleType:
    name = name or DEFAULT_BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}; have {sorted(BACKENDS)}") from None
