"""Backend selection.

The compiled ``_core`` extension is used when it imports; set
``EDABENCH_BACKEND=pure`` to force the pure-Python loops.  Functions with a
custom Python fitness always run on the pure backend.
"""
import os

from . import _pure
from .errors import InvalidInputError

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

NATIVE_AVAILABLE = _core is not None
DEFAULT_BACKEND = os.environ.get("EDABENCH_BACKEND") or ("native" if NATIVE_AVAILABLE else "pure")
if DEFAULT_BACKEND not in ("native", "pure"):
    raise ImportError(f"EDABENCH_BACKEND must be 'native' or 'pure', not {DEFAULT_BACKEND!r}")


def kernels(f, backend=None):
    """Module implementing the run loops for fitness ``f``."""
    backend = backend or DEFAULT_BACKEND
    if backend == "pure":
        return _pure
    if backend != "native":
        raise InvalidInputError(f"unknown backend {backend!r}")
    if _core is None:
        if backend is DEFAULT_BACKEND:
            return _pure
        raise InvalidInputError("compiled backend requested but edabench._core is not built")
    return _core if f.native else _pure
