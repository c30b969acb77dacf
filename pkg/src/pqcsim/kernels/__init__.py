"""Hot amplitude kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports and the environment variable
``PQCSIM_NO_NUMBA`` is unset (or "0"). ``use("numpy")`` / ``use("numba")``
switch the active backend at runtime; callers look kernels up through this
module on every call, so a switch takes effect immediately.
"""
import os
from types import ModuleType

from . import _numpy

KERNEL_NAMES = (
    "apply_1q",
    "phase_1q",
    "apply_c1q",
    "cnot",
    "cphase",
    "toffoli",
    "norm_sq",
    "bit_probs",
    "gather",
    "scatter",
    "pattern_addresses",
    "logical_indices",
    "prefix_masses",
    "modexp_fill",
)

try:
    from . import _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

NUMBA_AVAILABLE = _numba is not None

BACKEND = ""


def backend_module(name: str) -> ModuleType:
    if name == "numpy":
        return _numpy
    if name == "numba":
        if _numba is None:
            raise ImportError("numba backend requested but numba is not importable")
        return _numba
    raise ValueError(f"unknown kernel backend {name!r}")


def use(name: str) -> str:
    """Activate a backend; returns the previously active name."""
    global BACKEND
    mod = backend_module(name)
    previous = BACKEND
    g = globals()
    for k in KERNEL_NAMES:
        g[k] = getattr(mod, k)
    BACKEND = name
    return previous


def _default_backend() -> str:
    if os.environ.get("PQCSIM_NO_NUMBA", "") not in ("", "0"):
        return "numpy"
    return "numba" if NUMBA_AVAILABLE else "numpy"


use(_default_backend())
