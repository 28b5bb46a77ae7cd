"""Backend selection for the stepping kernels.

The environment variable NUWAVE_NUMBA controls dispatch:
  * unset or "auto": use numba when it imports, else pure numpy;
  * "1" (or "true"): require numba, fail loudly if unavailable;
  * "0" (or "false"): force the pure-numpy fallback.

Both backends run the identical source in nuwave.stepping; numba only
changes how the loops execute. BACKEND records the active choice.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

from . import stepping

_KERNEL_NAMES = ("wave_loop", "heat_loop", "split_loop", "v3_loop")
_NJIT_OPTIONS = {"cache": True, "nogil": True}


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def _build(backend: str) -> SimpleNamespace:
    if backend == "numba":
        import numba
        wrapped = {
            name: numba.njit(**_NJIT_OPTIONS)(getattr(stepping, name))
            for name in _KERNEL_NAMES
        }
    else:
        wrapped = {name: getattr(stepping, name) for name in _KERNEL_NAMES}
    return SimpleNamespace(backend=backend, **wrapped)


def get_kernels(backend: str) -> SimpleNamespace:
    """Build the kernel set for an explicit backend ("numba" or "numpy")."""
    if backend not in ("numba", "numpy"):
        raise ValueError("backend must be 'numba' or 'numpy', got %r" % (backend,))
    if backend == "numba" and not _numba_available():
        raise RuntimeError("numba backend requested but numba is not importable")
    return _build(backend)


def _select_default() -> str:
    flag = os.environ.get("NUWAVE_NUMBA", "auto").strip().lower()
    if flag in ("0", "false", "no", "off"):
        return "numpy"
    if flag in ("1", "true", "yes", "on"):
        if not _numba_available():
            raise RuntimeError(
                "NUWAVE_NUMBA=1 but numba is not importable; "
                "install numba or unset the flag")
        return "numba"
    return "numba" if _numba_available() else "numpy"


BACKEND = _select_default()
_ACTIVE = _build(BACKEND)

wave_loop = _ACTIVE.wave_loop
heat_loop = _ACTIVE.heat_loop
split_loop = _ACTIVE.split_loop
v3_loop = _ACTIVE.v3_loop
