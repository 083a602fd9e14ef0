"""Optional numba acceleration.

The hot angular kernels exist in two flavours: a numba ``@njit`` loop and a
vectorized numpy fallback.  Which one is used is decided at import time from
the ``HARTREE_BUBBLES_DISABLE_NUMBA`` environment variable and can be switched
at runtime with :func:`use_backend`.
"""
from __future__ import annotations

import contextlib
import os

ENV_FLAG = "HARTREE_BUBBLES_DISABLE_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _env_disabled() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


_backend = "numba" if (HAVE_NUMBA and not _env_disabled()) else "numpy"


def njit(func):
    """``numba.njit`` (cached, numpy error model) when numba is importable, identity otherwise."""
    if HAVE_NUMBA:
        return numba.njit(cache=True, error_model="numpy")(func)
    return func


def backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    _backend = name


@contextlib.contextmanager
def use_backend(name: str):
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)
