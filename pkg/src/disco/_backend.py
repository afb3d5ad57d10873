"""Kernel backend selection.

``DISCO_BACKEND`` picks the implementation of the hot loops in
:mod:`disco._kernels`: ``numba`` (JIT compiled), ``numpy`` (vectorised
fallback) or ``auto`` (numba when importable).  Read once at import time.
"""
import os

try:
    import numba  # noqa: F401
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    HAS_NUMBA = False


def _resolve(name):
    name = (name or "auto").strip().lower()
    if name not in ("auto", "numba", "numpy"):
        raise ValueError(f"DISCO_BACKEND must be auto, numba or numpy, got {name!r}")
    if name == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    if name == "numba" and not HAS_NUMBA:
        raise ImportError("DISCO_BACKEND=numba but numba is not installed")
    return name


BACKEND = _resolve(os.environ.get("DISCO_BACKEND"))
