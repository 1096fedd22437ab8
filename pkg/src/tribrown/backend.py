"""Kernel backend selection.

Two interchangeable kernel sets exist:

* ``numba`` -- JIT-compiled loops (parallel over grid cells), used by default
  when numba imports cleanly.
* ``numpy`` -- vectorized mirrors of the same arithmetic, no compilation.

The environment variable ``TRIBROWN_BACKEND`` picks one: ``auto`` (default),
``numba``, or ``numpy``.  Both backends execute the identical per-cell
floating-point operation sequence for the rational-arithmetic pipelines
(fixed-point solvers, trace sums, density assembly), so those results agree
bit for bit.  Paths that evaluate ``exp``/``log`` inside (the interpolation
parameter solver, log-determinants) may differ between scalar libm and
numpy's vector transcendentals by about one ulp per call.
"""

from __future__ import annotations

import os
import warnings

VALID_BACKENDS = ("auto", "numba", "numpy")

try:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        import numba  # noqa: F401

    HAS_NUMBA = True
except Exception:  # pragma: no cover - exercised only on broken installs
    HAS_NUMBA = False


def requested_backend() -> str:
    """The backend named by TRIBROWN_BACKEND (unvalidated against availability)."""
    value = os.environ.get("TRIBROWN_BACKEND", "auto").strip().lower()
    if value not in VALID_BACKENDS:
        raise ValueError(
            f"TRIBROWN_BACKEND must be one of {VALID_BACKENDS}, got {value!r}"
        )
    return value


def active_backend() -> str:
    """Resolve 'auto' to a concrete backend name, validating availability."""
    req = requested_backend()
    if req == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    if req == "numba" and not HAS_NUMBA:
        raise RuntimeError("TRIBROWN_BACKEND=numba but numba is not importable")
    return req


def kernels(backend: str | None = None):
    """Return the kernel module for `backend` (default: the active one)."""
    name = backend if backend is not None else active_backend()
    if name == "auto":
        name = active_backend()
    if name == "numba":
        from . import _kernels_nb

        return _kernels_nb
    if name == "numpy":
        from . import _kernels_np

        return _kernels_np
    raise ValueError(f"unknown backend {name!r}")


def set_threads(n: int) -> None:
    """Set the worker-thread count for the numba backend (0 = library default).

    The numpy backend is single-threaded apart from BLAS; the call is a no-op
    there.
    """
    if n < 0:
        raise ValueError("thread count must be >= 0")
    if n == 0 or not HAS_NUMBA:
        return
    import numba

    numba.set_num_threads(n)
