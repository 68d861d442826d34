"""Numerical core routines for batched model evaluation.

Two interchangeable backends implement the same entry points
(``energy_batch``, ``stress_batch``, ``mse_and_grad``, plus ``prepare``
and the ``*_prepared`` variants that reuse precomputed features):

* ``pyref``  -- pure numpy reference implementation, always available;
* ``_core``  -- compiled (Cython) twin with fused per-tuple loops.

The compiled backend is preferred when importable.  Set the environment
variable ``PANN_BACKEND=python`` to force the reference implementation or
``PANN_BACKEND=compiled`` to fail loudly if the extension is missing.
Results agree between backends to floating-point roundoff; within one
installation every run uses the same backend, so outputs stay reproducible.
"""

from __future__ import annotations

import os

from . import pyref

_choice = os.environ.get("PANN_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "python", "compiled"):
    raise ValueError(f"PANN_BACKEND must be auto, python or compiled, not {_choice!r}")

_compiled = None
if _choice in ("auto", "compiled"):
    try:
        from . import _core as _compiled
    except ImportError:
        if _choice == "compiled":
            raise
        _compiled = None

if _compiled is not None:
    active = _compiled
    BACKEND_NAME = "compiled"
else:
    active = pyref
    BACKEND_NAME = "python"

energy_batch = active.energy_batch
stress_batch = active.stress_batch
mse_and_grad = active.mse_and_grad
prepare = active.prepare
energy_batch_prepared = active.energy_batch_prepared
stress_batch_prepared = active.stress_batch_prepared
mse_and_grad_prepared = active.mse_and_grad_prepared
norm_constants = pyref.norm_constants  # tiny, single-point; one implementation


def get_backend(name: str):
    """Fetch a backend module by name ("python" or "compiled") for benchmarks."""
    if name == "python":
        return pyref
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled backend is not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
