"""Backend selection: compiled Cython kernels when available, pure Python otherwise.

Set ``DYNSUBMAX_BACKEND=pure`` (or ``compiled``) to force a choice.
"""

from __future__ import annotations

import os

from ._purekernels import PyCoverageKernel

try:
    from ._kernels import CoverageKernel as _CompiledCoverageKernel

    HAVE_COMPILED = True
except ImportError:
    _CompiledCoverageKernel = None
    HAVE_COMPILED = False


def default_backend() -> str:
    forced = os.environ.get("DYNSUBMAX_BACKEND")
    if forced:
        if forced not in ("pure", "compiled"):
            raise ValueError(f"DYNSUBMAX_BACKEND must be 'pure' or 'compiled', got {forced!r}")
        if forced == "compiled" and not HAVE_COMPILED:
            raise RuntimeError("DYNSUBMAX_BACKEND=compiled but the extension is not built")
        return forced
    return "compiled" if HAVE_COMPILED else "pure"


def make_coverage_kernel(indptr, items, item_weights, backend: str | None = None):
    backend = backend or default_backend()
    if backend == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled backend requested but dynsubmax._kernels is not built")
        return _CompiledCoverageKernel(indptr, items, item_weights)
    if backend == "pure":
        return PyCoverageKernel(indptr, items, item_weights)
    raise ValueError(f"unknown backend {backend!r}")
