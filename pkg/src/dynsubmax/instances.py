"""Synthetic instance generators for tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .oracle import CoverageFunction

__all__ = ["random_coverage", "mixed_instance"]


def random_coverage(n_elements: int, n_items: int, seed: int,
                    cover_range=(1, 6), weight_range=(0.5, 1.5),
                    backend=None) -> CoverageFunction:
    """Random weighted coverage instance; element ids are 0..n_elements-1."""
    rng = np.random.default_rng(seed)
    weights = {u: float(rng.uniform(*weight_range)) for u in range(n_items)}
    covers = {}
    for e in range(n_elements):
        sz = int(rng.integers(cover_range[0], cover_range[1] + 1))
        covers[e] = rng.choice(n_items, size=min(sz, n_items), replace=False).tolist()
    return CoverageFunction(covers, weights, backend=backend)


def mixed_instance(n_elements: int, seed: int, backend=None) -> CoverageFunction:
    """Modular-plus-coverage mix, encoded as pure coverage.

    Each element covers a private item (its modular share) plus a few
    shared items drawn from a universe that scales with n, so marginals
    stay spread out as the live set grows.
    """
    rng = np.random.default_rng(seed)
    n_shared = max(8, n_elements // 3)
    weights = {f"s{u}": float(rng.uniform(0.5, 1.5)) for u in range(n_shared)}
    covers = {}
    for e in range(n_elements):
        own = f"m{e}"
        weights[own] = float(rng.uniform(0.05, 0.8))
        sz = int(rng.integers(1, 5))
        shared = rng.choice(n_shared, size=min(sz, n_shared), replace=False)
        covers[e] = [own] + [f"s{u}" for u in shared.tolist()]
    return CoverageFunction(covers, weights, backend=backend)
