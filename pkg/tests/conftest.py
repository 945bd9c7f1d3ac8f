import itertools

import numpy as np
import pytest

from dynsubmax.oracle import CoverageFunction


def ref_coverage_value(covers, weights, subset):
    """Independent reference: union the covers by hand, sum item weights."""
    covered = set()
    for e in subset:
        covered |= set(covers[e])
    return sum(weights.get(u, 1.0) for u in covered)


def random_cover_dicts(n_elements, n_items, seed, cover_range=(1, 6), weight_range=(0.5, 1.5)):
    rng = np.random.default_rng(seed)
    weights = {u: float(rng.uniform(*weight_range)) for u in range(n_items)}
    covers = {}
    for e in range(n_elements):
        sz = int(rng.integers(cover_range[0], cover_range[1] + 1))
        covers[e] = rng.choice(n_items, size=min(sz, n_items), replace=False).tolist()
    return covers, weights


def frozen_uniform_instance(backend=None):
    """Five interchangeable elements engineered to force a sample count of 2.

    Each element covers its own heavy item (weight 92) plus one shared
    pairwise item (weight 2) per other element, so f(e) = 100 for all e,
    pairwise gains are exactly 98 and two-sample gains exactly 96. With the
    threshold at 97 the tail-sample indicator is exactly 1 for m' <= 2 and
    exactly 0 for m' >= 3, making the chosen count deterministic.
    """
    covers = {i: [f"own{i}"] for i in range(5)}
    weights = {f"own{i}": 92.0 for i in range(5)}
    for i, j in itertools.combinations(range(5), 2):
        tag = f"p{i}{j}"
        weights[tag] = 2.0
        covers[i].append(tag)
        covers[j].append(tag)
    return CoverageFunction(covers, weights, backend=backend)


@pytest.fixture
def frozen_uniform():
    return frozen_uniform_instance()
