import itertools

import numpy as np
import pytest

from dynsubmax.errors import UnknownElementError
from dynsubmax.oracle import CountingOracle, CoverageFunction, ModularFunction, load_coverage, save_coverage

from conftest import random_cover_dicts, ref_coverage_value


def test_eval_examples():
    f = CoverageFunction({1: ["u1", "u2"]}, {"u1": 1.0, "u2": 1.0})
    oc = CountingOracle(f)
    assert oc.eval([]) == 0.0
    assert oc.eval([1]) == 2.0

    f2 = CoverageFunction({1: ["u1"], 2: ["u1"]}, {"u1": 3.0})
    oc2 = CountingOracle(f2)
    assert oc2.eval([1, 2]) == 3.0


def test_marginal_examples():
    f = CoverageFunction({1: ["u1"], 2: ["u1"]}, {"u1": 1.0})
    oc = CountingOracle(f)
    assert oc.marginal(1, [1, 2]) == 0.0  # member of the set
    assert oc.marginal(2, [1]) == 0.0  # item already covered

    m = ModularFunction({1: 5.0})
    assert CountingOracle(m).marginal(1, []) == 5.0


def test_marginal_query_cost():
    f = CoverageFunction({1: ["a"], 2: ["b"], 3: ["c"]})
    oc = CountingOracle(f)
    oc.eval([1, 2])
    before = oc.query_count()
    oc.marginal(3, [1, 2])  # f({1,2}) cached -> only one new evaluation
    assert oc.query_count() == before + 1
    before = oc.query_count()
    oc.marginal(2, [3])  # neither {3} nor {2,3} cached -> two evaluations
    assert oc.query_count() == before + 2


def test_query_count_contract():
    f = CoverageFunction({i: [f"u{i}"] for i in range(8)})
    oc = CountingOracle(f)
    assert oc.query_count() == 0
    oc.eval([0])
    assert oc.query_count() == 1
    oc.eval([0])
    assert oc.query_count() == 1  # cache hit
    sets = [[i, i + 1] for i in range(6)]
    before = oc.query_count()
    for s in sets:
        oc.eval(s)
    assert oc.query_count() == before + len(sets)
    for s in sets:
        oc.eval(s)
    assert oc.query_count() == before + len(sets)
    oc.reset_counts()
    assert oc.query_count() == 0


def test_cache_is_bounded():
    f = CoverageFunction({i: [f"u{i}"] for i in range(10)})
    oc = CountingOracle(f, cache_size=4)
    for i in range(8):
        oc.eval([i])
    assert oc.query_count() == 8
    oc.eval([0])  # evicted long ago -> counted again
    assert oc.query_count() == 9
    oc.eval([7])  # still resident
    assert oc.query_count() == 9


def test_unknown_element():
    f = CoverageFunction({1: ["u"]})
    oc = CountingOracle(f)
    with pytest.raises(UnknownElementError):
        oc.eval([2])
    with pytest.raises(UnknownElementError):
        oc.marginal(9, [1])


def test_matches_reference_on_random_instances():
    for seed in range(8):
        covers, weights = random_cover_dicts(12, 20, seed)
        f = CoverageFunction(covers, weights)
        rng = np.random.default_rng(seed + 99)
        for _ in range(40):
            size = int(rng.integers(0, 9))
            subset = rng.choice(12, size=size, replace=False).tolist()
            assert f.value(subset) == pytest.approx(
                ref_coverage_value(covers, weights, subset), rel=1e-12)


def test_monotone_and_submodular_spot_checks():
    for seed in range(6):
        covers, weights = random_cover_dicts(10, 15, seed + 50)
        f = CoverageFunction(covers, weights)
        oc = CountingOracle(f)
        rng = np.random.default_rng(seed)
        for _ in range(30):
            a_sz = int(rng.integers(0, 5))
            b_extra = int(rng.integers(0, 4))
            a = set(rng.choice(10, size=a_sz, replace=False).tolist())
            b = a | set(rng.choice(10, size=min(10, a_sz + b_extra), replace=False).tolist())
            assert oc.eval(a) <= oc.eval(b) + 1e-9
            outside = [e for e in range(10) if e not in b]
            if outside:
                e = outside[int(rng.integers(len(outside)))]
                ma, mb = oc.marginal(e, a), oc.marginal(e, b)
                assert ma >= mb - 1e-9 * (1.0 + abs(ma))


def test_paused_evaluations_touch_neither_count_nor_cache():
    f = CoverageFunction({1: ["a"], 2: ["b"]})
    oc = CountingOracle(f)
    with oc.paused():
        assert oc.eval([1, 2]) == 2.0
    assert oc.query_count() == 0
    assert oc.instrumentation_count() == 1
    oc.eval([1, 2])  # paused evals never seeded the cache
    assert oc.query_count() == 1
    with oc.paused():
        oc.eval([1, 2])  # but paused reads may hit it
    assert oc.instrumentation_count() == 1


def test_modular_function():
    m = ModularFunction({1: 5.0, 2: 3.0, 3: 1.0})
    oc = CountingOracle(m)
    assert oc.eval([1, 2, 3]) == 9.0
    assert oc.eval([]) == 0.0
    with pytest.raises(ValueError):
        ModularFunction({1: -2.0})


def test_load_save_round_trip(tmp_path):
    covers, weights = random_cover_dicts(9, 14, seed=3)
    path = tmp_path / "inst.txt"
    save_coverage(path, covers, weights)
    loaded = load_coverage(path)
    direct = CoverageFunction(covers, weights)
    for subset in itertools.combinations(range(9), 3):
        assert loaded.value(subset) == direct.value(subset)


def test_load_defaults_and_errors(tmp_path):
    p = tmp_path / "inst.txt"
    p.write_text("# comment\n7 a b:2.5 c\n9 b:2.5\n")
    f = load_coverage(p)
    assert f.value([7]) == 1.0 + 2.5 + 1.0
    assert f.value([9]) == 2.5
    assert f.value([7, 9]) == 4.5

    bad = tmp_path / "bad.txt"
    bad.write_text("x a b\n")
    with pytest.raises(ValueError):
        load_coverage(bad)
    dup = tmp_path / "dup.txt"
    dup.write_text("1 a\n1 b\n")
    with pytest.raises(ValueError):
        load_coverage(dup)
