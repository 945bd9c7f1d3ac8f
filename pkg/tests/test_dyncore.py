import math

import numpy as np
import pytest

from dynsubmax.dyncore import (
    Params,
    RunState,
    _bucket_indices,
    filter_survivors,
    threshold_cutoff,
)
from dynsubmax.errors import DuplicateElementError, InvariantViolation, UnknownElementError
from dynsubmax.oracle import CountingOracle, CoverageFunction, ModularFunction

from conftest import random_cover_dicts


def make_run(fn, opt_guess, **kw):
    kw.setdefault("trial_factor", 0.02)
    params = Params(**kw)
    return RunState.init(CountingOracle(fn), fn.element_ids, opt_guess, params)


# parameters ---------------------------------------------------------------

def test_params_validation():
    with pytest.raises(ValueError):
        Params(k=0)
    with pytest.raises(ValueError):
        Params(k=3, eps=0.1)
    with pytest.raises(ValueError):
        Params(k=3, eps=-0.01)
    with pytest.raises(ValueError):
        Params(k=3, eps=0.05, eps_del=0.05)  # above eps_sam/16
    with pytest.raises(ValueError):
        Params(k=3, trial_factor=0.0)
    p = Params(k=3, eps=0.08)
    assert p.eps_sam == p.eps_buck == p.eps_opt == 0.08
    assert p.eps_del == 0.08 / 20


def test_trial_count_formula():
    # ceil((4/eps^2) * ln(200 k^11 / eps)) at eps=0.05, k=5
    assert Params(k=5, eps=0.05).tail_trials() == 41597
    assert Params(k=5, eps=0.05, trial_factor=0.01).tail_trials() == 416
    assert Params(k=1, eps=0.05).tail_trials() == math.ceil(
        1600 * (math.log(200) - math.log(0.05)))


# bucket partition ----------------------------------------------------------

def test_bucket_examples():
    eps_b, k = 0.1, 5
    tau = 2.0
    # all marginals exactly tau -> bucket 0
    idx = _bucket_indices(np.array([tau, tau, tau]), tau, eps_b, k)
    assert idx.tolist() == [0, 0, 0]
    # ratio (1+eps)^2.5 -> bucket 2
    idx = _bucket_indices(np.array([tau * (1 + eps_b) ** 2.5]), tau, eps_b, k)
    assert idx.tolist() == [2]
    # tau and 2k*tau with eps_buck=0.1, k=5 -> buckets 0 and floor(log_1.1 10) = 24
    idx = _bucket_indices(np.array([tau, 2 * k * tau]), tau, eps_b, k)
    assert idx.tolist() == [0, 24]
    # exact power boundary stays in its own bucket
    idx = _bucket_indices(np.array([tau * (1 + eps_b) ** 3]), tau, eps_b, k)
    assert idx.tolist() == [3]
    with pytest.raises(InvariantViolation):
        _bucket_indices(np.array([tau * 0.5]), tau, eps_b, k)


# filter ---------------------------------------------------------------------

def test_filter_examples():
    f = CoverageFunction({1: ["u1"], 2: ["u1"]}, {"u1": 1.0})
    oc = CountingOracle(f)
    assert filter_survivors(oc, [], [], 1.0, k=2) == set()
    # |G'| = k forces the empty branch regardless of marginals
    assert filter_survivors(oc, [2], [1], 0.5, k=1) == set()
    # marginal(b, {a}) = 0 < 0.5
    assert filter_survivors(oc, [2], [1], 0.5, k=5) == set()
    assert filter_survivors(oc, [2], [], 0.5, k=5) == {2}


def test_filter_query_budget():
    f = CoverageFunction({i: [f"u{i}"] for i in range(6)})
    oc = CountingOracle(f)
    before = oc.query_count()
    filter_survivors(oc, range(1, 6), [0], 0.5, k=4)
    assert oc.query_count() - before <= 5 + 1


# init / reconstruct ----------------------------------------------------------

def test_init_empty():
    run = make_run(ModularFunction({}), 10.0, k=3)
    assert run.T == 0
    assert run.solution() == (set(), 0.0)


def test_init_single_element():
    run = make_run(ModularFunction({7: 5.0}), 8.0, k=1)  # tau = 4 <= 5
    assert run.T == 1
    assert run.levels[0].samples == (7,)
    assert run.solution() == ({7}, 5.0)


def test_init_all_below_threshold():
    run = make_run(ModularFunction({1: 0.5, 2: 0.5}), 100.0, k=2)  # tau = 25
    assert run.T == 0
    assert run.solution() == (set(), 0.0)


def test_reconstruct_modular_full_budget():
    k = 4
    fn = ModularFunction({i: 2.0 for i in range(k)})
    run = make_run(fn, 2.0 * 2 * k, k=k)  # tau = 2.0 exactly
    assert run.T == 1
    assert run.levels[0].sample_count == k
    assert run.solution()[0] == set(range(k))
    run.check_invariants()


def test_reconstruct_empty_buffer_drops_levels():
    fn = ModularFunction({i: 2.0 for i in range(3)})
    run = make_run(fn, 12.0, k=3)
    assert run.T == 1
    for e in range(3):
        run.delete(e)
    assert run.T == 0
    assert run.solution() == (set(), 0.0)


def test_reconstruct_restores_filter_chain():
    covers, weights = random_cover_dicts(24, 40, seed=11)
    fn = CoverageFunction(covers, weights)
    guess = 3.0 * max(fn.value([e]) for e in range(24))
    run = make_run(fn, guess, k=5, eps=0.05, rng_seed=2)
    for i in (1, max(1, run.T), run.T + 1):
        run.reconstruct(i)
        run.check_invariants()


# insert -----------------------------------------------------------------------

def test_insert_below_threshold_only_buffers():
    fn = ModularFunction({1: 5.0, 2: 0.1, 3: 0.2, 4: 0.3})
    run = RunState.init(CountingOracle(fn), [1], 8.0, Params(k=2, trial_factor=0.02))
    token = run.levels[0].prefix_token
    before = run.oracle.query_count()
    for v in (2, 3, 4):
        run.insert(v)
    assert run.oracle.query_count() - before <= 3 * (run.T + 2)
    assert run.levels[0].prefix_token == token  # no reconstruction
    assert run.levels[0].buffer == {1}
    assert run.r0_buffer == {1, 2, 3, 4}
    run.check_invariants()


def test_insert_into_empty_run_reaches_top():
    fn = ModularFunction({1: 3.0, 2: 0.1})
    run = RunState.init(CountingOracle(fn), [], 4.0, Params(k=2, trial_factor=0.02))
    assert run.T == 0
    run.insert(1)  # f(1) = 3 >= tau = 1: cascades to level T+1 = 1
    assert run.T == 1
    assert 1 in run.solution()[0]
    run.check_invariants()


def test_insert_buffer_growth_triggers_rebuild():
    fn = ModularFunction({i: 2.0 for i in range(10)})
    run = RunState.init(CountingOracle(fn), [0], 4.0 * 10, Params(k=10, trial_factor=0.02))
    # |R_1| = 1; the second qualifying insert pushes |buffer| = 2 >= 1.5
    assert run.T == 1 and len(run.levels[0].residual) == 1
    run.insert(1)
    assert len(run.levels[0].residual) == 2  # rebuilt with both elements
    run.check_invariants()


def test_insert_duplicate_and_unknown():
    fn = ModularFunction({1: 1.0})
    run = RunState.init(CountingOracle(fn), [1], 4.0, Params(k=2, trial_factor=0.02))
    with pytest.raises(DuplicateElementError):
        run.insert(1)
    with pytest.raises(UnknownElementError):
        run.insert(99)


# delete -----------------------------------------------------------------------

def test_delete_in_small_bucket_triggers_rebuild():
    fn = ModularFunction({i: 2.0 for i in range(10)})
    params = Params(k=3, eps=0.08, eps_del=0.005, trial_factor=0.02)
    run = RunState.init(CountingOracle(fn), range(10), 12.0, params)  # tau = 2
    assert run.T == 1 and len(run.levels[0].bucket) == 10
    token = run.levels[0].prefix_token
    run.delete(sorted(run.levels[0].bucket)[0])  # 1 >= 0.005 * 10
    assert run.levels[0].prefix_token != token
    run.check_invariants()


def test_delete_sampled_element_without_rebuild():
    n = 300
    fn = ModularFunction({i: 2.0 for i in range(n)})
    params = Params(k=3, eps=0.08, eps_del=0.005, trial_factor=0.02)
    run = RunState.init(CountingOracle(fn), range(n), 12.0, params)
    # eps_del * 300 = 1.5 > 1: one deletion cannot trigger a rebuild
    token = run.levels[0].prefix_token
    victim = run.levels[0].samples[0]
    run.delete(victim)
    assert run.levels[0].prefix_token == token
    sol, _ = run.solution()
    assert victim not in sol
    run.check_invariants()


def test_delete_outside_buckets_no_rebuild():
    fn = ModularFunction({1: 5.0, 2: 0.1})
    run = RunState.init(CountingOracle(fn), [1, 2], 8.0, Params(k=1, trial_factor=0.02))
    token = run.levels[0].prefix_token
    run.delete(2)  # never passed the threshold filter
    assert run.levels[0].prefix_token == token
    assert 2 in run.deleted
    run.check_invariants()


def test_delete_errors():
    fn = ModularFunction({1: 1.0, 2: 1.0})
    run = RunState.init(CountingOracle(fn), [1], 4.0, Params(k=2, trial_factor=0.02))
    with pytest.raises(UnknownElementError):
        run.delete(2)  # never inserted into this run
    run.delete(1)
    with pytest.raises(DuplicateElementError):
        run.delete(1)


# solution and potential ---------------------------------------------------------

def test_solution_set_difference():
    fn = ModularFunction({i: 2.0 for i in range(2)})
    run = make_run(fn, 8.0, k=2)  # tau = 2: both sampled
    assert run.solution()[0] == {0, 1}
    run.delete(1)
    sol, val = run.solution()
    assert sol == {0} and val == 2.0


def test_potential_examples():
    fn = ModularFunction({i: 2.0 for i in range(10)})
    params = Params(k=3, eps=0.08, eps_del=0.005, trial_factor=0.02)
    run = RunState.init(CountingOracle(fn), range(10), 12.0, params)
    # marginals all exactly tau -> every per-element potential is 1
    assert run.potential(1) == len(run._live_buffer(1))
    assert run.potential(run.T + 1) == 0
    for i in range(1, run.T + 1):
        assert run.potential(i) >= run.potential(i + 1)


def test_potential_counts_instrumentation_not_queries():
    fn = ModularFunction({i: 2.0 for i in range(10)})
    run = make_run(fn, 12.0, k=3, eps=0.08, eps_del=0.005)
    before = run.oracle.query_count()
    run.potential(1)
    run.check_invariants()
    assert run.oracle.query_count() == before


# randomized stream hammering ------------------------------------------------------

def test_invariants_hold_over_random_streams():
    for seed in range(4):
        covers, weights = random_cover_dicts(50, 80, seed + 20)
        fn = CoverageFunction(covers, weights)
        guess = 2.5 * max(fn.value([e]) for e in range(50))
        run = RunState(CountingOracle(fn), guess, Params(k=5, eps=0.05, rng_seed=seed, trial_factor=0.02))
        rng = np.random.default_rng(seed)
        live = []
        for e in rng.permutation(50).tolist():
            run.insert(int(e))
            live.append(int(e))
            run.check_invariants()
            if len(live) > 8 and rng.random() < 0.3:
                victim = live.pop(int(rng.integers(len(live))))
                run.delete(victim)
                run.check_invariants()


def test_deterministic_given_seed():
    covers, weights = random_cover_dicts(30, 50, seed=77)

    def drive():
        fn = CoverageFunction(covers, weights)
        oc = CountingOracle(fn)
        run = RunState(oc, 40.0, Params(k=4, eps=0.05, rng_seed=5, trial_factor=0.02))
        trace = []
        for e in range(30):
            run.insert(e)
            if e % 3 == 0:
                trace.append((tuple(sorted(run.solution()[0])), oc.query_count()))
        return trace

    assert drive() == drive()


def test_full_insertion_quality_statistical():
    # with the exact optimum as the guess, the final value stays above
    # (1/2 - 5 eps) * OPT in nearly every seeded trial
    from dynsubmax.baselines import brute_force_opt

    eps = 0.05
    hits = 0
    trials = 100
    for seed in range(trials):
        covers, weights = random_cover_dicts(14, 24, seed + 1000)
        fn = CoverageFunction(covers, weights)
        opt = brute_force_opt(range(14), 4, fn).value
        run = RunState(CountingOracle(fn), opt,
                       Params(k=4, eps=eps, rng_seed=seed, trial_factor=0.02))
        for e in range(14):
            run.insert(e)
        if run.solution()[1] >= (0.5 - 5 * eps) * opt:
            hits += 1
    assert hits >= 90
