"""Single-run dynamic structure for one OPT guess.

The structure keeps a stack of levels. Level i snapshots a residual set,
partitions it into geometric gain buckets against the solution prefix,
samples a uniform subset of a computed size from the largest bucket, and
filters what remains for the next level. Insertions accumulate lazily in
per-level buffers; deletions accumulate in a global set. A level is torn
down and rebuilt (together with everything below it) when its buffer grows
past 3/2 of its snapshot, when an inserted element cascades past the last
level, or when the deleted fraction of its chosen bucket reaches eps_del.

The maintained output is the union of all level samples minus deletions,
which stays within the cardinality budget k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DuplicateElementError, InstanceTooLargeError, InvariantViolation, UnknownElementError

__all__ = [
    "Params",
    "LevelState",
    "RunState",
    "filter_survivors",
    "tail_hit_rate",
    "calc_sample_count",
    "check_suitable",
    "threshold_cutoff",
    "REL_TOL",
]

REL_TOL = 1e-9

_EMPTY_IDS = np.empty(0, dtype=np.int64)


def threshold_cutoff(thr: float) -> float:
    """Effective comparison bound for `value >= thr` with relative tolerance."""
    return thr * (1.0 - REL_TOL)


@dataclass(frozen=True)
class Params:
    """Run parameters. eps splits into the per-role epsilons when not given."""

    k: int
    eps: float = 0.05
    eps_sam: float | None = None
    eps_buck: float | None = None
    eps_opt: float | None = None
    eps_del: float | None = None
    trial_factor: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if not 0.0 < self.eps < 0.1:
            raise ValueError("eps must lie in (0, 1/10)")
        for name, default in (("eps_sam", self.eps), ("eps_buck", self.eps),
                              ("eps_opt", self.eps), ("eps_del", self.eps / 20.0)):
            if getattr(self, name) is None:
                object.__setattr__(self, name, default)
        for name in ("eps_sam", "eps_buck", "eps_opt", "eps_del"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.eps_del > self.eps_sam / 16.0:
            raise ValueError("eps_del must be at most eps_sam/16")
        if self.trial_factor <= 0.0:
            raise ValueError("trial_factor must be positive")

    def tail_trials(self) -> int:
        """Trial count per threshold-sampling estimate, scaled by trial_factor."""
        base = (4.0 / self.eps_sam ** 2) * (
            math.log(200.0) + 11.0 * math.log(self.k) - math.log(self.eps_sam))
        return max(1, math.ceil(self.trial_factor * base))


def _bucket_indices(margs: np.ndarray, tau: float, eps_buck: float, k: int) -> np.ndarray:
    """Geometric bucket index of each marginal-to-threshold ratio, clamped."""
    cut = threshold_cutoff(tau)
    if margs.size and float(margs.min()) < cut:
        raise InvariantViolation("bucketize saw a marginal below the run threshold")
    lb = math.log1p(eps_buck)
    snap = REL_TOL / lb
    jmax = int(math.floor(math.log(2.0 * k) / lb + snap))
    idx = np.floor(np.log(margs / tau) / lb + snap).astype(np.int64)
    return np.clip(idx, 0, jmax)


def _potential_values(margs: np.ndarray, tau: float, eps_buck: float) -> np.ndarray:
    """Unclamped bucket rank + 1 of each marginal (the per-element potential)."""
    cut = threshold_cutoff(tau)
    if margs.size and float(margs.min()) < cut:
        raise InvariantViolation("potential saw a live element below the run threshold")
    lb = math.log1p(eps_buck)
    snap = REL_TOL / lb
    return np.floor(np.log(margs / tau) / lb + snap).astype(np.int64) + 1


def _sorted_id_array(ids) -> np.ndarray:
    if isinstance(ids, np.ndarray):
        return ids.astype(np.int64, copy=False)
    return np.asarray(sorted(int(x) for x in ids), dtype=np.int64)


def _fy_draws(rng, trials: int, m_prime: int, n: int) -> np.ndarray:
    """Partial Fisher-Yates swap targets: column j is uniform over [j, n)."""
    draws = np.empty((trials, m_prime), dtype=np.int64)
    for j in range(m_prime):
        draws[:, j] = rng.integers(j, n, size=trials, dtype=np.int64)
    return draws


def _uniform_subset(ids_sorted: np.ndarray, m: int, rng) -> list:
    """Uniform m-subset via partial Fisher-Yates over the sorted id array."""
    arr = ids_sorted.tolist()
    n = len(arr)
    for j in range(m):
        d = int(rng.integers(j, n))
        arr[j], arr[d] = arr[d], arr[j]
    return arr[:m]


def tail_hit_rate(oracle, r_ids, g_ids, level_thr: float, m_prime: int,
                  trials: int, rng) -> float:
    """Estimate Pr[last of m' uniform samples from R' clears the threshold].

    Each trial draws a uniform (m'-1)-subset S' of R' plus one more element
    s from R' \\ S' and tests f(s | G' ∪ S') >= level_thr. Returns the hit
    fraction over `trials` independent trials.
    """
    r_ids = _sorted_id_array(r_ids)
    g_ids = _sorted_id_array(g_ids)
    n = int(r_ids.size)
    if not 1 <= m_prime <= n:
        raise ValueError(f"m_prime must be in [1, |R'|={n}], got {m_prime}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    draws = _fy_draws(rng, trials, m_prime, n)
    hits = oracle.tail_hits(r_ids, g_ids, threshold_cutoff(level_thr), draws, m_prime)
    return hits / trials


def calc_sample_count(oracle, r_ids, g_ids, params: Params, level_thr: float, rng) -> int:
    """Binary-search the largest sample size whose tail hit rate stays high.

    Preconditions: R' nonempty, already filtered at level_thr against G',
    and |G'| < k. The result lies in [1, min(k - |G'|, |R'|)].
    """
    r_ids = _sorted_id_array(r_ids)
    g_ids = _sorted_id_array(g_ids)
    if r_ids.size == 0:
        raise ValueError("calc_sample_count requires a nonempty candidate set")
    if g_ids.size >= params.k:
        raise ValueError("calc_sample_count requires |G'| < k")
    trials = params.tail_trials()
    accept = 1.0 - params.eps_sam
    m, cap = 1, int(min(params.k - g_ids.size, r_ids.size))
    if tail_hit_rate(oracle, r_ids, g_ids, level_thr, cap, trials, rng) >= accept:
        return cap
    while cap - m > 1:
        mid = (m + cap) // 2
        if tail_hit_rate(oracle, r_ids, g_ids, level_thr, mid, trials, rng) >= accept:
            m = mid
        else:
            cap = mid
    return m


def filter_survivors(oracle, r_ids, g_ids, tau: float, k: int) -> set:
    """Elements of R' whose marginal against G' clears tau; empty at |G'| = k."""
    g = np.asarray(sorted(int(x) for x in g_ids), dtype=np.int64)
    if g.size == k:
        return set()
    r = np.asarray(sorted(int(x) for x in r_ids), dtype=np.int64)
    if r.size == 0:
        return set()
    g_val = oracle.eval(g)
    margs = oracle.marginals_ids(g, g_val, r)
    return set(r[margs >= threshold_cutoff(tau)].tolist())


def check_suitable(oracle, r_ids, g_ids, level_thr: float, m: int,
                   eps_sam: float, k: int) -> bool:
    """Brute-force test of whether m is a suitable sample count.

    Enumerates every (S', s') choice — S' an (m-1)-subset of R', s' in
    R' \\ S' — and evaluates both defining conditions exactly:
    the mean surviving-filter size must drop to (1 - eps_sam/4)|R'|, and
    the tail sample must clear the threshold with probability 1 - 2 eps_sam.
    Enumeration only; |R'| is capped at 12.
    """
    r = sorted(int(x) for x in r_ids)
    g = sorted(int(x) for x in g_ids)
    n = len(r)
    if n > 12:
        raise InstanceTooLargeError(f"check_suitable enumerates subsets; |R'|={n} > 12")
    if not 1 <= m <= n:
        raise ValueError(f"m must be in [1, |R'|={n}], got {m}")
    cut = threshold_cutoff(level_thr)
    tail_hits = 0
    survivor_sum = 0
    pairs = 0
    with oracle.paused():
        for s_prime in combinations(r, m - 1):
            base = sorted(g + list(s_prime))
            v_base = oracle.eval(base)
            rest_after_sp = [e for e in r if e not in s_prime]
            for s in rest_after_sp:
                v_full = oracle.eval(sorted(base + [s]))
                if v_full - v_base >= cut:
                    tail_hits += 1
                pairs += 1
                if len(g) + m >= k:
                    continue  # the filter's k-branch returns the empty set
                chosen = sorted(base + [s])
                for e in r:
                    if e in s_prime or e == s:
                        continue
                    if oracle.eval(sorted(chosen + [e])) - v_full >= cut:
                        survivor_sum += 1
    mean_survivors = survivor_sum / pairs
    hit_rate = tail_hits / pairs
    cond_shrink = mean_survivors <= (1.0 - eps_sam / 4.0) * n + 1e-9
    cond_quality = hit_rate >= (1.0 - 2.0 * eps_sam) - 1e-9
    return cond_shrink and cond_quality


@dataclass
class LevelState:
    """One level: residual snapshot, lazy buffer, chosen bucket, and samples."""

    residual: frozenset
    buffer: set
    bucket: frozenset
    bucket_index: int
    level_threshold: float
    sample_count: int
    samples: tuple
    prefix_ids: np.ndarray
    prefix_value: float
    prefix_token: int
    bucket_deleted: int = 0


class RunState:
    """Dynamic structure for a fixed OPT guess; single-threaded."""

    def __init__(self, oracle, opt_guess: float, params: Params, seed_extra: tuple = ()):
        if opt_guess <= 0:
            raise ValueError("opt_guess must be positive")
        self.oracle = oracle
        self.params = params
        self.opt_guess = float(opt_guess)
        self.tau = self.opt_guess / (2.0 * params.k)
        self.initial_elements: frozenset = frozenset()
        self.r0_buffer: set = set()
        self.deleted: set = set()
        self.levels: list[LevelState] = []
        self.rng = np.random.default_rng(np.random.SeedSequence((params.rng_seed,) + tuple(seed_extra)))
        self._token = 0
        self._memo: dict = {}

    @classmethod
    def init(cls, oracle, elements, opt_guess: float, params: Params, seed_extra: tuple = ()):
        """Build the structure over an initial ground set (offline start)."""
        run = cls(oracle, opt_guess, params, seed_extra)
        ids = sorted(set(int(e) for e in elements))
        run.initial_elements = frozenset(ids)
        run.r0_buffer = set(ids)
        arr = np.asarray(ids, dtype=np.int64)
        if arr.size:
            margs = run.oracle.marginals_ids(_EMPTY_IDS, 0.0, arr)
            keep = margs >= threshold_cutoff(run.tau)
            run._rebuild_from(1, arr[keep], margs[keep])
        return run

    # structure accessors ------------------------------------------------

    @property
    def T(self) -> int:
        return len(self.levels)

    def _prefix(self, i: int):
        """(ids, value, memo token) of the solution prefix after level i."""
        if i == 0:
            return _EMPTY_IDS, 0.0, 0
        lvl = self.levels[i - 1]
        return lvl.prefix_ids, lvl.prefix_value, lvl.prefix_token

    def solution(self):
        """Current output: union of level samples minus deletions, and its value."""
        chosen = set()
        for lvl in self.levels:
            chosen.update(lvl.samples)
        chosen -= self.deleted
        with self.oracle.paused():
            value = self.oracle.eval(sorted(chosen))
        return chosen, value

    # rebuild ------------------------------------------------------------

    def _next_token(self) -> int:
        self._token += 1
        return self._token

    def _rebuild_from(self, i: int, r_ids: np.ndarray, margs: np.ndarray | None):
        """Rebuild levels i, i+1, ... from the given residual snapshot.

        ``margs`` carries marginals of r_ids against the current prefix when
        the caller already evaluated them (filter output or insert cascade);
        None forces a fresh evaluation.
        """
        del self.levels[i - 1:]
        k = self.params.k
        r = r_ids
        while r.size:
            g_ids, g_val, _ = self._prefix(len(self.levels))
            if g_ids.size >= k:
                raise InvariantViolation("nonempty residual with a full prefix")
            if margs is None:
                margs = self.oracle.marginals_ids(g_ids, g_val, r)
            bidx = _bucket_indices(margs, self.tau, self.params.eps_buck, k)
            sizes = np.bincount(bidx)
            b = int(np.argmax(sizes))
            bucket_ids = r[bidx == b]
            level_thr = (1.0 + self.params.eps_buck) ** b * self.tau
            m = calc_sample_count(self.oracle, bucket_ids, g_ids, self.params, level_thr, self.rng)
            samples = _uniform_subset(bucket_ids, m, self.rng)
            new_g = np.sort(np.concatenate([g_ids, np.asarray(samples, dtype=np.int64)]))
            g_new_val = self.oracle.eval(new_g)
            self.levels.append(LevelState(
                residual=frozenset(r.tolist()),
                buffer=set(r.tolist()),
                bucket=frozenset(bucket_ids.tolist()),
                bucket_index=b,
                level_threshold=level_thr,
                sample_count=m,
                samples=tuple(samples),
                prefix_ids=new_g,
                prefix_value=g_new_val,
                prefix_token=self._next_token(),
            ))
            if new_g.size >= k:
                r = _EMPTY_IDS
                margs = None
            else:
                new_margs = self.oracle.marginals_ids(new_g, g_new_val, r)
                keep = new_margs >= threshold_cutoff(self.tau)
                r = r[keep]
                margs = new_margs[keep]

    def reconstruct(self, i: int):
        """Rebuild level i (and everything below) from its live buffer."""
        if not 1 <= i <= self.T + 1:
            raise ValueError(f"reconstruct level must be in [1, T+1], got {i}")
        buf = self.levels[i - 1].buffer if i <= self.T else set()
        live = np.asarray(sorted(buf - self.deleted), dtype=np.int64)
        self._rebuild_from(i, live, None)

    # updates --------------------------------------------------------------

    def insert(self, v: int):
        v = int(v)
        if v in self.r0_buffer or v in self.deleted:
            raise DuplicateElementError(f"element {v} was already inserted")
        if not self.oracle.fn.has_element(v):
            raise UnknownElementError(v)
        self.r0_buffer.add(v)
        varr = np.asarray([v], dtype=np.int64)
        top = self.T + 1
        for i in range(1, top + 1):
            g_ids, g_val, _ = self._prefix(i - 1)
            if g_ids.size == self.params.k:
                break
            gain = float(self.oracle.marginals_ids(g_ids, g_val, varr)[0])
            if gain < threshold_cutoff(self.tau):
                break
            if i == top:
                # the element survived every level: seed a fresh level below
                self._rebuild_from(i, varr.copy(), np.asarray([gain]))
                break
            lvl = self.levels[i - 1]
            lvl.buffer.add(v)
            if len(lvl.buffer) >= 1.5 * len(lvl.residual):
                self.reconstruct(i)
                break

    def delete(self, v: int):
        v = int(v)
        if v not in self.r0_buffer:
            raise UnknownElementError(v)
        if v in self.deleted:
            raise DuplicateElementError(f"element {v} was already deleted")
        self.deleted.add(v)
        for lvl in self.levels:
            if v in lvl.bucket:
                lvl.bucket_deleted += 1
        for i in range(1, self.T + 1):
            lvl = self.levels[i - 1]
            if lvl.bucket_deleted >= self.params.eps_del * len(lvl.bucket):
                self.reconstruct(i)
                break

    # diagnostics ----------------------------------------------------------

    def _instr_marginals(self, token: int, g_ids: np.ndarray, g_val: float, ids: list) -> np.ndarray:
        """Paused marginals vs a prefix, memoized by (prefix token, element)."""
        out = np.empty(len(ids), dtype=np.float64)
        missing = [e for e in ids if (token, e) not in self._memo]
        if missing:
            arr = np.asarray(missing, dtype=np.int64)
            with self.oracle.paused():
                vals = self.oracle.marginals_ids(g_ids, g_val, arr)
            if len(self._memo) > (1 << 20):
                self._memo.clear()
            for e, val in zip(missing, vals.tolist()):
                self._memo[(token, e)] = val
        for j, e in enumerate(ids):
            out[j] = self._memo[(token, e)]
        return out

    def _live_buffer(self, i: int) -> set:
        """Buffer of level i minus deletions (level 0 = the base buffer)."""
        if i == 0:
            return self.r0_buffer - self.deleted
        if i <= self.T:
            return self.levels[i - 1].buffer - self.deleted
        return set()

    def potential(self, i: int) -> int:
        """Sum of bucket ranks of the live buffer at level i (0 past the top)."""
        if not 1 <= i <= self.T + 1:
            raise ValueError(f"potential level must be in [1, T+1], got {i}")
        if i == self.T + 1:
            return 0
        live = sorted(self._live_buffer(i))
        if not live:
            return 0
        g_ids, g_val, token = self._prefix(i - 1)
        margs = self._instr_marginals(token, g_ids, g_val, live)
        return int(_potential_values(margs, self.tau, self.params.eps_buck).sum())

    def check_invariants(self):
        """Verify every maintained structural invariant; raise on violation.

        Runs entirely on the paused (instrumentation) oracle path.
        """
        k = self.params.k
        total = 0
        for i, lvl in enumerate(self.levels, start=1):
            if lvl.sample_count < 1:
                raise InvariantViolation(f"level {i}: sample count {lvl.sample_count} < 1")
            if len(lvl.samples) != lvl.sample_count:
                raise InvariantViolation(f"level {i}: sample list does not match its count")
            if not set(lvl.samples) <= lvl.bucket:
                raise InvariantViolation(f"level {i}: samples escape their bucket")
            total += lvl.sample_count
            if len(lvl.buffer) > 1.5 * len(lvl.residual):
                raise InvariantViolation(
                    f"level {i}: buffer {len(lvl.buffer)} exceeds 3/2 of residual {len(lvl.residual)}")
            dead = len(lvl.bucket & self.deleted)
            if dead != lvl.bucket_deleted:
                raise InvariantViolation(f"level {i}: stale bucket deletion counter")
            if dead > self.params.eps_del * len(lvl.bucket):
                raise InvariantViolation(
                    f"level {i}: {dead} bucket deletions exceed eps_del * {len(lvl.bucket)}")
            if not lvl.buffer <= (self.r0_buffer if i == 1 else self.levels[i - 2].buffer):
                raise InvariantViolation(f"level {i}: buffer escapes the buffer above it")
            if not self._live_buffer(i):
                raise InvariantViolation(f"level {i}: live buffer is empty below the top")
        if total > k:
            raise InvariantViolation(f"sample budget exceeded: {total} > k={k}")

        live = sorted(self._live_buffer(0))
        for i in range(0, self.T + 1):
            g_ids, g_val, token = self._prefix(i)
            if g_ids.size == k:
                expected: set = set()
            else:
                margs = self._instr_marginals(token, g_ids, g_val, live)
                cut = threshold_cutoff(self.tau)
                expected = {e for e, mg in zip(live, margs.tolist()) if mg >= cut}
            actual = self._live_buffer(i + 1)
            if expected != actual:
                raise InvariantViolation(
                    f"filter chain broken between levels {i} and {i + 1}: "
                    f"{len(expected ^ actual)} elements differ")
            live = sorted(actual)

        lb = math.log1p(self.params.eps_buck)
        p_cap = math.log(4.0 * k) / lb + 1e-9
        prev = None
        for i in range(1, self.T + 2):
            if i <= self.T:
                ids = sorted(self._live_buffer(i))
                if ids:
                    g_ids, g_val, token = self._prefix(i - 1)
                    vals = _potential_values(
                        self._instr_marginals(token, g_ids, g_val, ids),
                        self.tau, self.params.eps_buck)
                    if int(vals.max()) > p_cap:
                        raise InvariantViolation(
                            f"level {i}: element potential {int(vals.max())} above log cap")
                    cur = int(vals.sum())
                else:
                    cur = 0
            else:
                cur = 0
            if prev is not None and cur > prev:
                raise InvariantViolation(f"potential increased from level {i - 1} to {i}")
            prev = cur
