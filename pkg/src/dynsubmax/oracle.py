"""Submodular set functions and the query-counting oracle wrapper.

Two concrete function classes are provided: weighted coverage functions
(the main test/benchmark class) and modular functions (the degenerate
additive case). Both expose the same protocol:

* ``value(ids)``: raw, uncounted evaluation of f on a set of element ids
* ``element_ids``: the registered ids, sorted ascending
* internal row-level hooks used by :class:`CountingOracle`

All evaluations are canonical: elements are processed in ascending id
order and items in a fixed storage order, so f(A) is a pure function of
the set A — the same set always yields bit-identical floats, regardless
of call history or backend.

``CountingOracle`` wraps a function instance with the cost model used
throughout the package: every set evaluation that misses its bounded
fingerprint cache counts as one oracle query. Instrumentation reads
(solution values, invariant sweeps) run under :meth:`CountingOracle.paused`
and are tallied separately without touching the cache.
"""

from __future__ import annotations

import hashlib
from collections import OrderedDict
from contextlib import contextmanager

import numpy as np

from ._backend import make_coverage_kernel
from .errors import UnknownElementError

__all__ = [
    "CoverageFunction",
    "ModularFunction",
    "CountingOracle",
    "load_coverage",
    "save_coverage",
]


def _as_id_array(ids) -> np.ndarray:
    arr = np.asarray(list(ids) if not isinstance(ids, np.ndarray) else ids, dtype=np.int64)
    return arr


class _SetFunction:
    """Shared id bookkeeping for concrete function classes."""

    def __init__(self, element_ids):
        ids = np.asarray(sorted(int(e) for e in element_ids), dtype=np.int64)
        if ids.size and ids[0] < 0:
            raise ValueError("element ids must be non-negative integers")
        if np.unique(ids).size != ids.size:
            raise ValueError("duplicate element ids")
        self._ids = ids

    @property
    def element_ids(self) -> np.ndarray:
        return self._ids

    def __len__(self) -> int:
        return int(self._ids.size)

    def has_element(self, e) -> bool:
        i = np.searchsorted(self._ids, int(e))
        return bool(i < self._ids.size and self._ids[i] == int(e))

    def rows_for(self, ids_sorted: np.ndarray) -> np.ndarray:
        """Map a sorted id array to internal row indices; unknown id raises."""
        if ids_sorted.size == 0:
            return np.empty(0, dtype=np.int64)
        if self._ids.size == 0:
            raise UnknownElementError(int(ids_sorted[0]))
        rows = np.searchsorted(self._ids, ids_sorted)
        bad = (rows >= self._ids.size) | (self._ids[np.minimum(rows, self._ids.size - 1)] != ids_sorted)
        if bad.any():
            raise UnknownElementError(int(ids_sorted[int(np.argmax(bad))]))
        return rows.astype(np.int64)

    def value(self, ids) -> float:
        """Raw evaluation of f on a set of ids (no counting, no cache)."""
        arr = np.sort(_as_id_array(ids))
        if arr.size == 0:
            return 0.0
        return self._value_rows(self.rows_for(arr))


class CoverageFunction(_SetFunction):
    """Weighted coverage: f(A) = total weight of the items covered by A.

    ``covers`` maps element id -> iterable of item tokens; ``weights`` maps
    item token -> nonnegative weight (1.0 for tokens not listed). Monotone
    and submodular by construction, f(emptyset) = 0.
    """

    def __init__(self, covers, weights=None, backend=None):
        super().__init__(covers.keys())
        weights = weights or {}
        item_index: dict = {}
        item_w: list[float] = []
        indptr = [0]
        flat: list[int] = []
        for e in self._ids.tolist():
            tokens = sorted(set(covers[e]), key=str)
            for tok in tokens:
                idx = item_index.get(tok)
                if idx is None:
                    idx = len(item_index)
                    item_index[tok] = idx
                    w = float(weights.get(tok, 1.0))
                    if w < 0:
                        raise ValueError(f"negative weight for item {tok!r}")
                    item_w.append(w)
                flat.append(idx)
            indptr.append(len(flat))
        self._item_index = item_index
        self._indptr = np.asarray(indptr, dtype=np.int64)
        self._flat_items = np.asarray(flat, dtype=np.int64)
        self._item_weights = np.asarray(item_w, dtype=np.float64)
        self._kernel = make_coverage_kernel(self._indptr, self._flat_items, self._item_weights, backend)

    @property
    def backend(self) -> str:
        return self._kernel.backend

    @property
    def n_items(self) -> int:
        return int(self._item_weights.size)

    def covers_of(self, e) -> set:
        row = int(self.rows_for(np.asarray([int(e)], dtype=np.int64))[0])
        inv = getattr(self, "_inv_index", None)
        if inv is None:
            inv = {v: k for k, v in self._item_index.items()}
            self._inv_index = inv
        return {inv[int(u)] for u in self._flat_items[self._indptr[row]:self._indptr[row + 1]]}

    def item_weight(self, token) -> float:
        return float(self._item_weights[self._item_index[token]])

    # row-level hooks -------------------------------------------------

    def _value_rows(self, rows: np.ndarray) -> float:
        return float(self._kernel.union_weight(np.ascontiguousarray(rows, dtype=np.int64)))

    def _marginals_rows(self, base_rows, base_value, cand_rows, out) -> int:
        return int(self._kernel.marginals(
            np.ascontiguousarray(base_rows, dtype=np.int64), float(base_value),
            np.ascontiguousarray(cand_rows, dtype=np.int64), out))

    def _tail_hit_trials(self, bucket_rows, base_rows, thr_eff, draws, m_prime) -> int:
        return int(self._kernel.tail_hit_trials(
            np.ascontiguousarray(bucket_rows, dtype=np.int64),
            np.ascontiguousarray(base_rows, dtype=np.int64),
            float(thr_eff), np.ascontiguousarray(draws, dtype=np.int64), int(m_prime)))


class ModularFunction(_SetFunction):
    """Additive set function: f(A) = sum of per-element weights."""

    backend = "modular"

    def __init__(self, weights):
        super().__init__(weights.keys())
        w = np.asarray([float(weights[int(e)]) for e in self._ids.tolist()], dtype=np.float64)
        if w.size and w.min() < 0:
            raise ValueError("modular weights must be nonnegative")
        self._w = w

    def weight_of(self, e) -> float:
        return float(self._w[self.rows_for(np.asarray([int(e)], dtype=np.int64))[0]])

    def _value_rows(self, rows: np.ndarray) -> float:
        return float(np.sum(self._w[rows]))

    def _marginals_rows(self, base_rows, base_value, cand_rows, out) -> int:
        base = np.asarray(base_rows, dtype=np.int64)
        cand = np.asarray(cand_rows, dtype=np.int64)
        pos = np.searchsorted(base, cand)
        member = (pos < base.size) & (base[np.minimum(pos, max(base.size - 1, 0))] == cand) if base.size else np.zeros(cand.size, dtype=bool)
        out[:] = np.where(member, 0.0, self._w[cand])
        return int(cand.size - member.sum())

    def _tail_hit_trials(self, bucket_rows, base_rows, thr_eff, draws, m_prime) -> int:
        # The tail element's gain is just its own weight; replay the swap
        # sequence to identify it per trial.
        perm = [int(x) for x in bucket_rows]
        w = self._w
        hits = 0
        undo = [0] * (2 * m_prime)
        for trial in np.asarray(draws, dtype=np.int64).tolist():
            for j in range(m_prime):
                d = trial[j]
                undo[2 * j] = perm[j]
                undo[2 * j + 1] = perm[d]
                perm[j], perm[d] = perm[d], perm[j]
            if w[perm[m_prime - 1]] >= thr_eff:
                hits += 1
            for j in range(m_prime - 1, -1, -1):
                d = trial[j]
                perm[d] = undo[2 * j + 1]
                perm[j] = undo[2 * j]
        return hits


def _fingerprint(ids_tuple) -> bytes:
    h = hashlib.blake2b(digest_size=16)
    h.update(np.asarray(ids_tuple, dtype=np.int64).tobytes())
    return h.digest()


class CountingOracle:
    """Query-counting, value-caching wrapper around a set function.

    One query = one evaluation of f on a set that misses the bounded
    fingerprint cache. f(emptyset) short-circuits to 0.0 and is never
    counted (it is fixed by assumption, no oracle consultation needed).
    """

    def __init__(self, fn, cache_size: int = 65536):
        self.fn = fn
        self.cache_size = int(cache_size)
        self._cache: OrderedDict[bytes, float] = OrderedDict()
        self._count = 0
        self._instr = 0
        self._paused = 0

    # accounting -------------------------------------------------------

    def query_count(self) -> int:
        return self._count

    def instrumentation_count(self) -> int:
        return self._instr

    def reset_counts(self) -> None:
        self._count = 0
        self._instr = 0

    def _charge(self, n: int) -> None:
        if self._paused:
            self._instr += n
        else:
            self._count += n

    @contextmanager
    def paused(self):
        """Route evaluations to the instrumentation tally; never writes the cache."""
        self._paused += 1
        try:
            yield self
        finally:
            self._paused -= 1

    # public evaluation -------------------------------------------------

    def eval(self, ids) -> float:
        arr = np.sort(_as_id_array(ids))
        if arr.size == 0:
            return 0.0
        key = _fingerprint(arr)
        cached = self._cache.get(key)
        if cached is not None:
            self._cache.move_to_end(key)
            return cached
        value = self.fn._value_rows(self.fn.rows_for(arr))
        self._charge(1)
        if not self._paused:
            self._cache[key] = value
            if len(self._cache) > self.cache_size:
                self._cache.popitem(last=False)
        return value

    def marginal(self, e, ids) -> float:
        """f(A ∪ {e}) − f(A); costs at most 2 queries, at most 1 with f(A) cached."""
        e = int(e)
        if not self.fn.has_element(e):
            raise UnknownElementError(e)
        base = sorted(int(x) for x in ids)
        if e in base:
            return 0.0
        v0 = self.eval(base)
        v1 = self.eval(base + [e])
        gain = v1 - v0
        return gain if gain > 0.0 else 0.0

    # batch paths used by the dynamic structure -------------------------

    def marginals_ids(self, base_ids: np.ndarray, base_value: float, cand_ids: np.ndarray) -> np.ndarray:
        """Marginal of each candidate vs a fixed base whose value is known.

        Both arrays must be sorted ascending. Each candidate not already in
        the base is charged as one query (one evaluation of base ∪ {e}).
        """
        out = np.empty(cand_ids.size, dtype=np.float64)
        if cand_ids.size == 0:
            return out
        charged = self.fn._marginals_rows(
            self.fn.rows_for(base_ids), base_value, self.fn.rows_for(cand_ids), out)
        self._charge(charged)
        return out

    def tail_hits(self, bucket_ids: np.ndarray, base_ids: np.ndarray, thr_eff: float,
                  draws: np.ndarray, m_prime: int) -> int:
        """Threshold-sampling trial loop; returns the number of hits.

        Charged at the oracle-call rate of the trial loop: two evaluations
        per trial (f(G∪S') and f(G∪S'∪{s})), one when S' is empty.
        """
        hits = self.fn._tail_hit_trials(
            self.fn.rows_for(bucket_ids), self.fn.rows_for(base_ids), thr_eff, draws, m_prime)
        self._charge(int(draws.shape[0]) * (2 if m_prime > 1 else 1))
        return hits


# text instance format ----------------------------------------------------
#
# One line per element: `elem_id item[:weight] item[:weight] ...`
# Weight defaults to 1.0; `item:weight` splits on the last ':' only when the
# suffix parses as a float, so item tokens may contain ':'. Blank lines and
# lines starting with '#' are skipped. If the same item is assigned a weight
# more than once, the last assignment wins.


def _parse_item_token(tok: str):
    if ":" in tok:
        head, _, tail = tok.rpartition(":")
        try:
            return head, float(tail)
        except ValueError:
            pass
    return tok, None


def load_coverage(path, backend=None) -> CoverageFunction:
    covers: dict[int, list] = {}
    weights: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                elem = int(parts[0])
            except ValueError as exc:
                raise ValueError(f"{path}:{ln}: element id {parts[0]!r} is not an integer") from exc
            if elem in covers:
                raise ValueError(f"{path}:{ln}: duplicate element id {elem}")
            items = []
            for tok in parts[1:]:
                item, w = _parse_item_token(tok)
                items.append(item)
                if w is not None:
                    weights[item] = w
            covers[elem] = items
    return CoverageFunction(covers, weights, backend=backend)


def save_coverage(path, covers, weights=None) -> None:
    weights = weights or {}
    with open(path, "w", encoding="utf-8") as fh:
        for e in sorted(covers):
            toks = []
            for item in sorted(set(covers[e]), key=str):
                w = weights.get(item)
                toks.append(f"{item}:{w!r}" if w is not None else str(item))
            fh.write(" ".join([str(int(e))] + toks) + "\n")
