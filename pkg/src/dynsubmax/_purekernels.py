"""Pure-Python coverage kernels.

Reference implementation of the hot loops; ``_kernels.pyx`` mirrors these
routines operation for operation so both backends produce bit-identical
floats for the same inputs. Keep the two in sync: the accumulation order
(elements in ascending row order, items in storage order) is part of the
contract.
"""

from __future__ import annotations


class PyCoverageKernel:
    """Set-union weight computations over a CSR layout of element covers."""

    backend = "pure"

    def __init__(self, indptr, items, item_weights):
        self.indptr = [int(x) for x in indptr]
        self.items = [int(x) for x in items]
        self.item_w = [float(x) for x in item_weights]
        self.n_items = len(self.item_w)
        self._mark = [0] * self.n_items
        self._stamp = 0

    def union_weight(self, rows):
        """Total weight of the item union covered by ``rows`` (ascending)."""
        indptr, items, w, mark = self.indptr, self.items, self.item_w, self._mark
        self._stamp += 1
        stamp = self._stamp
        acc = 0.0
        for r in rows:
            for idx in range(indptr[r], indptr[r + 1]):
                u = items[idx]
                if mark[u] != stamp:
                    mark[u] = stamp
                    acc += w[u]
        return acc

    def marginals(self, base_rows, base_value, cand_rows, out):
        """Marginal gain of each candidate against a fixed base set.

        ``base_rows`` must be sorted ascending; each candidate's value is
        computed as a full canonical union evaluation (base with the
        candidate merged in at its sorted position) minus ``base_value``.
        Candidates already in the base get 0.0 and are not charged.
        Returns the number of charged (actually evaluated) candidates.
        """
        indptr, items, w, mark = self.indptr, self.items, self.item_w, self._mark
        base = list(base_rows)
        nb = len(base)
        charged = 0
        for ci, r in enumerate(cand_rows):
            r = int(r)
            self._stamp += 1
            stamp = self._stamp
            acc = 0.0
            i = 0
            while i < nb and base[i] < r:
                b = base[i]
                for idx in range(indptr[b], indptr[b + 1]):
                    u = items[idx]
                    if mark[u] != stamp:
                        mark[u] = stamp
                        acc += w[u]
                i += 1
            if i < nb and base[i] == r:
                out[ci] = 0.0
                continue
            for idx in range(indptr[r], indptr[r + 1]):
                u = items[idx]
                if mark[u] != stamp:
                    mark[u] = stamp
                    acc += w[u]
            while i < nb:
                b = base[i]
                for idx in range(indptr[b], indptr[b + 1]):
                    u = items[idx]
                    if mark[u] != stamp:
                        mark[u] = stamp
                        acc += w[u]
                i += 1
            gain = acc - base_value
            out[ci] = gain if gain > 0.0 else 0.0
            charged += 1
        return charged

    def tail_hit_trials(self, bucket_rows, base_rows, thr_eff, draws, m_prime):
        """Count trials whose last sampled element clears ``thr_eff``.

        Each row of ``draws`` holds the partial Fisher-Yates swap targets
        for one trial over ``bucket_rows``: positions 0..m'-2 become the
        sampled prefix S', position m'-1 is the tail element s. The hit
        test is ``weight of s's items uncovered by base ∪ S' >= thr_eff``.
        """
        indptr, items, w, mark = self.indptr, self.items, self.item_w, self._mark
        self._stamp += 1
        base_stamp = self._stamp
        for r in base_rows:
            for idx in range(indptr[r], indptr[r + 1]):
                mark[items[idx]] = base_stamp
        perm = [int(x) for x in bucket_rows]
        draws_list = draws.tolist()
        hits = 0
        undo = [0] * (2 * m_prime)
        for trial in draws_list:
            self._stamp += 1
            stamp = self._stamp
            for j in range(m_prime):
                d = trial[j]
                undo[2 * j] = perm[j]
                undo[2 * j + 1] = perm[d]
                perm[j], perm[d] = perm[d], perm[j]
            for j in range(m_prime - 1):
                rr = perm[j]
                for idx in range(indptr[rr], indptr[rr + 1]):
                    u = items[idx]
                    if mark[u] != base_stamp:
                        mark[u] = stamp
            s = perm[m_prime - 1]
            acc = 0.0
            for idx in range(indptr[s], indptr[s + 1]):
                u = items[idx]
                if mark[u] != base_stamp and mark[u] != stamp:
                    acc += w[u]
            if acc >= thr_eff:
                hits += 1
            for j in range(m_prime - 1, -1, -1):
                d = trial[j]
                perm[d] = undo[2 * j + 1]
                perm[j] = undo[2 * j]
        return hits
