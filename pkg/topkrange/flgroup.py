"""The (f, l)-group: f disjoint sets of at most l values each.

Given a run of consecutive sets ``first..last`` and a count *k*, a query
returns a value whose rank in the union of those sets is between *k* and
``8 k``, or -inf when the union is too small for the sketches to vouch for
any value.  Queries read one packed block of sketches and walk one index
path.  Values are 64-bit words compared as unsigned integers; the small-k
tree stores order-preserving encodings of scores.  Sets are numbered
from 0.

Layout on disk:

- a header page with the parameters and the ids of everything below;
- ``index``, an order-statistic tree over all values (value -> set), which
  turns global ranks into values and back;
- ``sets``, an order-statistic tree keyed by ``(set, value)`` with a
  subtree maximum on the value, which gives local ranks and range maxima;
- a packed :class:`~topkrange.sketch.CompressedSketchSet`;
- a packed :class:`CompressedPrefixSet` holding the global ranks of the
  largest few values of every set, so that pivots of small local rank can
  be replaced without touching the indexes.
"""

import collections
import logging
import math

import numpy as np

from topkrange.disk import NEG_INF_WORD
from topkrange.errors import (AuditReport, BitBudgetError, CapacityError,
                              DuplicateKeyError, MissingKeyError, UsageError)
from topkrange.ostree import OSTree
from topkrange.sketch import (C3, NEG_INF, BitReader, BitWriter, CompressedSketchSet,
                              ceil_lg, fresh_rank, in_window, pivot_count,
                              sketch_union_select)

__all__ = ['FlGroup', 'CompressedPrefixSet', 'prefix_length', 'C2']

LOG = logging.getLogger(__name__)

C2 = C3

_TOP = (1 << 64) - 1


def prefix_length(f, l, B):
    """Number of largest values per set kept in the prefix block."""
    fl = f * l
    if fl < 2:
        return 1
    return max(1, min(l, int(math.ceil(math.sqrt(B) * math.log(fl) / math.log(B)))))


def blocks_needed(bits, B, word_bits):
    return max(1, -(-bits // (B * word_bits)))


class CompressedPrefixSet(object):
    """For every set, the ``(global rank, local rank)`` pairs of its *p*
    largest values, local ranks running 1, 2, ...

    Layout, most significant bit first, set by set: the entry count in
    ``ceil(lg(p + 1))`` bits, then *p* slots of two ``ceil(lg(f l))``-bit
    fields holding ``rank - 1``.  Unused slots are zero.
    """

    def __init__(self, f, l, p, entries=None):
        self.f = f
        self.l = l
        self.p = p
        self.entries = [list(e) for e in entries] if entries is not None else [[] for _ in range(f)]

    @classmethod
    def total_bits(cls, f, l, p):
        rb = CompressedSketchSet.rank_bits(f, l)
        return f * (ceil_lg(p + 1) + 2 * p * rb)

    @classmethod
    def check_budget(cls, f, l, p, B, word_bits, blocks=1):
        bits = cls.total_bits(f, l, p)
        if bits > blocks * B * word_bits:
            raise BitBudgetError("prefix set for f=%d, l=%d, p=%d needs %d bits, %d block(s) hold %d"
                                 % (f, l, p, bits, blocks, blocks * B * word_bits))
        return bits

    def pack(self, word_bits):
        rb = CompressedSketchSet.rank_bits(self.f, self.l)
        cb = ceil_lg(self.p + 1)
        out = BitWriter()
        for pairs in self.entries:
            out.write(len(pairs), cb)
            for j in range(self.p):
                g, r = pairs[j] if j < len(pairs) else (1, 1)
                out.write(g - 1, rb)
                out.write(r - 1, rb)
        return out.words(word_bits)

    @classmethod
    def unpack(cls, words, f, l, p, word_bits):
        rb = CompressedSketchSet.rank_bits(f, l)
        cb = ceil_lg(p + 1)
        src = BitReader(words, word_bits)
        entries = []
        for _ in range(f):
            count = src.read(cb)
            pairs = []
            for j in range(p):
                g, r = src.read(rb) + 1, src.read(rb) + 1
                if j < count:
                    pairs.append((g, r))
            entries.append(pairs)
        return cls(f, l, p, entries)

    def insert(self, i, g, r):
        """Account for a value of global rank *g* entering set *i* at local
        rank *r*; the smallest entry falls off a full prefix."""
        _shift_up(self.entries, i, g, r)
        if r <= self.p:
            self.entries[i].insert(r - 1, (g, r))
            del self.entries[i][self.p:]

    def delete(self, i, g, r):
        """Account for the value of global rank *g* and local rank *r*
        leaving set *i*.  Returns True if it was in the prefix, in which
        case the caller owes the set a replacement for its last slot."""
        pairs = self.entries[i]
        hit = r <= len(pairs)
        if hit:
            del pairs[r - 1]
        _shift_down(self.entries, i, g, r)
        return hit

    def __eq__(self, other):
        return (isinstance(other, CompressedPrefixSet) and
                (self.f, self.l, self.p, self.entries) ==
                (other.f, other.l, other.p, other.entries))

    def __ne__(self, other):
        return not self == other


def _shift_up(lists, i, g, r):
    for s, pairs in enumerate(lists):
        for j, (pg, pr) in enumerate(pairs):
            pairs[j] = (pg + 1 if pg >= g else pg,
                        pr + 1 if s == i and pr >= r else pr)


def _shift_down(lists, i, g, r):
    for s, pairs in enumerate(lists):
        for j, (pg, pr) in enumerate(pairs):
            if pg == g:
                # the departed value; left for the caller to replace
                pairs[j] = (0, 0)
                continue
            pairs[j] = (pg - 1 if pg > g else pg,
                        pr - 1 if s == i and pr > r else pr)


class FlGroup(object):
    """An (f, l)-group reopened from its header page.  Build new ones with
    :meth:`build`.

    *block_budget* is the number of blocks the packed sketch set and the
    packed prefix set may each take.  One block is the intended setting;
    the small-k tree raises it when its parameters leave no choice.
    """

    def __init__(self, pager, header):
        self.pager = pager
        self.disk = pager.disk
        self.header = header
        (self.f, self.l, self.p, self.block_budget, index_root, sets_root,
         self.sketch_bid, self.sketch_blocks,
         self.prefix_bid, self.prefix_blocks) = pager.load(header)
        self.index = OSTree(pager, index_root, 1, 1)
        self.sets = OSTree(pager, sets_root, 2, 0, agg_field=1)
        self.repairs = collections.Counter()

    @classmethod
    def layout(cls, f, l, B, word_bits, block_budget=1):
        """Check that an (f, l)-group fits and return ``(p, sketch blocks,
        prefix blocks)``.  Raises :class:`~topkrange.errors.BitBudgetError`
        otherwise."""
        if f < 1 or l < 1:
            raise UsageError("an (f, l)-group needs f, l >= 1, got f=%r l=%r" % (f, l))
        p = prefix_length(f, l, B)
        sbits = CompressedSketchSet.check_budget(f, l, B, word_bits, block_budget)
        pbits = CompressedPrefixSet.check_budget(f, l, p, B, word_bits, block_budget)
        return p, blocks_needed(sbits, B, word_bits), blocks_needed(pbits, B, word_bits)

    @classmethod
    def build(cls, pager, sets, l, block_budget=1):
        """Build a group over *sets*, a sequence of f iterables of words."""
        sets = [sorted(s, reverse=True) for s in sets]
        f = len(sets)
        disk = pager.disk
        p, sblocks, pblocks = cls.layout(f, l, disk.B, disk.word_bits, block_budget)
        for i, values in enumerate(sets):
            if len(values) > l:
                raise CapacityError("set %d holds %d values, more than l=%d" % (i, len(values), l))
        owner = {}
        for i, values in enumerate(sets):
            for v in values:
                if v in owner:
                    raise DuplicateKeyError(v)
                owner[v] = i
        ordered = sorted(owner, reverse=True)
        grank = dict((v, n + 1) for n, v in enumerate(ordered))

        sketch = CompressedSketchSet(f, l, [len(s) for s in sets])
        prefix = CompressedPrefixSet(f, l, p)
        for i, values in enumerate(sets):
            n = len(values)
            for j in range(1, pivot_count(n) + 1):
                r = fresh_rank(j, n)
                sketch.pivots[i].append((grank[values[r - 1]], r))
            prefix.entries[i] = [(grank[values[r - 1]], r) for r in range(1, min(p, n) + 1)]

        index = OSTree.bulk_load(pager, [((v,), (owner[v],)) for v in reversed(ordered)], 1, 1)
        keyed = sorted((i, v) for v, i in owner.items())
        members = OSTree.bulk_load(pager, [(key, ()) for key in keyed], 2, 0, agg_field=1)
        sketch_bid = disk.alloc_run(sblocks)
        prefix_bid = disk.alloc_run(pblocks)
        header = pager.new([f, l, p, block_budget, index.root, members.root,
                            sketch_bid, sblocks, prefix_bid, pblocks])
        group = cls(pager, header)
        group._save(sketch, prefix)
        LOG.debug("built (%d, %d)-group #%d over %d values", f, l, header, len(ordered))
        return group

    def destroy(self):
        self.index.destroy()
        self.sets.destroy()
        self.disk.free(self.sketch_bid)
        self.disk.free(self.prefix_bid)
        self.pager.release(self.header)

    # -- packed blocks -------------------------------------------------------

    def _read_words(self, bid, count):
        return [int(w) for n in range(count) for w in self.disk.read(bid + n)]

    def _write_words(self, bid, count, words):
        buf = np.zeros(count * self.disk.B, dtype=np.uint64)
        if words:
            buf[:len(words)] = np.array(words, dtype=np.uint64)
        B = self.disk.B
        for n in range(count):
            self.disk.write(bid + n, buf[n * B:(n + 1) * B])

    def load_sketches(self):
        words = self._read_words(self.sketch_bid, self.sketch_blocks)
        return CompressedSketchSet.unpack(words, self.f, self.l, self.disk.word_bits)

    def load_prefix(self):
        words = self._read_words(self.prefix_bid, self.prefix_blocks)
        return CompressedPrefixSet.unpack(words, self.f, self.l, self.p, self.disk.word_bits)

    def _save(self, sketch, prefix):
        self._write_words(self.sketch_bid, self.sketch_blocks, sketch.pack(self.disk.word_bits))
        self._write_words(self.prefix_bid, self.prefix_blocks, prefix.pack(self.disk.word_bits))

    # -- ranks ---------------------------------------------------------------

    def __len__(self):
        return len(self.index)

    def sizes(self):
        return self.load_sketches().sizes

    def rank(self, v):
        """Number of values in the group that are at least *v*."""
        return len(self.index) - self.index.rank((v,))

    def select(self, r):
        """The value of global rank *r*, 1 being the largest."""
        return self.index.select_desc(r)[0][0]

    def set_of(self, v):
        """Index of the set holding *v*, or None."""
        got = self.index.get((v,))
        return None if got is None else got[0]

    def local_rank(self, i, v):
        """Number of values of set *i* that are at least *v*."""
        return self.sets.rank((i + 1, 0)) - self.sets.rank((i, v))

    def element_at(self, i, r):
        """The value of local rank *r* in set *i*."""
        return self.sets.select(self.sets.rank((i + 1, 0)) - r)[0][1]

    def values(self, i):
        """Values of set *i*, largest first."""
        return [key[1] for key, _ in reversed(list(self.sets.iter_range((i, 0), (i, _TOP))))]

    def top(self, t):
        """The *t* largest values of the group, largest first."""
        t = min(t, len(self.index))
        if t <= 0:
            return []
        lowest = self.index.select_desc(t)[0]
        return [key[0] for key, _ in reversed(list(self.index.iter_range(lowest)))]

    def _check_set(self, i):
        if not 0 <= i < self.f:
            raise UsageError("set %r outside [0, %d)" % (i, self.f))

    # -- queries -------------------------------------------------------------

    def query(self, first, last, k):
        """Return a value whose rank in the union of sets ``first..last``
        lies in ``[k, 8 k)``, or the encoding of -inf."""
        self._check_set(first)
        self._check_set(last)
        if first > last:
            raise UsageError("empty set range [%d, %d]" % (first, last))
        sketch = self.load_sketches()
        total = sum(sketch.sizes[first:last + 1])
        if not 1 <= k <= total:
            raise UsageError("k=%r outside [1, %d]" % (k, total))
        x = sketch_union_select(sketch.sketches(first, last), k)
        if x == NEG_INF:
            return NEG_INF_WORD
        return self.select(-x)

    def max_in_range(self, first, last):
        """Largest value of sets ``first..last``, or None if they are empty."""
        return self.sets.max_agg((first, 0), (last, _TOP))

    def min_in_range(self, first, last):
        """Smallest value of sets ``first..last``, or None if they are empty.
        Walks one index path per nonempty set."""
        sizes = self.sizes()
        lowest = [self.element_at(i, sizes[i]) for i in range(first, last + 1) if sizes[i]]
        return min(lowest) if lowest else None

    def prefix_lookup(self, i, r):
        """Global rank of the value of local rank *r* in set *i*, read from
        the prefix block alone; None when set *i* is smaller than *r*."""
        self._check_set(i)
        if not 1 <= r <= self.p:
            raise UsageError("local rank %r outside the prefix [1, %d]" % (r, self.p))
        pairs = self.load_prefix().entries[i]
        return pairs[r - 1][0] if r <= len(pairs) else None

    # -- updates -------------------------------------------------------------

    def insert(self, i, v):
        self._check_set(i)
        sketch = self.load_sketches()
        if sketch.sizes[i] >= self.l:
            raise CapacityError("set %d of group #%d is full (l=%d)" % (i, self.header, self.l))
        self.index.insert((v,), (i,))
        self.sets.insert((i, v))
        g = self.rank(v)
        r = self.local_rank(i, v)
        prefix = self.load_prefix()
        _shift_up(sketch.pivots, i, g, r)
        prefix.insert(i, g, r)
        sketch.sizes[i] += 1
        size = sketch.sizes[i]
        if size & (size - 1) == 0:
            # the sketch expands: the smallest value becomes the new pivot
            low = self.element_at(i, size)
            sketch.pivots[i].append((self.rank(low), size))
        self._repair(sketch, prefix, i)
        self._save(sketch, prefix)

    def delete(self, i, v):
        self._check_set(i)
        if self.set_of(v) != i:
            raise MissingKeyError(v)
        sketch = self.load_sketches()
        prefix = self.load_prefix()
        g = self.rank(v)
        r = self.local_rank(i, v)
        self.index.delete((v,))
        self.sets.delete((i, v))
        _shift_down(sketch.pivots, i, g, r)
        old = sketch.sizes[i]
        sketch.sizes[i] -= 1
        size = sketch.sizes[i]
        if prefix.delete(i, g, r) and size >= self.p:
            low = self.element_at(i, self.p)
            prefix.entries[i].append((self.rank(low), self.p))
        if old & (old - 1) == 0:
            # the sketch shrinks
            sketch.pivots[i].pop()
        self._repair(sketch, prefix, i)
        self._save(sketch, prefix)

    def _repair(self, sketch, prefix, i):
        """Replace every pivot of set *i* that left its window."""
        size = sketch.sizes[i]
        pivots = sketch.pivots[i]
        for j in range(1, len(pivots) + 1):
            if in_window(j, pivots[j - 1][1]):
                continue
            r = fresh_rank(j, size)
            if (1 << j) < self.p:
                g = prefix.entries[i][r - 1][0]
                self.repairs['prefix'] += 1
            else:
                g = self.rank(self.element_at(i, r))
                self.repairs['index'] += 1
            pivots[j - 1] = (g, r)

    # -- audit ---------------------------------------------------------------

    def audit(self):
        """Recompute every rank from the trees and compare with the packed
        blocks.  Nothing is charged."""
        with self.disk.uncharged():
            try:
                self._audit()
            except AssertionError as e:
                return AuditReport.failed(str(e))
        return AuditReport.passed()

    def _audit(self):
        for tree in (self.index, self.sets):
            report = tree.audit()
            assert report, report.violation
        members = [key for key, _ in self.sets.items()]
        owner = dict((key[0], val[0]) for key, val in self.index.items())
        assert len(owner) == len(members), "index holds %d values, sets %d" % (
            len(owner), len(members))
        for i, v in members:
            assert owner.get(v) == i, "value %r indexed under the wrong set" % v
        grank = dict((v, n + 1) for n, v in enumerate(sorted(owner, reverse=True)))
        sketch = self.load_sketches()
        prefix = self.load_prefix()
        for i in range(self.f):
            values = sorted((v for s, v in members if s == i), reverse=True)
            n = len(values)
            assert sketch.sizes[i] == n, "set %d size %d, packed %d" % (i, n, sketch.sizes[i])
            assert n <= self.l, "set %d over capacity" % i
            pivots = sketch.pivots[i]
            assert len(pivots) == pivot_count(n), "set %d has %d pivots for %d values" % (
                i, len(pivots), n)
            for j, (g, r) in enumerate(pivots, 1):
                assert in_window(j, r), "set %d pivot %d at local rank %d" % (i, j, r)
                assert grank[values[r - 1]] == g, "set %d pivot %d global rank %d != %d" % (
                    i, j, g, grank[values[r - 1]])
            expect = [(grank[values[r - 1]], r) for r in range(1, min(self.p, n) + 1)]
            assert prefix.entries[i] == expect, "set %d prefix is stale" % i
