"""Approximate range k-selection for k up to *l*.

The base tree is a weight-balanced B-tree on x with branching parameter
``f = sqrt(B lg N)`` and leaf capacity ``b = f l B``.  For a node *u*, let
``G(u)`` be the ``8 l`` highest scores below *u* (all of them if there
are fewer).  Every internal node keeps an :class:`~topkrange.flgroup.FlGroup`
whose sets are the ``G`` sets of its children; every leaf keeps its
elements in two order-statistic trees, one by x and one by score.

A selection splits the query into the leaves it cuts and runs of fully
covered children.  Runs with enough scores become sources of
:func:`~topkrange.aurs.aurs_select`; everything else is small and is
gathered exactly.  The answer is the larger of the two candidates, so at
least *k* elements in the range score at least as high as it does.

Scores are stored as order-preserving words (see
:func:`~topkrange.disk.encode_real`).
"""

import bisect
import collections
import logging
import math
import warnings

from topkrange.aurs import RankedSource, aurs_select
from topkrange.disk import NEG_INF_WORD, decode_real, encode_real
from topkrange.errors import (AuditError, AuditReport, DuplicateKeyError,
                              MissingKeyError, RangeError, RegimeWarning,
                              UsageError)
from topkrange.flgroup import C2, CompressedPrefixSet, FlGroup, prefix_length
from topkrange.ostree import OSTree
from topkrange.pager import Pager
from topkrange.pst import Point
from topkrange.sketch import CompressedSketchSet
from topkrange.wbb import POS_INF, LeafRange, WbbParams, WbbTree

__all__ = ['SmallKTree', 'GroupSource', 'MIN_N']

LOG = logging.getLogger(__name__)

MIN_N = 16


class GroupSource(RankedSource):
    """Sets ``first..last`` of an (f, l)-group, seen as one set."""

    c = C2

    def __init__(self, group, first, last, size, stats=None):
        self.group = group
        self.first = first
        self.last = last
        self.size = size
        self.stats = stats if stats is not None else collections.Counter()

    def __len__(self):
        return self.size

    def max_element(self):
        return self.group.max_in_range(self.first, self.last)

    def rank_select(self, rho):
        k = min(self.size, max(1, int(math.ceil(rho))))
        got = self.group.query(self.first, self.last, k)
        if got == NEG_INF_WORD:
            # the sketches vouch for nothing, so the union holds fewer than
            # 2k scores and its minimum ranks in [k, 2k)
            self.stats['sketch-floor'] += 1
            got = self.group.min_in_range(self.first, self.last)
        return got


class _LeafView(object):
    """Gives a leaf's score tree the rank interface of a group."""

    def __init__(self, tree):
        self.tree = tree

    def __len__(self):
        return len(self.tree)

    def rank(self, v):
        return len(self.tree) - self.tree.rank((v,))

    def select(self, r):
        return self.tree.select_desc(r)[0][0]

    def top(self, t):
        t = min(t, len(self.tree))
        if t <= 0:
            return []
        lowest = self.tree.select_desc(t)[0]
        return [key[0] for key, _ in reversed(list(self.tree.iter_range(lowest)))]


class SmallKTree(object):
    """Approximate range k-selection over points ``(x, score)`` with
    distinct coordinates and distinct scores, for ``1 <= k <= l``.

    *branching* and *leaf_capacity* override the base tree parameters,
    which are otherwise derived from N at every rebuild.
    """

    def __init__(self, disk, l, points=(), branching=None, leaf_capacity=None):
        if l < 1:
            raise UsageError("l must be positive, got %r" % l)
        self.disk = disk
        self.pager = Pager(disk)
        self.B = disk.B
        self.l = l
        self.branching = branching
        self.leaf_capacity = leaf_capacity
        self.scores = OSTree.create(self.pager, key_width=1, value_width=1)
        self.base = None
        self.n = 0
        self.N = MIN_N
        self.updates = 0
        self.block_budget = 1
        self.leaf_reads = 0
        self.fallbacks = collections.Counter()
        self.rebuilds = 0
        self.max_ratio = 0.0
        self.last_select = {}
        self._rebuild_due = False
        self.build(points)

    def __len__(self):
        return self.n

    @property
    def c2l(self):
        return C2 * self.l

    # -- building ------------------------------------------------------------

    def build(self, points=(), l=None):
        """Replace the content with *points*, reset N to ``2 n`` and
        rebuild everything.  *l* changes the largest supported k."""
        if l is not None:
            self.l = l
        pts = sorted((float(x), float(y)) for x, y in points)
        for a, b in zip(pts, pts[1:]):
            if a[0] == b[0]:
                raise DuplicateKeyError(a[0])
        by_score = sorted(pts, key=lambda p: p[1])
        for a, b in zip(by_score, by_score[1:]):
            if a[1] == b[1]:
                raise DuplicateKeyError(a[1])
        if self.base is not None:
            self._ground()
        self.n = len(pts)
        self.N = max(2 * self.n, MIN_N)
        self.updates = 0
        self._rebuild_due = False
        params = self._params()
        self.block_budget = self._group_blocks(params)
        root = self.base.root if self.base is not None else None
        self.base = WbbTree(self.pager, params, payload_words=2, leaf_keys=False, root=root)
        self.base.build([x for x, _ in pts])
        self.scores.destroy()
        self.scores = OSTree.bulk_load(
            self.pager, [((encode_real(y),), (encode_real(x),)) for x, y in by_score], 1, 1)
        self._populate(self.base.root, pts, [x for x, _ in pts])
        LOG.debug("built small-k tree over %d points: N=%d f=%d b=%d l=%d",
                  self.n, self.N, params.branching, params.leaf_capacity, self.l)

    def _params(self):
        f = self.branching
        if f is None:
            f = max(4, int(round(math.sqrt(self.B * math.log(self.N, 2)))))
        b = self.leaf_capacity
        if b is None:
            b = f * self.l * self.B
        return WbbParams(f, b)

    def _group_blocks(self, params):
        """Blocks each packed set of a node's group may take.  More than
        one means the parameters are outside the intended regime."""
        f = 4 * params.branching + 4
        l = self.c2l
        capacity = self.B * self.disk.word_bits
        p = prefix_length(f, l, self.B)
        bits = max(CompressedSketchSet.total_bits(f, l),
                   CompressedPrefixSet.total_bits(f, l, p))
        blocks = max(1, -(-bits // capacity))
        if blocks > 1:
            msg = ("packed sketches for f=%d, l=%d need %d blocks of %d words; "
                   "queries will read them all" % (f, l, blocks, self.B))
            warnings.warn(msg, RegimeWarning, stacklevel=4)
            LOG.warning(msg)
        return blocks

    def _ground(self):
        for node in list(self.base.walk()):
            self._drop_payload(node)

    def _drop_payload(self, node):
        if not node.payload[0]:
            return
        if node.is_leaf:
            OSTree(self.pager, node.payload[0], 1, 1).destroy()
            OSTree(self.pager, node.payload[1], 1, 1).destroy()
        else:
            FlGroup(self.pager, node.payload[0]).destroy()
        node.payload = [0, 0]

    def _populate(self, pid, pts, xs):
        """Fill the secondary structures below *pid*, whose slab holds the
        x-sorted *pts*; returns the G set of the node."""
        node = self.base.load(pid)
        if node.is_leaf:
            return self._fill_leaf(node, [((encode_real(x),), (encode_real(y),)) for x, y in pts])
        gsets = []
        for i, child in enumerate(node.children):
            lo, hi = node.child_range(i)
            a = bisect.bisect_left(xs, lo)
            b = len(xs) if hi == POS_INF else bisect.bisect_left(xs, hi)
            gsets.append(self._populate(child, pts[a:b], xs[a:b]))
        return self._fill_internal(node, gsets)

    def _fill_leaf(self, node, items):
        xs = OSTree.bulk_load(self.pager, items, 1, 1)
        swapped = sorted((v, k) for k, v in items)
        sc = OSTree.bulk_load(self.pager, swapped, 1, 1)
        self.base.set_payload(node, [xs.root, sc.root])
        return [k[0] for k, _ in reversed(swapped[-self.c2l:])]

    def _fill_internal(self, node, gsets=None):
        if gsets is None:
            gsets = [self._gset(self.base.load(c)) for c in node.children]
        group = FlGroup.build(self.pager, gsets, self.c2l, self.block_budget)
        self.base.set_payload(node, [group.header, 0])
        return sorted((v for s in gsets for v in s), reverse=True)[:self.c2l]

    # -- node views ----------------------------------------------------------

    def _leaf_trees(self, node):
        return (OSTree(self.pager, node.payload[0], 1, 1),
                OSTree(self.pager, node.payload[1], 1, 1))

    def _group(self, node):
        return FlGroup(self.pager, node.payload[0])

    def _view(self, node):
        """Rank interface over a superset of the node's G set that agrees
        with its subtree on the top ``8 l`` ranks."""
        if node.is_leaf:
            return _LeafView(self._leaf_trees(node)[1])
        return self._group(node)

    def _gset(self, node):
        return self._view(node).top(self.c2l)

    # -- updates -------------------------------------------------------------

    def insert(self, x, y):
        x, y = float(x), float(y)
        ex, ey = encode_real(x), encode_real(y)
        with self.disk.budget.operation('insert'):
            if self.scores.get((ey,)) is not None:
                raise DuplicateKeyError(y)
            path = self.base.locate_leaf(x)
            xs, sc = self._leaf_trees(path[-1])
            xs.insert((ex,), (ey,))
            sc.insert((ey,), (ex,))
            self.scores.insert((ey,), (ex,))
            self.n += 1
            self.updates += 1
            self._lift(path, ey)
            if self.base.insert_key(x, path) is not None:
                self._rebalance(path)
        self._maybe_rebuild()

    def _lift(self, path, s):
        """Bottom-up along *path*: wherever *s* enters a child's G set, the
        parent group swaps out that set's lowest score for it."""
        c2l = self.c2l
        for depth in range(len(path) - 1, 0, -1):
            child, parent = path[depth], path[depth - 1]
            view = self._view(child)
            if view.rank(s) > c2l:
                break
            group = self._group(parent)
            i = parent.children.index(child.pid)
            size = group.sizes()[i]
            if size >= c2l:
                group.delete(i, group.element_at(i, size))
            group.insert(i, s)

    def delete(self, x):
        """Remove the point at *x* and return its score."""
        x = float(x)
        ex = encode_real(x)
        with self.disk.budget.operation('delete'):
            path = self.base.locate_leaf(x)
            xs, sc = self._leaf_trees(path[-1])
            value = xs.get((ex,))
            if value is None:
                raise MissingKeyError(x)
            ey = value[0]
            was_in = _LeafView(sc).rank(ey) <= self.c2l
            xs.delete((ex,))
            sc.delete((ey,))
            self.scores.delete((ey,))
            self.n -= 1
            self.updates += 1
            self._drop(path, ey, was_in)
        self._maybe_rebuild()
        return decode_real(ey)

    def _drop(self, path, s, was_in):
        """Bottom-up along *path*: remove *s* from the groups holding it and
        backfill each set with the next score of its child."""
        c2l = self.c2l
        for depth in range(len(path) - 1, 0, -1):
            if not was_in:
                break
            child, parent = path[depth], path[depth - 1]
            group = self._group(parent)
            i = parent.children.index(child.pid)
            was_in = group.rank(s) <= c2l
            group.delete(i, s)
            view = self._view(child)
            if len(view) >= c2l:
                group.insert(i, view.select(c2l))

    def _rebalance(self, path):
        """Split every overweight node of *path*, lowest first."""
        params = self.base.params
        for depth in range(len(path) - 1, -1, -1):
            node = path[depth]
            if node.weight <= params.max_weight(node.level):
                continue
            if not self.handle_split(path, depth):
                return

    def handle_split(self, path, depth):
        """Split ``path[depth]`` in the base tree and rebuild the secondary
        structures of both halves and of the parent.  Returns False when a
        leaf has too few live elements to split; the tree is then rebuilt
        after the current update."""
        node = path[depth]
        if node.is_leaf:
            xs, _ = self._leaf_trees(node)
            items = xs.items()
            if len(items) < 2:
                LOG.debug("leaf #%d over weight with %d live elements", node.pid, len(items))
                self._rebuild_due = True
                return False
            split_key = decode_real(items[len(items) // 2][0][0])
            self._drop_payload(node)
            left, right = self.base.split(path, depth, split_key)
            cut = len(items) // 2
            self._fill_leaf(left, items[:cut])
            self._fill_leaf(right, items[cut:])
        else:
            self._drop_payload(node)
            left, right = self.base.split(path, depth)
            self._fill_internal(left)
            self._fill_internal(right)
        if depth == 0:
            parent = path[0]
        else:
            parent = path[depth - 1]
            self._drop_payload(parent)
        self._fill_internal(parent)
        LOG.debug("split #%d at level %d", node.pid, node.level)
        return True

    def _maybe_rebuild(self):
        n, N = self.n, self.N
        if self._rebuild_due or n > N or (4 * n < N and N > MIN_N) or self.updates > N:
            LOG.debug("global rebuild: n=%d N=%d updates=%d", n, N, self.updates)
            self.rebuilds += 1
            self.build(self.points())

    # -- queries -------------------------------------------------------------

    def select_approx(self, x1, x2, k):
        """Return a point with x in ``[x1, x2]`` such that at least *k*
        points of the range, and not many more, score at least as high."""
        x1, x2 = float(x1), float(x2)
        if x1 > x2:
            raise RangeError("empty query range [%r, %r]" % (x1, x2))
        if not 1 <= k <= self.l:
            raise UsageError("k=%r outside [1, %d]" % (k, self.l))
        with self.disk.budget.operation('select'):
            pool = []
            sources = []
            lo, hi = (encode_real(x1),), (encode_real(x2),)
            for piece in self.base.canonical_ranges(x1, x2):
                if isinstance(piece, LeafRange):
                    before = self.disk.stats_snapshot()
                    xs, _ = self._leaf_trees(piece.node)
                    pool.extend(v[0] for _, v in xs.iter_range(lo, hi))
                    self.leaf_reads += (self.disk.stats_snapshot() - before).reads
                    continue
                group = self._group(piece.node)
                size = sum(group.sizes()[piece.first:piece.last + 1])
                if size >= C2 * k:
                    sources.append(GroupSource(group, piece.first, piece.last, size,
                                               self.fallbacks))
                    continue
                # every G set of the run is its whole subtree
                self.fallbacks['small-source'] += 1
                for i in range(piece.first, piece.last + 1):
                    pool.extend(group.values(i))
            best = aurs_select(sources, k) if sources else None
            if len(pool) >= k:
                pool.sort(reverse=True)
                best = pool[k - 1] if best is None else max(best, pool[k - 1])
            if best is None:
                raise UsageError("fewer than k=%d points in [%r, %r]" % (k, x1, x2))
            ex = self.scores.get((best,))[0]
        result = Point(decode_real(ex), decode_real(best))
        self.last_select = dict(sources=len(sources), pool=len(pool))
        if _g_audit_queries:
            self._audit_select(x1, x2, k, result)
        return result

    def _audit_select(self, x1, x2, k, result):
        with self.disk.uncharged():
            rank = sum(1 for x, y in self.points() if x1 <= x <= x2 and y >= result.y)
        ratio = rank / float(k)
        self.last_select['rank'] = rank
        self.max_ratio = max(self.max_ratio, ratio)
        if rank < k:
            raise AuditError("selection in [%r, %r] for k=%d returned rank %d"
                             % (x1, x2, k, rank))

    def points(self):
        return [Point(decode_real(v[0]), decode_real(k[0])) for k, v in self.scores.items()]

    # -- audit ---------------------------------------------------------------

    def audit_invariants(self):
        """Check the base tree, the leaf stores, every G set against its
        subtree and every group.  Nothing is charged."""
        with self.disk.uncharged():
            try:
                self._audit()
            except AssertionError as e:
                return AuditReport.failed(str(e))
        return AuditReport.passed()

    def _audit(self):
        report = self.base.audit()
        assert report, "base tree: %s" % report.violation
        pts = sorted(self.points())
        assert len(pts) == self.n, "live count %d != %d" % (self.n, len(pts))
        assert self.n <= self.N and (4 * self.n >= self.N or self.N == MIN_N), \
            "N=%d outside [n, 4n] for n=%d" % (self.N, self.n)
        xs = [p.x for p in pts]
        c2l = self.c2l
        seen = 0
        for node in self.base.walk():
            a = bisect.bisect_left(xs, node.lo)
            b = len(xs) if node.hi == POS_INF else bisect.bisect_left(xs, node.hi)
            mine = pts[a:b]
            if node.is_leaf:
                xt, st = self._leaf_trees(node)
                stored = [(decode_real(k[0]), decode_real(v[0])) for k, v in xt.items()]
                assert stored == [tuple(p) for p in mine], "leaf #%d store is stale" % node.pid
                assert len(st) == len(mine), "leaf #%d score tree is stale" % node.pid
                seen += len(mine)
                continue
            group = self._group(node)
            report = group.audit()
            assert report, "group of #%d: %s" % (node.pid, report.violation)
            assert group.f == len(node.children), "group of #%d has %d sets for %d children" % (
                node.pid, group.f, len(node.children))
            for i in range(len(node.children)):
                lo, hi = node.child_range(i)
                a = bisect.bisect_left(xs, lo)
                b = len(xs) if hi == POS_INF else bisect.bisect_left(xs, hi)
                expect = sorted((encode_real(p.y) for p in pts[a:b]), reverse=True)[:c2l]
                assert group.values(i) == expect, "G set of child %d of #%d is stale" % (
                    i, node.pid)
        assert seen == self.n, "leaves hold %d points, expected %d" % (seen, self.n)


""" If true, every selection counts the points of its range that score at
least as high as its answer and raises
:class:`~topkrange.errors.AuditError` when there are fewer than k. """
_g_audit_queries = False
