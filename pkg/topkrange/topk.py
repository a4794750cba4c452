"""Dynamic top-k range reporting.

:class:`TopkRange` keeps the points in two structures at once: the
priority search tree of :mod:`topkrange.pst`, which answers directly when
k is large, and the small-k tree of :mod:`topkrange.smallk`.  For small k
the small-k tree finds a score *s* with at least k and O(k) points of the
range scoring ``>= s``; a 3-sided query with floor *s* then yields a short
candidate list, and the best k of it are the answer.

Both structures are rebuilt from scratch whenever the number of points
has doubled or halved since the last rebuild, which is also when the
threshold between the two query paths is recomputed.
"""

import collections
import logging

from topkrange.disk import Disk, encode_real
from topkrange.errors import (AuditError, AuditReport, DuplicateKeyError,
                              RangeError, UsageError)
from topkrange.pst import PrioritySearchTree
from topkrange.sketch import ceil_lg
from topkrange.smallk import SmallKTree

__all__ = ['TopkRange', 'FacadeConfig']

LOG = logging.getLogger(__name__)

NEG_INF = float('-inf')

_MIN_BUILT = 8


class FacadeConfig(object):
    """*k_threshold* is the smallest k answered by the big-k tree; None
    means ``B * ceil(lg n)``, recomputed at every rebuild.  The structures
    are rebuilt once the point count has grown or shrunk by
    *rebuild_factor* since the last rebuild."""

    def __init__(self, k_threshold=None, rebuild_factor=2):
        if k_threshold is not None and k_threshold < 2:
            raise UsageError("k_threshold must be at least 2, got %r" % k_threshold)
        if rebuild_factor <= 1:
            raise UsageError("rebuild_factor must exceed 1, got %r" % rebuild_factor)
        self.k_threshold = k_threshold
        self.rebuild_factor = rebuild_factor

    def __repr__(self):
        return "FacadeConfig(k_threshold=%r, rebuild_factor=%r)" % (
            self.k_threshold, self.rebuild_factor)


class TopkRange(object):
    """Top-k range reporting over points ``(x, score)`` with distinct
    coordinates and distinct scores.

    *branching* and *leaf_capacity* are handed to the small-k tree.
    """

    def __init__(self, disk=None, points=(), config=None, branching=None, leaf_capacity=None):
        self.disk = disk if disk is not None else Disk()
        self.config = config if config is not None else FacadeConfig()
        self.bigk = PrioritySearchTree(self.disk)
        self.smallk = SmallKTree(self.disk, 1, branching=branching, leaf_capacity=leaf_capacity)
        self.k_threshold = 2
        self.n_built = 0
        self.rebuilds = 0
        self.stats = collections.Counter()
        self.last_query = {}
        self.rebuild(points)

    def __len__(self):
        return len(self.bigk)

    def points(self):
        return self.bigk.points()

    def threshold_for(self, n):
        if self.config.k_threshold is not None:
            return self.config.k_threshold
        return max(2, self.disk.B * ceil_lg(max(n, 2)))

    def rebuild(self, points=None):
        """Rebuild both structures over *points*, by default the current
        ones."""
        pts = self.points() if points is None else list(points)
        self.k_threshold = self.threshold_for(len(pts))
        self.bigk.build(pts)
        self.smallk.build(pts, l=self.k_threshold - 1)
        self.n_built = len(pts)
        self.rebuilds += 1
        LOG.debug("global rebuild over %d points, k threshold %d", len(pts), self.k_threshold)

    def _maybe_rebuild(self):
        n = len(self)
        ref = max(self.n_built, _MIN_BUILT)
        factor = self.config.rebuild_factor
        if n >= factor * ref or factor * n <= self.n_built:
            self.rebuild()

    def insert(self, x, score):
        x, score = float(x), float(score)
        if self.bigk.lookup(x) is not None:
            raise DuplicateKeyError(x)
        if self.smallk.scores.get((encode_real(score),)) is not None:
            raise DuplicateKeyError(score)
        self.bigk.insert(x, score)
        self.smallk.insert(x, score)
        self._maybe_rebuild()

    def delete(self, x):
        """Remove the point at *x* and return its score."""
        score = self.bigk.delete(x)
        self.smallk.delete(x)
        self._maybe_rebuild()
        return score

    def count(self, x1, x2):
        """Number of points with x in ``[x1, x2]``."""
        index = self.bigk.index
        return index.rank((encode_real(x2) + 1,)) - index.rank((encode_real(x1),))

    def topk(self, x1, x2, k):
        """The min(k, |S ∩ [x1, x2]|) highest points with x in ``[x1, x2]``,
        highest first."""
        x1, x2 = float(x1), float(x2)
        if x1 > x2:
            raise RangeError("empty query range [%r, %r]" % (x1, x2))
        if k < 1:
            raise UsageError("k must be positive, got %r" % k)
        if k >= self.k_threshold:
            self.stats['big-k'] += 1
            self.last_query = dict(path='big-k')
            return self.bigk.query_topk(x1, x2, k)
        self.stats['small-k'] += 1
        in_range = self.count(x1, x2)
        if in_range <= k:
            # the whole range is the answer
            self.stats['whole-range'] += 1
            floor = NEG_INF
        else:
            floor = self.smallk.select_approx(x1, x2, k).y
        found = self.bigk.report_3sided(x1, x2, floor)
        self.last_query = dict(path='small-k', floor=floor, candidates=len(found),
                               in_range=in_range)
        if len(found) < min(k, in_range):
            raise AuditError("3-sided query above %r returned %d points for k=%d"
                             % (floor, len(found), k))
        return found[:k]

    query_topk = topk

    def audit_invariants(self):
        """Audit both structures and check that they hold the same
        points."""
        for report in (self.bigk.audit_invariants(), self.smallk.audit_invariants()):
            if not report:
                return report
        with self.disk.uncharged():
            same = sorted(self.bigk.points()) == sorted(self.smallk.points())
        if not same:
            return AuditReport.failed("big-k and small-k trees hold different points")
        return AuditReport.passed()
