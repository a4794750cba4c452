"""Approximate union-rank selection.

Given disjoint sets L_1..L_m that can each report their maximum and an
element of approximate local rank, :func:`aurs_select` finds an element
whose rank in the union is between *k* and ``c**2 * (2 + 2c) * k``, where
*c* is the approximation factor of the sets.  It calls each operator
``O(m)`` times in total.

Sets are reached through the :class:`RankedSource` interface, so the same
code runs over in-memory lists in the tests and over (f, l)-group
structures in the small-k tree.
"""

import collections
import logging
import math

from topkrange.errors import PreconditionError, UsageError

__all__ = ['RankedSource', 'ListSource', 'Marker', 'aurs_select',
           'weighted_select', 'rank_bound']

LOG = logging.getLogger(__name__)


Marker = collections.namedtuple('Marker', 'value weight source round')


def rank_bound(c):
    """Largest union rank, as a multiple of k, that the selection may
    return for approximation factor *c*."""
    return c * c * (2 + 2 * c)


class RankedSource(object):
    """One set of the union.

    Subclasses implement :meth:`max_element`, :meth:`rank_select` and
    ``__len__``.  *c* is the approximation factor of :meth:`rank_select`.
    """

    c = 2

    def max_element(self):
        """Return the largest element of the set."""
        raise NotImplementedError

    def rank_select(self, rho):
        """Return an element whose rank in the set (1 being the largest)
        lies in ``[rho, c * rho)``."""
        raise NotImplementedError

    def __len__(self):
        raise NotImplementedError


class ListSource(RankedSource):
    """A source over an in-memory collection.

    With *rng* set, :meth:`rank_select` answers with a random element of
    the allowed window instead of its first one, which is how the tests
    play an adversary.  Operator calls are counted in ``calls``.
    """

    def __init__(self, values, c=2, rng=None):
        self.values = sorted(values, reverse=True)
        self.c = c
        self.rng = rng
        self.calls = collections.Counter()

    def __len__(self):
        return len(self.values)

    def max_element(self):
        self.calls['max'] += 1
        return self.values[0]

    def rank_select(self, rho):
        self.calls['rank'] += 1
        lo = max(1, int(math.ceil(rho)))
        hi = min(len(self.values), int(math.ceil(self.c * rho)) - 1)
        if lo > hi:
            raise UsageError("no rank of %d elements lies in [%r, %r)"
                             % (len(self.values), rho, self.c * rho))
        if self.rng is None:
            return self.values[lo - 1]
        return self.values[self.rng.randint(lo, hi) - 1]


def weighted_select(pivots, k):
    """Return the largest pivot whose prefix weight, the total weight of
    the pivots at least as large, reaches *k*."""
    acc = 0
    for marker in sorted(pivots, key=lambda m: m.value, reverse=True):
        acc += marker.weight
        if acc >= k:
            return marker
    raise PreconditionError("pivot weights add up to %d < k=%d" % (acc, k))


def _ceil_div(a, b):
    return -(-a // b)


def _weight(c, j, k, m):
    if j == 1:
        return _ceil_div(c * k, m)
    return _ceil_div(c ** j * k, m) - _ceil_div(c ** (j - 1) * k, m)


def _rounds(c, m):
    if m <= 1:
        return 1
    # smallest r with c**r >= m, in integers
    r, p = 0, 1
    while p < m:
        p *= c
        r += 1
    return r


def aurs_select(sources, k):
    """Return an element of the union of *sources* whose union rank lies
    in ``[k, rank_bound(c) * k]``.

    Every source must hold at least ``c * k`` elements; a smaller one
    raises :class:`~topkrange.errors.PreconditionError`.  All sources
    share the factor *c* of the first one.
    """
    if not sources:
        raise UsageError("no sources to select from")
    c = sources[0].c
    if c < 2:
        raise UsageError("approximation factor must be at least 2, got %r" % c)
    smallest = min(len(s) for s in sources)
    if k < 1 or c * k > smallest:
        raise PreconditionError("k=%r violates 1 <= k <= %d/%r" % (k, smallest, c))
    m = len(sources)
    if k >= m:
        return _select_many(sources, k, c)
    maxima = sorted(((s.max_element(), i) for i, s in enumerate(sources)), reverse=True)
    cut = maxima[k - 1][0]
    active = [sources[i] for v, i in maxima if v >= cut]
    LOG.debug("k=%d below m=%d: %d sources survive the max filter", k, m, len(active))
    return max(_select_many(active, k, c), cut)


def _select_many(sources, k, c):
    m = len(sources)
    active = list(range(m))
    local = [0] * m
    pivots = []
    for j in range(1, _rounds(c, m) + 1):
        rho = c ** j * k / float(m)
        w = _weight(c, j, k, m)
        markers = [Marker(sources[i].rank_select(rho), w, i, j) for i in active]
        keep = _ceil_div(m, c ** j)
        chosen = sorted(markers, key=lambda mk: mk.value, reverse=True)[:keep]
        for mk in chosen:
            local[mk.source] += mk.weight
            expect = _ceil_div(c ** j * k, m)
            if local[mk.source] != expect:
                raise PreconditionError("source %d has local prefix weight %d in round %d, "
                                        "expected %d" % (mk.source, local[mk.source], j, expect))
        pivots.extend(chosen)
        active = [mk.source for mk in chosen]
    return weighted_select(pivots, k).value

