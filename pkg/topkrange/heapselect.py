"""Selecting the largest keys of block-resident max-heaps.

The heaps are never materialized: a node is a :class:`HeapNodeRef`
holding its key and an opaque handle, and the caller supplies an *expand*
function that fetches the (at most two) children of a handle.  Only the
nodes reachable from popped nodes are ever fetched.
"""

import collections
import heapq
import itertools

__all__ = ['HeapNodeRef', 'ConcatHeap', 'concat_heaps', 'select_top']


HeapNodeRef = collections.namedtuple('HeapNodeRef', 'key handle')


class ConcatHeap(object):
    """Several max-heaps joined under one root.

    The roots are kept in memory, sorted by key descending, and each root
    takes the next one as an extra child.  That chain is a valid heap order
    and gives every node at most three children, so building it writes
    nothing to disk.
    """

    def __init__(self, roots):
        self.roots = sorted(roots, key=lambda ref: ref.key, reverse=True)
        self.node_reads = 0

    def __len__(self):
        return len(self.roots)

    @property
    def root(self):
        return self.roots[0] if self.roots else None

    def chained(self, index):
        """The chain child of the *index*-th root, or None."""
        if index + 1 < len(self.roots):
            return self.roots[index + 1]
        return None


def concat_heaps(roots):
    """Join the heaps rooted at *roots*.  An empty list gives an empty
    heap whose :attr:`~ConcatHeap.root` is None."""
    return ConcatHeap(roots)


def select_top(heap, t, expand):
    """Return the *t* nodes of *heap* with the largest keys, largest first.

    Best-first search from the root: each popped node pushes its children,
    fetched with ``expand(ref)``.  The last popped node is not expanded, so
    at most ``2 * (t - 1)`` nodes are fetched besides the in-memory roots.
    The count is added to ``heap.node_reads``.
    """
    if t <= 0 or heap.root is None:
        return []
    seq = itertools.count()
    frontier = [(-heap.root.key, next(seq), heap.root, 0)]
    out = []
    while frontier:
        _, _, ref, chain = heapq.heappop(frontier)
        out.append(ref)
        if len(out) == t:
            break
        if chain is not None:
            nxt = heap.chained(chain)
            if nxt is not None:
                heapq.heappush(frontier, (-nxt.key, next(seq), nxt, chain + 1))
        for child in expand(ref):
            heap.node_reads += 1
            heapq.heappush(frontier, (-child.key, next(seq), child, None))
    return out
