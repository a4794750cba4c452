"""Weight-balanced B-trees over real keys.

A level-*i* node holds between ``W_i / 4`` and ``W_i`` inserted keys,
where ``W_i = leaf_capacity * branching ** i``; the root is only bounded
from above.  Weights count insertions and are never decremented.  Each
node covers the half-open slab ``[lo, hi)`` and the slabs of its children
partition it from left to right.  The root covers the whole real line.

Every node page carries a few *payload* words that belong to the owner of
the tree: the big-k tree keeps its bold-tree handles there, the small-k
tree the ids of its secondary structures.
"""

import bisect
import collections
import logging

from topkrange.disk import decode_real, encode_real
from topkrange.errors import AuditReport, DuplicateKeyError, RangeError, UsageError

__all__ = ['WbbParams', 'WbbNode', 'WbbTree', 'MultiSlab', 'LeafRange',
           'RebalanceReport']

LOG = logging.getLogger(__name__)

NEG_INF = float('-inf')
POS_INF = float('inf')


class WbbParams(collections.namedtuple('WbbParams', 'branching leaf_capacity')):
    __slots__ = ()

    def __new__(cls, branching, leaf_capacity):
        if branching < 4:
            raise UsageError("branching must be at least 4, got %r" % branching)
        if leaf_capacity < 1:
            raise UsageError("leaf capacity must be positive, got %r" % leaf_capacity)
        return super(WbbParams, cls).__new__(cls, int(branching), int(leaf_capacity))

    def max_weight(self, level):
        return self.leaf_capacity * self.branching ** level


RebalanceReport = collections.namedtuple('RebalanceReport', 'path depth')
RebalanceReport.__doc__ = """The highest node that went over its weight bound
is ``path[depth]``; its parent, the node to rebuild, is ``path[depth - 1]``
unless *depth* is 0, in which case the whole tree needs rebuilding."""

MultiSlab = collections.namedtuple('MultiSlab', 'node first last')
MultiSlab.__doc__ = "Children ``first..last`` (inclusive) of *node*, all inside the query."

LeafRange = collections.namedtuple('LeafRange', 'node')
LeafRange.__doc__ = "A leaf whose slab the query cuts."


class WbbNode(object):
    __slots__ = ('pid', 'level', 'weight', 'lo', 'hi', 'payload',
                 'children', 'child_lo', 'keys')

    def __init__(self, pid, level, weight, lo, hi, payload,
                 children=None, child_lo=None, keys=None):
        self.pid = pid
        self.level = level
        self.weight = weight
        self.lo = lo
        self.hi = hi
        self.payload = payload
        self.children = children or []
        self.child_lo = child_lo or []
        self.keys = keys or []

    @property
    def is_leaf(self):
        return self.level == 0

    def child_range(self, i):
        hi = self.child_lo[i + 1] if i + 1 < len(self.children) else self.hi
        return self.child_lo[i], hi

    def route(self, x):
        """Index of the child whose slab holds *x*."""
        lo_idx, hi_idx = 0, len(self.child_lo)
        while hi_idx - lo_idx > 1:
            mid = (lo_idx + hi_idx) // 2
            if self.child_lo[mid] <= x:
                lo_idx = mid
            else:
                hi_idx = mid
        return lo_idx

    def covers(self, x):
        return self.lo <= x < self.hi or (self.hi == POS_INF and x == POS_INF)

    def __repr__(self):
        return "<WbbNode #%d level=%d weight=%d [%r, %r)>" % (
            self.pid, self.level, self.weight, self.lo, self.hi)


class WbbTree(object):
    """A weight-balanced B-tree whose nodes live on pager pages.

    *leaf_keys* makes the leaves store their keys, which is needed when
    the owner rebuilds subtrees from the base tree alone.  The root page id
    is stable for the life of the tree.
    """

    def __init__(self, pager, params, payload_words=1, leaf_keys=False, root=None):
        self.pager = pager
        self.params = params
        self.payload_words = payload_words
        self.leaf_keys = leaf_keys
        self.rebuilds = collections.Counter()
        self.splits = 0
        if root is None:
            root = self._new_page(0)
            self._store(WbbNode(root, 0, 0, NEG_INF, POS_INF, [0] * payload_words))
        self.root = root

    # -- pages -------------------------------------------------------------

    def _page_words(self, level):
        if level == 0:
            nkeys = self.params.leaf_capacity + 1 if self.leaf_keys else 0
            return 6 + self.payload_words + 1 + nkeys
        return 6 + self.payload_words + 2 * (4 * self.params.branching + 4)

    def _new_page(self, level):
        return self.pager.allocate(max(self._page_words(0), self._page_words(max(level, 1))))

    def load(self, pid):
        w = self.pager.load(pid)
        pw = self.payload_words
        level, weight = w[0], w[1]
        node = WbbNode(pid, level, weight, decode_real(w[2]), decode_real(w[3]),
                       w[4:4 + pw])
        pos = 4 + pw
        n = w[pos]
        pos += 1
        if level > 0:
            node.children = w[pos:pos + n]
            node.child_lo = [decode_real(v) for v in w[pos + n:pos + 2 * n]]
        elif n:
            node.keys = [decode_real(v) for v in w[pos:pos + n]]
        return node

    def _store(self, node):
        out = [node.level, node.weight, encode_real(node.lo), encode_real(node.hi)]
        out.extend(node.payload)
        if node.level > 0:
            out.append(len(node.children))
            out.extend(node.children)
            out.extend(encode_real(v) for v in node.child_lo)
        else:
            keys = node.keys if self.leaf_keys else []
            out.append(len(keys))
            out.extend(encode_real(v) for v in keys)
        if len(out) > self.pager.capacity(node.pid):
            raise UsageError("node %d outgrew its page" % node.pid)
        self.pager.store(node.pid, out)

    def store(self, node):
        self._store(node)

    def set_payload(self, node, payload):
        node.payload = list(payload)
        self._store(node)

    # -- building ------------------------------------------------------------

    def build(self, keys):
        """Replace the whole tree with one built over the sorted *keys*."""
        old = self.load(self.root)
        self._release_below(old)
        top = self._build_levels(list(keys), NEG_INF, POS_INF, None, old.pid)
        LOG.debug("built tree over %d keys, height %d", len(keys), top.level + 1)
        return top

    def rebuild_subtree(self, pid, keys):
        """Rebuild the subtree rooted at *pid* over the sorted *keys*,
        keeping its slab, level and page id.  The payload words of the old
        nodes are left to the caller, who must dispose of them first."""
        old = self.load(pid)
        self._release_below(old)
        level = None if pid == self.root else old.level
        top = self._build_levels(list(keys), old.lo, old.hi, level, pid,
                                 payload=old.payload)
        self.rebuilds[top.level] += 1
        LOG.debug("rebuilt subtree #%d at level %d over %d keys", pid, top.level, len(keys))
        return top

    def _release_below(self, node):
        if node.is_leaf:
            return
        stack = list(node.children)
        while stack:
            pid = stack.pop()
            child = self.load(pid)
            if not child.is_leaf:
                stack.extend(child.children)
            self.pager.release(pid)

    def _build_levels(self, keys, lo, hi, level, top_pid, payload=None):
        params = self.params
        empty = [0] * self.payload_words
        # leaves
        target = max(1, params.leaf_capacity // 2)
        groups = _group_counts([1] * len(keys), target, max(1, params.leaf_capacity // 4))
        nodes = []
        pos = 0
        for size in groups or [0]:
            chunk = keys[pos:pos + size]
            pos += size
            nodes.append(WbbNode(None, 0, len(chunk), None, None, list(empty),
                                 keys=chunk))
        for i, node in enumerate(nodes):
            node.lo = lo if i == 0 else node.keys[0]
        _close_slabs(nodes, hi)
        cur = 0
        while (level is None and len(nodes) > 1) or (level is not None and cur < level):
            cur += 1
            target = max(1, params.max_weight(cur) // 2)
            floor = params.max_weight(cur) // 4
            groups = _group_counts([n.weight for n in nodes], target, floor)
            if level is not None and cur == level:
                groups = [len(nodes)]
            parents = []
            pos = 0
            for size in groups:
                kids = nodes[pos:pos + size]
                pos += size
                for kid in kids:
                    kid.pid = self._new_page(kid.level)
                    self._store(kid)
                parents.append(WbbNode(None, cur, sum(k.weight for k in kids),
                                       kids[0].lo, kids[-1].hi, list(empty),
                                       children=[k.pid for k in kids],
                                       child_lo=[k.lo for k in kids]))
            nodes = parents
        assert len(nodes) == 1
        top = nodes[0]
        top.pid = top_pid
        top.lo, top.hi = lo, hi
        if top.children:
            top.child_lo[0] = lo
        if payload is not None:
            top.payload = list(payload)
        self._store(top)
        return top

    # -- navigation ----------------------------------------------------------

    def locate_leaf(self, x):
        """Return the root-to-leaf path of nodes whose slabs hold *x*."""
        node = self.load(self.root)
        path = [node]
        while not node.is_leaf:
            node = self.load(node.children[node.route(x)])
            path.append(node)
        return path

    def height(self):
        return self.load(self.root).level + 1

    def size(self):
        return self.load(self.root).weight

    def walk(self, pid=None):
        """Yield the nodes of the subtree at *pid* in preorder."""
        stack = [self.root if pid is None else pid]
        while stack:
            node = self.load(stack.pop())
            yield node
            stack.extend(reversed(node.children))

    def collect_keys(self, pid):
        """Sorted keys stored in the leaves below *pid*."""
        if not self.leaf_keys:
            raise UsageError("tree does not keep leaf keys")
        keys = []
        for node in self.walk(pid):
            keys.extend(node.keys)
        return keys

    # -- updates -------------------------------------------------------------

    def insert_key(self, x, path=None):
        """Add *x* and bump the weights on its path.  Returns a
        :class:`RebalanceReport` for the highest node now over its bound,
        or None.

        *path* may be the result of an earlier :meth:`locate_leaf` for *x*
        to save reading it again; its nodes are updated in place.
        """
        if path is None:
            path = self.locate_leaf(x)
        leaf = path[-1]
        if self.leaf_keys:
            j = bisect.bisect_left(leaf.keys, x)
            if j < len(leaf.keys) and leaf.keys[j] == x:
                raise DuplicateKeyError(x)
            leaf.keys.insert(j, x)
            if len(leaf.keys) > self.params.leaf_capacity + 1:
                # the insertion that overflowed this leaf should have rebuilt it
                raise UsageError("leaf #%d was not rebalanced" % leaf.pid)
        for node in path:
            node.weight += 1
            self._store(node)
        for depth, node in enumerate(path):
            if node.weight > self.params.max_weight(node.level):
                return RebalanceReport(path, depth)
        return None

    def split(self, path, depth, split_key=None):
        """Split the overweight node ``path[depth]`` in two.

        A leaf splits at *split_key* (the first key of the right half) and
        its weight is halved.  An internal node splits its children at the
        weight midpoint.  The new right node is inserted in the parent,
        which is updated in *path*; splitting the root grows a level and
        keeps the root page.  Returns ``(left, right)``.
        """
        node = path[depth]
        self.splits += 1
        if node.is_leaf:
            if split_key is None:
                if not node.keys:
                    raise UsageError("leaf split needs a split key")
                split_key = node.keys[len(node.keys) // 2]
            if not node.lo < split_key < node.hi:
                raise UsageError("split key %r outside the slab of #%d" % (split_key, node.pid))
            left = WbbNode(None, 0, node.weight // 2, node.lo, split_key,
                           [0] * self.payload_words,
                           keys=[k for k in node.keys if k < split_key])
            right = WbbNode(None, 0, node.weight - node.weight // 2, split_key, node.hi,
                            [0] * self.payload_words,
                            keys=[k for k in node.keys if k >= split_key])
            if self.leaf_keys:
                left.weight, right.weight = len(left.keys), len(right.keys)
        elif len(node.children) < 2:
            raise UsageError("node #%d has a single child and cannot split" % node.pid)
        else:
            weights = [self.load(c).weight for c in node.children]
            half = node.weight / 2.0
            acc = 0
            cut = 1
            for i, w in enumerate(weights[:-1]):
                acc += w
                cut = i + 1
                if acc >= half:
                    break
            left = WbbNode(None, node.level, sum(weights[:cut]), node.lo, node.child_lo[cut],
                           [0] * self.payload_words,
                           children=node.children[:cut], child_lo=node.child_lo[:cut])
            right = WbbNode(None, node.level, sum(weights[cut:]), node.child_lo[cut], node.hi,
                            [0] * self.payload_words,
                            children=node.children[cut:], child_lo=node.child_lo[cut:])
        if depth == 0:
            left.pid = self._new_page(left.level)
            right.pid = self._new_page(right.level)
            self._store(left)
            self._store(right)
            root = WbbNode(node.pid, node.level + 1, node.weight, node.lo, node.hi,
                           node.payload, children=[left.pid, right.pid],
                           child_lo=[left.lo, right.lo])
            self._store(root)
            path[0:1] = [root, left]
            LOG.debug("root #%d split, height now %d", node.pid, root.level + 1)
            return left, right
        left.pid = node.pid
        left.payload = node.payload
        right.pid = self._new_page(right.level)
        self._store(left)
        self._store(right)
        parent = path[depth - 1]
        i = parent.children.index(node.pid)
        parent.children.insert(i + 1, right.pid)
        parent.child_lo.insert(i + 1, right.lo)
        self._store(parent)
        path[depth] = left
        return left, right

    # -- queries -------------------------------------------------------------

    def canonical_ranges(self, x1, x2):
        """Decompose ``[x1, x2]`` into disjoint pieces, left to right: a
        :class:`LeafRange` for each leaf the query cuts and a
        :class:`MultiSlab` for each run of fully covered siblings."""
        if x1 > x2:
            raise RangeError("empty query range [%r, %r]" % (x1, x2))
        out = []
        self._canonical(self.load(self.root), x1, x2, out)
        return out

    def _canonical(self, node, x1, x2, out):
        if node.is_leaf:
            out.append(LeafRange(node))
            return
        i1, i2 = node.route(x1), node.route(x2)
        first, last = i1, i2
        left_cut = not self._covered(node, i1, x1, x2)
        right_cut = not self._covered(node, i2, x1, x2)
        if left_cut:
            first += 1
        if right_cut:
            last -= 1
        if left_cut:
            self._canonical(self.load(node.children[i1]), x1, x2, out)
        if first <= last:
            out.append(MultiSlab(node, first, last))
        if right_cut and i2 != i1:
            self._canonical(self.load(node.children[i2]), x1, x2, out)

    @staticmethod
    def _covered(node, i, x1, x2):
        lo, hi = node.child_range(i)
        return x1 <= lo and hi <= x2

    # -- audit ---------------------------------------------------------------

    def audit(self):
        """Check slabs, weight sums and weight bounds."""
        try:
            root = self.load(self.root)
            assert root.lo == NEG_INF and root.hi == POS_INF, "root slab is not the real line"
            self._audit(root, True)
        except AssertionError as e:
            return AuditReport.failed(str(e))
        return AuditReport.passed()

    def _audit(self, node, is_root):
        bound = self.params.max_weight(node.level)
        assert node.weight <= bound, "node #%d weight %d over %d" % (node.pid, node.weight, bound)
        if not is_root:
            assert 4 * node.weight >= bound, "node #%d weight %d under %d/4" % (
                node.pid, node.weight, bound)
        if node.is_leaf:
            if self.leaf_keys:
                assert node.weight == len(node.keys), "leaf #%d weight != key count" % node.pid
                for k in node.keys:
                    assert node.covers(k), "leaf #%d holds %r outside its slab" % (node.pid, k)
            return
        assert node.child_lo[0] == node.lo, "node #%d first child slab misaligned" % node.pid
        total = 0
        for i, pid in enumerate(node.children):
            child = self.load(pid)
            lo, hi = node.child_range(i)
            assert (child.lo, child.hi) == (lo, hi), "child #%d slab [%r, %r) != [%r, %r)" % (
                pid, child.lo, child.hi, lo, hi)
            assert child.level == node.level - 1, "child #%d on the wrong level" % pid
            total += child.weight
            self._audit(child, False)
        assert total == node.weight, "node #%d weight %d != children %d" % (
            node.pid, node.weight, total)


def _group_counts(weights, target, floor):
    """Greedily cut *weights* into consecutive groups reaching *target*;
    a short last group (under *floor*) joins the one before it."""
    groups = []
    size = acc = 0
    for w in weights:
        size += 1
        acc += w
        if acc >= target:
            groups.append((size, acc))
            size = acc = 0
    if size:
        if groups and acc < floor:
            prev_size, prev_acc = groups.pop()
            groups.append((prev_size + size, prev_acc + acc))
        else:
            groups.append((size, acc))
    return [s for s, _ in groups]


def _close_slabs(nodes, hi):
    for left, right in zip(nodes, nodes[1:]):
        left.hi = right.lo
    nodes[-1].hi = hi
