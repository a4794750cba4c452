"""Block-resident order-statistic B-tree.

Keys are tuples of ``key_width`` words and every key carries a tuple of
``value_width`` payload words.  Internal entries keep, for each child, its
subtree size and its high key, so rank and select cost one root-to-leaf
path.  With ``agg_field`` set, entries also keep the subtree maximum of
that key component, which gives range maxima along two paths.

The root page never moves; owners remember a tree by its root page id.
High keys are upper bounds: deletions leave them stale, which routing
tolerates because keys of child ``i`` always lie in ``(high[i-1], high[i]]``.
"""

import bisect
import logging

from topkrange.errors import AuditReport, DuplicateKeyError, MissingKeyError, UsageError

__all__ = ['OSTree']

LOG = logging.getLogger(__name__)

_LEAF = 0
_INTERNAL = 1


class _Node(object):
    __slots__ = ('leaf', 'keys', 'values', 'children', 'counts', 'highs', 'aggs', 'size')

    def __init__(self, leaf):
        self.leaf = leaf
        self.keys = []
        self.values = []
        self.children = []
        self.counts = []
        self.highs = []
        self.aggs = []
        self.size = 0

    def __len__(self):
        return len(self.keys) if self.leaf else len(self.children)

    def count(self):
        return len(self.keys) if self.leaf else sum(self.counts)

    def high(self):
        if self.leaf:
            return self.keys[-1] if self.keys else None
        return self.highs[-1] if self.highs else None

    def agg(self, field):
        if field is None:
            return None
        if self.leaf:
            return max(k[field] for k in self.keys) if self.keys else None
        return max(self.aggs) if self.aggs else None

    def route(self, key):
        """Index of the first child whose high key is >= *key*, or None."""
        i = bisect.bisect_left(self.highs, key)
        return i if i < len(self.highs) else None


class OSTree(object):
    """An order-statistic B-tree stored through a
    :class:`~topkrange.pager.Pager`.

    Use :meth:`create` or :meth:`bulk_load` to make a new tree, and the
    constructor to reopen one from its root page id.
    """

    def __init__(self, pager, root, key_width=1, value_width=0, agg_field=None):
        self.pager = pager
        self.root = root
        self.key_width = key_width
        self.value_width = value_width
        self.agg_field = agg_field
        self.fanout = self.fanout_for(pager.B)

    @staticmethod
    def fanout_for(B):
        return max(4, B // 2)

    @classmethod
    def _page_words(cls, B, key_width, value_width, agg_field):
        fanout = cls.fanout_for(B)
        per_leaf = key_width + value_width
        per_child = 2 + key_width + (1 if agg_field is not None else 0)
        return 2 + fanout * max(per_leaf, per_child)

    @classmethod
    def create(cls, pager, key_width=1, value_width=0, agg_field=None):
        words = cls._page_words(pager.B, key_width, value_width, agg_field)
        root = pager.allocate(words)
        tree = cls(pager, root, key_width, value_width, agg_field)
        tree._store(root, _Node(True))
        return tree

    @classmethod
    def bulk_load(cls, pager, items, key_width=1, value_width=0, agg_field=None):
        """Build a tree from *items*, a sequence of ``(key, value)`` pairs
        sorted by key, writing every page once."""
        tree = cls.create(pager, key_width, value_width, agg_field)
        items = [(tuple(k), tuple(v)) for k, v in items]
        if not items:
            return tree
        for (a, _), (b, _) in zip(items, items[1:]):
            if not a < b:
                raise UsageError("bulk_load needs strictly increasing keys")
        fill = max(2, (tree.fanout * 3) // 4)
        level = []
        for chunk in _even_chunks(items, fill):
            node = _Node(True)
            node.keys = [k for k, _ in chunk]
            node.values = [v for _, v in chunk]
            level.append(node)
        while len(level) > 1:
            parents = []
            for chunk in _even_chunks(level, fill):
                parent = _Node(False)
                for child in chunk:
                    pid = tree._new_page()
                    tree._store(pid, child)
                    tree._append_entry(parent, pid, child)
                parents.append(parent)
            level = parents
        tree._store(tree.root, level[0])
        return tree

    # -- page plumbing ---------------------------------------------------

    def _new_page(self):
        return self.pager.allocate(self._page_words(
            self.pager.B, self.key_width, self.value_width, self.agg_field))

    def _load(self, pid):
        words = self.pager.load(pid)
        kw, vw = self.key_width, self.value_width
        if not words:
            return _Node(True)
        node = _Node(words[0] == _LEAF)
        node.size = len(words)
        n = words[1]
        pos = 2
        if node.leaf:
            for _ in range(n):
                node.keys.append(tuple(words[pos:pos + kw]))
                node.values.append(tuple(words[pos + kw:pos + kw + vw]))
                pos += kw + vw
        else:
            has_agg = self.agg_field is not None
            for _ in range(n):
                node.children.append(words[pos])
                node.counts.append(words[pos + 1])
                node.highs.append(tuple(words[pos + 2:pos + 2 + kw]))
                pos += 2 + kw
                if has_agg:
                    node.aggs.append(words[pos])
                    pos += 1
        return node

    def _store(self, pid, node):
        if node.leaf:
            out = [_LEAF, len(node.keys)]
            for k, v in zip(node.keys, node.values):
                out.extend(k)
                out.extend(v)
        else:
            out = [_INTERNAL, len(node.children)]
            has_agg = self.agg_field is not None
            for i, child in enumerate(node.children):
                out.append(child)
                out.append(node.counts[i])
                out.extend(node.highs[i])
                if has_agg:
                    out.append(node.aggs[i] if node.aggs[i] is not None else 0)
        self.pager.store(pid, out)

    def _append_entry(self, parent, pid, child):
        parent.children.append(pid)
        parent.counts.append(child.count())
        parent.highs.append(child.high())
        if self.agg_field is not None:
            parent.aggs.append(child.agg(self.agg_field))

    def _entries(self, pairs, old_high=None):
        out = []
        for idx, (pid, node) in enumerate(pairs):
            high = node.high()
            if idx == len(pairs) - 1 and old_high is not None:
                high = max(high, old_high) if high is not None else old_high
            out.append((pid, node.count(), high, node.agg(self.agg_field)))
        return out

    def _split(self, pid, node):
        """Split *node* if it overflows.  Returns the ``(pid, node)`` pairs
        that replace it in its parent, all of them stored."""
        if len(node) <= self.fanout:
            self._store(pid, node)
            return [(pid, node)]
        left, right = _halves(node)
        if pid == self.root:
            lpid, rpid = self._new_page(), self._new_page()
            self._store(lpid, left)
            self._store(rpid, right)
            root = _Node(False)
            self._append_entry(root, lpid, left)
            self._append_entry(root, rpid, right)
            self._store(pid, root)
            LOG.debug("root %d grew a level", pid)
            return [(pid, root)]
        rpid = self._new_page()
        self._store(pid, left)
        self._store(rpid, right)
        return [(pid, left), (rpid, right)]

    # -- updates ---------------------------------------------------------

    def insert(self, key, value=()):
        key, value = tuple(key), tuple(value)
        if len(key) != self.key_width or len(value) != self.value_width:
            raise UsageError("entry shape does not match the tree")
        path = []
        pid, node = self.root, self._load(self.root)
        while not node.leaf:
            i = node.route(key)
            if i is None:
                i = len(node.children) - 1
            path.append((pid, node, i))
            pid = node.children[i]
            node = self._load(pid)
        j = bisect.bisect_left(node.keys, key)
        if j < len(node.keys) and node.keys[j] == key:
            raise DuplicateKeyError(key)
        node.keys.insert(j, key)
        node.values.insert(j, value)
        carry = self._split(pid, node)
        for ppid, pnode, i in reversed(path):
            old_high = max(pnode.highs[i], key)
            entries = self._entries(carry, old_high)
            self._replace(pnode, i, entries)
            carry = self._split(ppid, pnode)

    def _replace(self, node, i, entries):
        node.children[i:i + 1] = [e[0] for e in entries]
        node.counts[i:i + 1] = [e[1] for e in entries]
        node.highs[i:i + 1] = [e[2] for e in entries]
        if self.agg_field is not None:
            node.aggs[i:i + 1] = [e[3] for e in entries]

    def delete(self, key):
        """Remove *key* and return its payload tuple."""
        key = tuple(key)
        path = []
        pid, node = self.root, self._load(self.root)
        while not node.leaf:
            i = node.route(key)
            if i is None:
                raise MissingKeyError(key)
            path.append((pid, node, i))
            pid = node.children[i]
            node = self._load(pid)
        j = bisect.bisect_left(node.keys, key)
        if j >= len(node.keys) or node.keys[j] != key:
            raise MissingKeyError(key)
        del node.keys[j]
        value = node.values.pop(j)
        child_pid, child = pid, node
        if path:
            self._store(child_pid, child)
        for ppid, pnode, i in reversed(path):
            if child.count() == 0:
                self._replace(pnode, i, [])
                self.pager.release(child_pid)
            else:
                pnode.counts[i] = child.count()
                if self.agg_field is not None:
                    pnode.aggs[i] = child.agg(self.agg_field)
            if ppid != self.root:
                self._store(ppid, pnode)
            child_pid, child = ppid, pnode
        self._settle_root(child)
        return value

    def _settle_root(self, root):
        while not root.leaf and len(root.children) == 1:
            only = root.children[0]
            root = self._load(only)
            self.pager.release(only)
        if not root.leaf and not root.children:
            root = _Node(True)
        self._store(self.root, root)

    # -- queries ---------------------------------------------------------

    def __len__(self):
        return self._load(self.root).count()

    size = __len__

    def get(self, key, default=None):
        key = tuple(key)
        node = self._load(self.root)
        while not node.leaf:
            i = node.route(key)
            if i is None:
                return default
            node = self._load(node.children[i])
        j = bisect.bisect_left(node.keys, key)
        if j < len(node.keys) and node.keys[j] == key:
            return node.values[j]
        return default

    def __contains__(self, key):
        return self.get(key) is not None

    def rank(self, key):
        """Number of stored keys strictly smaller than *key*."""
        key = tuple(key)
        r = 0
        node = self._load(self.root)
        while not node.leaf:
            i = node.route(key)
            if i is None:
                return r + node.count()
            r += sum(node.counts[:i])
            node = self._load(node.children[i])
        return r + bisect.bisect_left(node.keys, key)

    def select(self, index):
        """The ``(key, value)`` pair at 0-based *index* in key order."""
        node = self._load(self.root)
        if not 0 <= index < node.count():
            raise UsageError("select(%d) outside [0, %d)" % (index, node.count()))
        while not node.leaf:
            for i, c in enumerate(node.counts):
                if index < c:
                    break
                index -= c
            node = self._load(node.children[i])
        return node.keys[index], node.values[index]

    def select_desc(self, rank):
        """The pair whose descending rank is *rank* (1 is the largest)."""
        return self.select(self.size() - rank)

    def min(self):
        return self.select(0)

    def max(self):
        return self.select_desc(1)

    def iter_range(self, lo=None, hi=None):
        """Yield ``(key, value)`` pairs with ``lo <= key <= hi`` in key
        order; either bound may be None."""
        lo = tuple(lo) if lo is not None else None
        hi = tuple(hi) if hi is not None else None
        return self._iter(self.root, lo, hi)

    def _iter(self, pid, lo, hi):
        node = self._load(pid)
        if node.leaf:
            for k, v in zip(node.keys, node.values):
                if (lo is None or k >= lo) and (hi is None or k <= hi):
                    yield k, v
            self.pager.unload(node.size)
            return
        prev = None
        for i, child in enumerate(node.children):
            if lo is not None and node.highs[i] < lo:
                prev = node.highs[i]
                continue
            if hi is not None and prev is not None and prev >= hi:
                break
            for item in self._iter(child, lo, hi):
                yield item
            prev = node.highs[i]
        # scanned nodes are not held once the walk moves on
        self.pager.unload(node.size)

    def items(self):
        return list(self.iter_range())

    def max_agg(self, lo=None, hi=None):
        """Maximum of the aggregate key component over keys in
        ``[lo, hi]``, or None when the range is empty."""
        if self.agg_field is None:
            raise UsageError("tree was built without an aggregate")
        lo = tuple(lo) if lo is not None else None
        hi = tuple(hi) if hi is not None else None
        return self._max_agg(self.root, lo, hi)

    def _max_agg(self, pid, lo, hi):
        node = self._load(pid)
        field = self.agg_field
        if node.leaf:
            vals = [k[field] for k in node.keys
                    if (lo is None or k >= lo) and (hi is None or k <= hi)]
            return max(vals) if vals else None
        best = None
        prev = None
        for i, child in enumerate(node.children):
            high = node.highs[i]
            if lo is not None and high < lo:
                prev = high
                continue
            if hi is not None and prev is not None and prev >= hi:
                break
            above = lo is None or (prev is not None and prev >= lo)
            below = hi is None or high <= hi
            if above and below:
                cand = node.aggs[i]
            else:
                cand = self._max_agg(child, lo, hi)
            if cand is not None and (best is None or cand > best):
                best = cand
            prev = high
        return best

    # -- maintenance -----------------------------------------------------

    def destroy(self):
        """Release every page of the tree, the root included."""
        stack = [self.root]
        while stack:
            pid = stack.pop()
            node = self._load(pid)
            if not node.leaf:
                stack.extend(node.children)
            self.pager.release(pid)

    def height(self):
        h = 1
        node = self._load(self.root)
        while not node.leaf:
            node = self._load(node.children[0])
            h += 1
        return h

    def audit(self):
        """Check ordering, sizes, high keys and aggregates."""
        try:
            self._audit(self.root, None, None)
        except AssertionError as e:
            return AuditReport.failed(str(e))
        return AuditReport.passed()

    def _audit(self, pid, lower, upper):
        node = self._load(pid)
        if node.leaf:
            keys = node.keys
            assert keys == sorted(keys) and len(set(keys)) == len(keys), \
                "leaf %d keys out of order" % pid
            for k in keys:
                assert lower is None or k > lower, "leaf %d key %r below %r" % (pid, k, lower)
                assert upper is None or k <= upper, "leaf %d key %r above %r" % (pid, k, upper)
            return len(keys), node.agg(self.agg_field)
        assert node.children, "empty internal node %d" % pid
        prev = lower
        total = 0
        aggs = []
        for i, child in enumerate(node.children):
            count, agg = self._audit(child, prev, node.highs[i])
            assert count == node.counts[i], "node %d child %d count %d != %d" % (
                pid, i, node.counts[i], count)
            if self.agg_field is not None:
                assert agg == node.aggs[i], "node %d child %d aggregate stale" % (pid, i)
                aggs.append(agg)
            total += count
            prev = node.highs[i]
        return total, (max(aggs) if aggs else None)


def _even_chunks(seq, fill):
    """Split *seq* into ceil(len/fill) chunks whose sizes differ by at most
    one."""
    n = len(seq)
    parts = max(1, -(-n // fill))
    base, extra = divmod(n, parts)
    out = []
    pos = 0
    for p in range(parts):
        size = base + (1 if p < extra else 0)
        out.append(seq[pos:pos + size])
        pos += size
    return out


def _halves(node):
    mid = (len(node) + 1) // 2
    left, right = _Node(node.leaf), _Node(node.leaf)
    if node.leaf:
        left.keys, right.keys = node.keys[:mid], node.keys[mid:]
        left.values, right.values = node.values[:mid], node.values[mid:]
    else:
        for attr in ('children', 'counts', 'highs', 'aggs'):
            seq = getattr(node, attr)
            setattr(left, attr, seq[:mid])
            setattr(right, attr, seq[mid:])
    return left, right
