"""Top-k range reporting for large k: an external priority search tree.

The base tree is a weight-balanced B-tree on the x-coordinates with
branching parameter and leaf capacity both *B*.  Every internal base node
*u* owns a binary tree over the slabs of its children; gluing these trees
together (the leaf of a child's slab gets the root of the child's tree as
its only child) gives the *bold tree*.  Every bold node keeps a pilot set:
the highest points of its slab not held higher up, between B/2 and 2B of
them unless fewer remain.  The lowest pilot point is the node's
representative, and the representatives of one base node's binary tree
are gathered on its *representative page*.

Queries combine the two boundary paths, best-first selection over the
heaps hanging between them and one ring of neighbours; updates place a
point with one base-tree descent and repair pilot sets with push-downs
and pull-ups.  The base tree is rebalanced by rebuilding subtrees.
"""

import collections
import contextlib
import logging
import math

from topkrange import heapselect
from topkrange.disk import decode_real, encode_real
from topkrange.errors import (AuditError, AuditReport, ConfigError,
                              DuplicateKeyError, MissingKeyError, RangeError,
                              UsageError)
from topkrange.ostree import OSTree
from topkrange.pager import Pager
from topkrange.wbb import WbbParams, WbbTree

__all__ = ['PrioritySearchTree', 'Point', 'BoldNode', 'TokenLedger', 'PHI']

LOG = logging.getLogger(__name__)

PHI = 16

SECONDARY = 1
BRIDGE = 2
BOLD_LEAF = 3

_KIND_NAMES = {SECONDARY: 'secondary', BRIDGE: 'bridge', BOLD_LEAF: 'leaf'}

POS_INF = float('inf')

Point = collections.namedtuple('Point', 'x y')

ChildRef = collections.namedtuple('ChildRef', 'pid home slot')

_HeapSlot = collections.namedtuple('_HeapSlot', 'child parent index')


def _by_height(p):
    return -p.y


class BoldNode(object):
    """One node of the bold tree, as held in memory between a load and a
    store.  *points* is kept sorted by score, highest first."""

    __slots__ = ('pid', 'kind', 'home', 'slot', 'lo', 'hi', 'first', 'last',
                 'split', 'children', 'points')

    def __init__(self, pid, kind, home, slot, lo, hi, first=0, last=0,
                 split=0.0, children=None, points=None):
        self.pid = pid
        self.kind = kind
        self.home = home
        self.slot = slot
        self.lo = lo
        self.hi = hi
        self.first = first
        self.last = last
        self.split = split
        self.children = children or []
        self.points = points or []

    @property
    def is_leaf(self):
        return self.kind == BOLD_LEAF

    def kind_name(self):
        return _KIND_NAMES[self.kind]

    def representative(self):
        return self.points[-1] if self.points else None

    def child_for(self, x):
        if self.kind == SECONDARY and x >= self.split:
            return 1
        return 0

    def child_slab(self, index):
        if self.kind == SECONDARY:
            return (self.lo, self.split) if index == 0 else (self.split, self.hi)
        return self.lo, self.hi

    def add(self, points):
        self.points.extend(points)
        self.points.sort(key=_by_height)

    def __repr__(self):
        return "<BoldNode #%d %s [%r, %r) |pilot|=%d>" % (
            self.pid, self.kind_name(), self.lo, self.hi, len(self.points))


class RepPage(object):
    """The representative page of one base node: per bold node of its
    binary tree, in preorder, ``[pid, representative score, pilot size]``."""

    __slots__ = ('pid', 'slots')

    def __init__(self, pid, nslots):
        self.pid = pid
        self.slots = [[0, None, 0] for _ in range(nslots)]


class TokenLedger(object):
    """Insertion and deletion tokens of the bold nodes.

    Tokens only move from a node to its children.  A token that reaches a
    bold leaf disappears, and so do all tokens of a subtree that is drained
    or rebuilt.  The ledger is bookkeeping for the audit; it lives in
    memory and never touches the disk.
    """

    def __init__(self):
        self.insertion = collections.Counter()
        self.deletion = collections.Counter()
        self.children = {}
        self.leaves = set()

    def register(self, node):
        self.children[node.pid] = [c.pid for c in node.children]
        if node.is_leaf:
            self.leaves.add(node.pid)
        else:
            self.leaves.discard(node.pid)
        self.insertion.pop(node.pid, None)
        self.deletion.pop(node.pid, None)

    def forget(self, pids):
        for pid in pids:
            self.children.pop(pid, None)
            self.leaves.discard(pid)
            self.insertion.pop(pid, None)
            self.deletion.pop(pid, None)

    def give(self, counter, pid, amount=1):
        if pid not in self.leaves:
            counter[pid] += amount

    def pass_down(self, counter, src, dst, amount=1):
        counter[src] -= amount
        self.give(counter, dst, amount)

    def clear_subtree(self, pid):
        stack = [pid]
        while stack:
            cur = stack.pop()
            self.insertion.pop(cur, None)
            self.deletion.pop(cur, None)
            stack.extend(self.children.get(cur, ()))


class PrioritySearchTree(object):
    """Exact top-k range reporting over points ``(x, score)`` with distinct
    coordinates and distinct scores.

    *points* is an optional iterable of ``(x, score)`` pairs to build from.
    """

    def __init__(self, disk, points=()):
        if disk.B < 4:
            raise ConfigError("the big-k tree needs B >= 4, got %d" % disk.B)
        self.disk = disk
        self.pager = Pager(disk)
        self.B = disk.B
        self.base = WbbTree(self.pager, WbbParams(self.B, self.B),
                            payload_words=2, leaf_keys=True)
        self.index = OSTree.create(self.pager, key_width=1, value_width=1)
        self.ledger = None
        self.stats = collections.Counter()
        self.last_query = {}
        self.n_built = 0
        self._n = 0
        self._troot = None
        self._root_rep = None
        self._nodes = None
        self._dirty = None
        self._reps = None
        self._rep_dirty = None
        self.build(points)

    def __len__(self):
        return self._n

    # -- page codecs ---------------------------------------------------------

    def _bold_words(self):
        return 9 + 3 * 2 + 1 + 2 * (2 * self.B + 2)

    def _rep_words(self):
        return 1 + 3 * (2 * (4 * self.B + 4) - 1)

    def _new_bold_page(self):
        return self.pager.allocate(self._bold_words())

    def _new_rep_page(self):
        return self.pager.allocate(self._rep_words())

    def _load_node(self, pid):
        w = self.pager.load(pid)
        node = BoldNode(pid, w[0], w[1], w[2], decode_real(w[3]), decode_real(w[4]),
                        w[5], w[6], decode_real(w[7]))
        pos = 9
        for _ in range(w[8]):
            node.children.append(ChildRef(w[pos], w[pos + 1], w[pos + 2]))
            pos += 3
        npts = w[pos]
        pos += 1
        node.points = [Point(decode_real(w[pos + 2 * i]), decode_real(w[pos + 2 * i + 1]))
                       for i in range(npts)]
        return node

    def _store_node(self, node):
        out = [node.kind, node.home, node.slot, encode_real(node.lo), encode_real(node.hi),
               node.first, node.last, encode_real(node.split), len(node.children)]
        for c in node.children:
            out.extend(c)
        out.append(len(node.points))
        for p in node.points:
            out.append(encode_real(p.x))
            out.append(encode_real(p.y))
        self.pager.store(node.pid, out)

    def _load_rep(self, pid):
        w = self.pager.load(pid)
        page = RepPage(pid, w[0] if w else 0)
        for i, s in enumerate(page.slots):
            pid_, yw, count = w[1 + 3 * i:4 + 3 * i]
            s[:] = [pid_, decode_real(yw) if count else None, count]
        return page

    def _store_rep(self, page):
        out = [len(page.slots)]
        for pid, y, count in page.slots:
            out.extend((pid, encode_real(y) if count else 0, count))
        self.pager.store(page.pid, out)

    # -- per-operation page cache ---------------------------------------------

    @contextlib.contextmanager
    def _session(self, name):
        """Scope one public operation: every page is read at most once and
        written at most once, when the operation ends."""
        if self._nodes is not None:
            yield
            return
        self._nodes, self._dirty = {}, set()
        self._reps, self._rep_dirty = {}, set()
        with self.disk.budget.operation(name):
            try:
                yield
                self._flush()
            finally:
                self._nodes = self._dirty = self._reps = self._rep_dirty = None

    def _node(self, pid):
        node = self._nodes.get(pid)
        if node is None:
            node = self._nodes[pid] = self._load_node(pid)
        return node

    def _rep(self, pid):
        page = self._reps.get(pid)
        if page is None:
            page = self._reps[pid] = self._load_rep(pid)
        return page

    def _touch(self, node):
        self._dirty.add(node.pid)

    def _adopt(self, node):
        self._nodes[node.pid] = node
        self._dirty.add(node.pid)
        if self.ledger is not None:
            self.ledger.register(node)

    def _rep_of(self, child):
        """``(score, size)`` of the representative of *child*, a
        :class:`ChildRef`, from its representative page."""
        node = self._nodes.get(child.pid)
        if node is not None:
            rep = node.representative()
            return (rep.y if rep else None), len(node.points)
        _, y, count = self._rep(child.home).slots[child.slot]
        return y, count

    def _flush(self):
        for pid in self._dirty:
            node = self._nodes[pid]
            node.points.sort(key=_by_height)
            self._store_node(node)
            rep = node.representative()
            page = self._rep(node.home)
            page.slots[node.slot] = [pid, rep.y if rep else None, len(node.points)]
            self._rep_dirty.add(node.home)
        for pid in self._rep_dirty:
            self._store_rep(self._reps[pid])

    # -- building --------------------------------------------------------------

    def build(self, points=()):
        """Replace the content with *points* and rebuild every page.  Base
        tree keys of deleted points are dropped."""
        pts = sorted(Point(float(x), float(y)) for x, y in points)
        for a, b in zip(pts, pts[1:]):
            if a.x == b.x:
                raise DuplicateKeyError(a.x)
        self.ledger = TokenLedger() if _g_token_ledger else None
        with self._session('build'):
            root = self.base.load(self.base.root)
            rep_pid, troot = root.payload
            if troot:
                self._ground(troot, rep_pid)
            else:
                rep_pid, troot = self._new_rep_page(), self._new_bold_page()
            self.index.destroy()
            self.index = OSTree.bulk_load(
                self.pager, [((encode_real(p.x),), (encode_real(p.y),)) for p in pts],
                key_width=1, value_width=1)
            top = self.base.rebuild_subtree(self.base.root, [p.x for p in pts])
            self.base.set_payload(top, [rep_pid, troot])
            self._troot, self._root_rep = troot, rep_pid
            self._plant(top, rep_pid, troot)
            self._fill(troot, pts)
        self._n = self.n_built = len(pts)
        LOG.debug("built big-k tree over %d points", len(pts))

    def _ground(self, troot, keep_rep):
        """Collect the pilot points of the bold subtree at *troot* and
        release its pages, except *troot* and the page *keep_rep*."""
        points = []
        homes = set()
        freed = []
        stack = [troot]
        while stack:
            node = self._node(stack.pop())
            points.extend(node.points)
            homes.add(node.home)
            stack.extend(c.pid for c in node.children)
            if node.pid != troot:
                freed.append(node.pid)
        for pid in freed:
            self.pager.release(pid)
            self._nodes.pop(pid, None)
            self._dirty.discard(pid)
        homes.discard(keep_rep)
        for pid in homes:
            self.pager.release(pid)
            self._reps.pop(pid, None)
            self._rep_dirty.discard(pid)
        if self.ledger is not None:
            self.ledger.forget(freed + [troot])
        return points

    def _plant(self, u, rep_pid, troot):
        """Create empty bold nodes for the base subtree at *u*, whose
        binary tree gets *troot* as root and *rep_pid* as its
        representative page."""
        if u.is_leaf:
            self._reps[rep_pid] = RepPage(rep_pid, 1)
            self._rep_dirty.add(rep_pid)
            self._adopt(BoldNode(troot, BOLD_LEAF, rep_pid, 0, u.lo, u.hi))
            return
        f = len(u.children)
        self._reps[rep_pid] = RepPage(rep_pid, 2 * f - 1)
        self._rep_dirty.add(rep_pid)
        self._plant_range(u, 0, f - 1, 0, troot, rep_pid)

    def _plant_range(self, u, i, j, slot, pid, rep_pid):
        lo, hi = u.child_lo[i], u.child_range(j)[1]
        if i == j:
            child = self.base.load(u.children[i])
            if child.is_leaf:
                node = BoldNode(pid, BOLD_LEAF, rep_pid, slot, lo, hi, i, j)
            else:
                c_rep, c_root = child.payload
                if not c_root:
                    c_rep, c_root = self._new_rep_page(), self._new_bold_page()
                    self.base.set_payload(child, [c_rep, c_root])
                node = BoldNode(pid, BRIDGE, rep_pid, slot, lo, hi, i, j,
                                children=[ChildRef(c_root, c_rep, 0)])
                self._plant(child, c_rep, c_root)
        else:
            mid = (i + j) // 2
            right_slot = slot + 2 * (mid - i + 1)
            left, right = self._new_bold_page(), self._new_bold_page()
            node = BoldNode(pid, SECONDARY, rep_pid, slot, lo, hi, i, j,
                            split=u.child_lo[mid + 1],
                            children=[ChildRef(left, rep_pid, slot + 1),
                                      ChildRef(right, rep_pid, right_slot)])
            self._plant_range(u, i, mid, slot + 1, left, rep_pid)
            self._plant_range(u, mid + 1, j, right_slot, right, rep_pid)
        self._adopt(node)

    def _fill(self, troot, points):
        """Hand out *points* top-down under *troot*: every bold node keeps
        the B highest points of its slab that no ancestor took, or all of
        them when fewer are left."""
        stack = [(troot, sorted(points, key=_by_height))]
        while stack:
            pid, pts = stack.pop()
            node = self._nodes[pid]
            if not node.children:
                node.points = pts
                continue
            node.points = pts[:self.B]
            parts = [[] for _ in node.children]
            for p in pts[self.B:]:
                parts[node.child_for(p.x)].append(p)
            stack.extend((c.pid, part) for c, part in zip(node.children, parts))
        # a freshly built subtree owes no tokens
        if self.ledger is not None:
            self.ledger.clear_subtree(troot)

    # -- updates ---------------------------------------------------------------

    def lookup(self, x):
        """Score of the point at *x*, or None."""
        value = self.index.get((encode_real(x),))
        return None if value is None else decode_real(value[0])

    def insert(self, x, y):
        p = Point(float(x), float(y))
        with self._session('insert'):
            key = (encode_real(p.x),)
            if self.index.get(key) is not None:
                raise DuplicateKeyError(p.x)
            self.index.insert(key, (encode_real(p.y),))
            path = self.base.locate_leaf(p.x)
            report = None
            # a deleted point leaves its x in the base tree for reuse
            if p.x not in path[-1].keys:
                report = self.base.insert_key(p.x, path)
            # land on the first node that beats p, or on a non-full node
            # with nothing below it
            pid = self._descend(path, p.x, lambda ry, count, below_empty: (
                2 * count < self.B or
                (count < self.B and below_empty()) or
                p.y > ry))
            v = self._node(pid)
            v.add([p])
            self._touch(v)
            if self.ledger is not None:
                self.ledger.give(self.ledger.insertion, v.pid)
            if len(v.points) > 2 * self.B:
                self.push_down(v)
            if report is not None:
                self._rebalance(report)
        self._n += 1

    def delete(self, x):
        """Remove the point at *x* and return its score."""
        x = float(x)
        with self._session('delete'):
            key = (encode_real(x),)
            value = self.index.get(key)
            if value is None:
                raise MissingKeyError(x)
            y = decode_real(value[0])
            self.index.delete(key)
            p = Point(x, y)
            path = self.base.locate_leaf(x)
            pid = self._descend(path, x, lambda ry, count, _: count > 0 and y >= ry)
            v = self._node(pid)
            try:
                v.points.remove(p)
            except ValueError:
                raise MissingKeyError(x)
            self._touch(v)
            if self.ledger is not None:
                self.ledger.give(self.ledger.deletion, v.pid)
            if self._underflows(v):
                self._remedy(v)
        self._n -= 1
        return y

    def _descend(self, path, x, stop):
        """Walk the bold nodes over *x* using only the representative pages
        of the base nodes on *path*.  Returns the pid of the first node
        where ``stop(score, size, below_empty)`` holds, or of the bold
        leaf.  ``below_empty()`` tells whether every child of the node
        has an empty pilot set."""
        for depth, u in enumerate(path):
            rep_pid = u.payload[0]
            page = self._rep(rep_pid)
            if u.is_leaf:
                return page.slots[0][0]
            ci = u.route(x)
            i, j, slot = 0, len(u.children) - 1, 0
            while True:
                pid, y, count = page.slots[slot]
                mid = (i + j) // 2
                if i < j:
                    below = (page.slots[slot + 1], page.slots[slot + 2 * (mid - i + 1)])
                    below_empty = lambda below=below: not any(s[2] for s in below)
                elif u.level == 1:
                    below_empty = lambda: True
                else:
                    # a bridge hangs over the top of the next base node's page
                    nxt = path[depth + 1].payload[0]
                    below_empty = lambda nxt=nxt: not self._rep(nxt).slots[0][2]
                if stop(y, count, below_empty):
                    return pid
                if i == j:
                    if u.level == 1:
                        return pid
                    break
                if ci <= mid:
                    j = mid
                    slot += 1
                else:
                    slot += 2 * (mid - i + 1)
                    i = mid + 1
        raise UsageError("bold descent for %r fell off the tree" % x)

    def push_down(self, v):
        """Move the ``|pilot(v)| - B`` lowest points of *v* to its
        children, cascading into children that overflow."""
        if len(v.points) <= 2 * self.B or not v.children:
            return
        v.points.sort(key=_by_height)
        moved = v.points[self.B:]
        del v.points[self.B:]
        self._touch(v)
        self.stats['push_downs'] += 1
        self.stats['demotions'] += len(moved)
        targets = {}
        for p in moved:
            idx = v.child_for(p.x)
            targets.setdefault(idx, []).append(p)
        for idx, pts in sorted(targets.items()):
            child = self._node(v.children[idx].pid)
            child.add(pts)
            self._touch(child)
            if self.ledger is not None:
                self.ledger.pass_down(self.ledger.insertion, v.pid, child.pid, len(pts))
        for idx in sorted(targets):
            child = self._node(v.children[idx].pid)
            if len(child.points) > 2 * self.B:
                self.push_down(child)

    def _underflows(self, v):
        if 2 * len(v.points) >= self.B:
            return False
        return any(self._node(c.pid).points for c in v.children)

    def pull_up(self, v):
        """Move the ``min(B/2, B - |pilot(v)|)`` highest points of the
        children of *v* into *v*.  Returns True for a draining pull-up,
        one that found fewer points than requested."""
        want = min((self.B + 1) // 2, self.B - len(v.points))
        if want <= 0:
            return False
        children = [self._node(c.pid) for c in v.children]
        pool = sorted(((p, child) for child in children for p in child.points),
                      key=lambda pc: -pc[0].y)
        draining = len(pool) < want
        moved = pool[:want]
        for p, child in moved:
            child.points.remove(p)
            self._touch(child)
            if self.ledger is not None:
                self.ledger.pass_down(self.ledger.deletion, v.pid, child.pid)
        v.add([p for p, _ in moved])
        self._touch(v)
        self.stats['pull_ups'] += 1
        self.stats['promotions'] += len(moved)
        if draining:
            self.stats['draining'] += 1
            if self.ledger is not None:
                self.ledger.clear_subtree(v.pid)
        return draining

    def _remedy(self, v):
        for _ in range(2):
            if len(v.points) >= self.B:
                return
            if not any(self._node(c.pid).points for c in v.children):
                return
            if self.pull_up(v):
                return
            for c in v.children:
                child = self._node(c.pid)
                if self._underflows(child):
                    self._remedy(child)

    def _rebalance(self, report):
        path, depth = report
        u = path[0] if depth == 0 else path[depth - 1]
        rep_pid, troot = u.payload
        before = self.disk.stats_snapshot()
        points = self._ground(troot, rep_pid)
        keys = self.base.collect_keys(u.pid)
        top = self.base.rebuild_subtree(u.pid, keys)
        self._plant(top, rep_pid, troot)
        self._fill(troot, points)
        self.stats['rebuilds'] += 1
        self.stats['rebuild_io'] += (self.disk.stats_snapshot() - before).total
        LOG.debug("rebuilt base subtree #%d (level %d, %d points)", u.pid, top.level, len(points))

    # -- queries ---------------------------------------------------------------

    def _lg(self):
        built = int(math.ceil(math.log(max(2, 2 * self.n_built), 2)))
        return max(1, built, self._n.bit_length())

    def _bold_path(self, x):
        node = self._node(self._troot)
        path = [node]
        while node.children:
            node = self._node(node.children[node.child_for(x)].pid)
            path.append(node)
        return path

    def _expand(self, ref):
        node = self._node(ref.handle.child.pid)
        out = []
        for idx, child in enumerate(node.children):
            y, count = self._rep_of(child)
            if count:
                out.append(heapselect.HeapNodeRef(y, _HeapSlot(child, node, idx)))
        return out

    def query_topk(self, x1, x2, k):
        """The min(k, |S ∩ [x1, x2]|) highest points with x in ``[x1, x2]``,
        highest first."""
        if x1 > x2:
            raise RangeError("empty query range [%r, %r]" % (x1, x2))
        if k < 0:
            raise UsageError("k must not be negative, got %r" % k)
        if k == 0 or self._n == 0:
            return []
        with self._session('query'):
            p1, p2 = self._bold_path(x1), self._bold_path(x2)
            common = 0
            for a, b in zip(p1, p2):
                if a.pid != b.pid:
                    break
                common += 1
            below = p1[common - 1:] + p2[common:]
            on_path = set(n.pid for n in p1) | set(n.pid for n in p2)

            def inside(lo, hi):
                return x1 <= lo and hi <= x2

            found = {}

            def collect(node):
                for p in node.points:
                    if x1 <= p.x <= x2:
                        found[p.x] = p

            for node in p1 + p2[common:]:
                collect(node)
            q1 = len(found)

            roots = []
            for node in below:
                for idx, child in enumerate(node.children):
                    if child.pid in on_path or not inside(*node.child_slab(idx)):
                        continue
                    y, count = self._rep_of(child)
                    if count:
                        roots.append(heapselect.HeapNodeRef(y, _HeapSlot(child, node, idx)))
            heap = heapselect.concat_heaps(roots)
            t = PHI * (self._lg() + -(-k // self.B))
            chosen = heapselect.select_top(heap, t, self._expand)
            s_r = set(ref.handle.child.pid for ref in chosen)
            ring = {}
            for ref in chosen:
                node = self._node(ref.handle.child.pid)
                collect(node)
                parent = ref.handle.parent
                for idx, sib in enumerate(parent.children):
                    if (idx != ref.handle.index and sib.pid not in s_r
                            and inside(*parent.child_slab(idx))):
                        ring[sib.pid] = sib
                for child in node.children:
                    ring[child.pid] = child
            q2 = len(found)
            for pid in ring:
                if pid not in s_r:
                    collect(self._node(pid))
            result = sorted(found.values(), key=_by_height)[:k]
            self.last_query = dict(q1=q1, q12=q2, candidates=len(found), t=t,
                                   heap_roots=len(roots), selected=len(chosen),
                                   heap_reads=heap.node_reads)
        if _g_audit_queries:
            self._audit_query(x1, x2, k, found)
        return result

    def _audit_query(self, x1, x2, k, found):
        with self.disk.uncharged():
            lo, hi = (encode_real(x1),), (encode_real(x2),)
            truth = sorted((decode_real(v[0]), decode_real(key[0]))
                           for key, v in self.index.iter_range(lo, hi))
        top = [x for _, x in sorted(truth, reverse=True)[:k]]
        missing = [x for x in top if x not in found]
        if missing:
            raise AuditError("top-%d of [%r, %r] misses %d points, e.g. x=%r"
                             % (k, x1, x2, len(missing), missing[0]))

    def report_3sided(self, x1, x2, ymin):
        """Every point in ``[x1, x2] x [ymin, inf)``, highest first."""
        if x1 > x2:
            raise RangeError("empty query range [%r, %r]" % (x1, x2))
        out = []
        if self._n == 0:
            return out
        with self._session('report'):
            stack = [self._troot]
            while stack:
                node = self._node(stack.pop())
                for p in node.points:
                    if p.y < ymin:
                        break
                    if x1 <= p.x <= x2:
                        out.append(p)
                rep = node.representative()
                if rep is None or rep.y < ymin:
                    continue
                for idx, child in enumerate(node.children):
                    lo, hi = node.child_slab(idx)
                    if lo > x2 or (hi <= x1 and hi != POS_INF):
                        continue
                    stack.append(child.pid)
        out.sort(key=_by_height)
        return out

    def points(self):
        return [Point(decode_real(k[0]), decode_real(v[0])) for k, v in self.index.items()]

    # -- inspection --------------------------------------------------------------

    def walk(self):
        """Yield ``(depth, node)`` for every bold node, in preorder.  Reads
        are not charged."""
        with self.disk.uncharged():
            stack = [(0, self._troot)]
            while stack:
                depth, pid = stack.pop()
                node = self._load_node(pid)
                yield depth, node
                stack.extend((depth + 1, c.pid) for c in reversed(node.children))

    def height(self):
        return max(depth for depth, _ in self.walk()) + 1

    def audit_invariants(self):
        """Check the pilot set rules, the representative pages, the base
        tree, point conservation and, with a ledger, the token invariants.
        Nothing is charged."""
        with self.disk.uncharged():
            try:
                self._audit()
            except AssertionError as e:
                return AuditReport.failed(str(e))
        return AuditReport.passed()

    def _audit(self):
        report = self.base.audit()
        assert report, "base tree: %s" % report.violation
        seen = []
        self._audit_node(self._troot, float('-inf'), POS_INF, seen)
        live = sorted(self.points())
        assert len(seen) == len(set(seen)), "a point sits in two pilot sets"
        assert sorted(seen) == live, "pilot sets hold %d points, index %d" % (
            len(seen), len(live))
        assert len(live) == self._n, "live count %d != %d" % (self._n, len(live))

    def _audit_node(self, pid, lo, hi, seen):
        node = self._load_node(pid)
        B = self.B
        assert (node.lo, node.hi) == (lo, hi), "node #%d slab [%r, %r) != [%r, %r)" % (
            pid, node.lo, node.hi, lo, hi)
        assert len(node.points) <= 2 * B, "node #%d pilot overflow (%d)" % (pid, len(node.points))
        ys = [p.y for p in node.points]
        assert ys == sorted(ys, reverse=True), "node #%d pilot out of order" % pid
        for p in node.points:
            assert lo <= p.x < hi or (hi == POS_INF and p.x == POS_INF), \
                "node #%d holds x=%r outside its slab" % (pid, p.x)
        seen.extend(node.points)
        rep = node.representative()
        slot_pid, ry, count = self._load_rep(node.home).slots[node.slot]
        assert slot_pid == pid and count == len(node.points) and \
            ry == (rep.y if rep else None), "representative page stale for #%d" % pid
        below = None
        nonempty = False
        for idx, child in enumerate(node.children):
            clo, chi = node.child_slab(idx)
            cmax, cnonempty = self._audit_node(child.pid, clo, chi, seen)
            nonempty = nonempty or cnonempty
            if cmax is not None and (below is None or cmax > below):
                below = cmax
        if 2 * len(node.points) < B:
            assert not nonempty, "node #%d has %d pilots but a nonempty subtree" % (
                pid, len(node.points))
        if rep is not None and below is not None:
            assert rep.y > below, "node #%d representative %r not above descendant %r" % (
                pid, rep.y, below)
        if self.ledger is not None and not node.is_leaf:
            ins = self.ledger.insertion[pid]
            dels = self.ledger.deletion[pid]
            assert ins >= max(0, len(node.points) - B), \
                "node #%d holds %d insertion tokens for %d pilots" % (pid, ins, len(node.points))
            if nonempty:
                assert dels >= B - len(node.points), \
                    "node #%d holds %d deletion tokens for %d pilots" % (pid, dels, len(node.points))
        top = node.points[0].y if node.points else below
        return top, nonempty or bool(node.points)


""" If true, trees built from now on keep a :class:`TokenLedger`. """
_g_token_ledger = False

""" If true, every big-k query checks that its candidates hold the true
top-k. """
_g_audit_queries = False
