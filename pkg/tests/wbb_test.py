import random

from tests import LimitedTestCase, main, make_disk
from topkrange.errors import RangeError, UsageError
from topkrange.pager import Pager
from topkrange.wbb import (NEG_INF, POS_INF, LeafRange, MultiSlab, WbbParams,
                           WbbTree)


def _covered_x(tree, piece):
    if isinstance(piece, LeafRange):
        return piece.node.lo, piece.node.hi
    lo = piece.node.child_range(piece.first)[0]
    hi = piece.node.child_range(piece.last)[1]
    return lo, hi


class TestWbbParams(LimitedTestCase):
    def test_bounds(self):
        p = WbbParams(4, 8)
        self.assertEqual(p.max_weight(0), 8)
        self.assertEqual(p.max_weight(2), 128)

    def test_rejects(self):
        self.assertRaises(UsageError, WbbParams, 3, 8)
        self.assertRaises(UsageError, WbbParams, 4, 0)


class TestWbbTree(LimitedTestCase):
    def setUp(self):
        super(TestWbbTree, self).setUp()
        self.disk = make_disk(B=16)
        self.pager = Pager(self.disk)
        self.tree = WbbTree(self.pager, WbbParams(4, 8), payload_words=2, leaf_keys=True)

    def test_empty_tree(self):
        root = self.tree.load(self.tree.root)
        self.assertTrue(root.is_leaf)
        self.assertEqual((root.lo, root.hi), (NEG_INF, POS_INF))
        self.assertTrue(self.tree.audit())

    def test_build(self):
        keys = [float(k) for k in range(1000)]
        top = self.tree.build(keys)
        self.assertEqual(top.pid, self.tree.root)
        self.assertEqual(self.tree.size(), 1000)
        self.assertTrue(self.tree.height() >= 4)
        self.assertEqual(self.tree.collect_keys(self.tree.root), keys)
        self.assertTrue(self.tree.audit())

    def test_locate_leaf(self):
        self.tree.build([float(k) for k in range(0, 400, 2)])
        path = self.tree.locate_leaf(101.0)
        self.assertEqual(path[0].pid, self.tree.root)
        for node in path:
            self.assertTrue(node.covers(101.0))
        self.assertTrue(path[-1].is_leaf)

    def test_payload_survives(self):
        self.tree.build([1.0, 2.0, 3.0])
        root = self.tree.load(self.tree.root)
        self.tree.set_payload(root, [11, 12])
        self.assertEqual(self.tree.load(self.tree.root).payload, [11, 12])

    def test_insert_reports_overweight(self):
        self.tree.build([])
        report = None
        for k in range(9):
            report = self.tree.insert_key(float(k))
        self.assertNotEqual(report, None)
        self.assertEqual(report.depth, 0)

    def test_split_root_leaf(self):
        self.tree.build([])
        for k in range(8):
            self.assertEqual(self.tree.insert_key(float(k)), None)
        path = self.tree.locate_leaf(8.0)
        report = self.tree.insert_key(8.0, path)
        left, right = self.tree.split(report.path, report.depth)
        self.assertEqual(left.hi, right.lo)
        root = self.tree.load(self.tree.root)
        self.assertEqual(root.level, 1)
        self.assertEqual(root.children, [left.pid, right.pid])
        self.assertTrue(self.tree.audit())

    def test_random_inserts_with_rebuilds(self):
        rng = random.Random(7)
        keys = rng.sample(range(100000), 600)
        self.tree.build([])
        for k in keys:
            report = self.tree.insert_key(float(k))
            if report is not None:
                path, depth = report
                u = path[0] if depth == 0 else path[depth - 1]
                self.tree.rebuild_subtree(u.pid, self.tree.collect_keys(u.pid))
        self.assertEqual(self.tree.collect_keys(self.tree.root), sorted(float(k) for k in keys))
        self.assertTrue(self.tree.audit(), self.tree.audit().violation)
        self.assertTrue(sum(self.tree.rebuilds.values()) > 0)

    def test_split_key_must_lie_inside(self):
        self.tree.build([float(k) for k in range(200)])
        path = self.tree.locate_leaf(100.0)
        self.assertTrue(len(path) > 1)
        leaf = path[-1]
        self.assertTrue(float('-inf') < leaf.lo <= 100.0 < leaf.hi < float('inf'))
        depth = len(path) - 1
        self.assertRaises(UsageError, self.tree.split, path, depth, 1e9)
        self.assertRaises(UsageError, self.tree.split, path, depth, -1e9)
        self.assertRaises(UsageError, self.tree.split, path, depth, leaf.lo)
        self.assertRaises(UsageError, self.tree.split, path, depth, leaf.hi)

    def test_canonical_ranges_partition_query(self):
        keys = [float(k) for k in range(0, 2000, 2)]
        self.tree.build(keys)
        rng = random.Random(11)
        for _ in range(50):
            a, b = sorted(rng.sample(keys, 2))
            pieces = self.tree.canonical_ranges(a, b)
            got = []
            for piece in pieces:
                lo, hi = _covered_x(self.tree, piece)
                if isinstance(piece, MultiSlab):
                    self.assertTrue(a <= lo and hi <= b)
                got.extend(k for k in keys if lo <= k < hi and a <= k <= b)
            self.assertEqual(got, [k for k in keys if a <= k <= b])
            leaves = [p for p in pieces if isinstance(p, LeafRange)]
            self.assertTrue(len(leaves) <= 2)

    def test_canonical_inside_one_leaf(self):
        self.tree.build([float(k) for k in range(100)])
        leaf = self.tree.locate_leaf(50.0)[-1]
        pieces = self.tree.canonical_ranges(leaf.lo, leaf.lo)
        self.assertEqual(len(pieces), 1)
        self.assertTrue(isinstance(pieces[0], LeafRange))

    def test_canonical_rejects_empty(self):
        self.assertRaises(RangeError, self.tree.canonical_ranges, 2.0, 1.0)

    def test_audit_catches_weight(self):
        self.tree.build([float(k) for k in range(100)])
        leaf = self.tree.locate_leaf(3.0)[-1]
        leaf.weight += 1
        self.tree.store(leaf)
        self.assertFalse(self.tree.audit())


if __name__ == '__main__':
    main()
