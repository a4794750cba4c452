import math
import random
import warnings

from tests import LimitedTestCase, main, make_disk, random_points
from topkrange import debug
from topkrange.bench import CANDIDATE_BOUND
from topkrange.disk import encode_real
from topkrange.errors import (AuditError, DuplicateKeyError, MissingKeyError,
                              RangeError, RegimeWarning, UsageError)
from topkrange.pst import Point
from topkrange.smallk import MIN_N, SmallKTree


def oracle_rank(state, x1, x2, y):
    return sum(1 for x, s in state.items() if x1 <= x <= x2 and s >= y)


class SmallKCase(LimitedTestCase):
    L = 4

    def setUp(self):
        super(SmallKCase, self).setUp()
        self.warnings = warnings.catch_warnings()
        self.warnings.__enter__()
        warnings.simplefilter('ignore', RegimeWarning)
        self.rng = random.Random(17)
        self.disk = make_disk(B=16)

    def tearDown(self):
        self.warnings.__exit__(None, None, None)
        super(SmallKCase, self).tearDown()

    def tree(self, points=(), l=None):
        return SmallKTree(self.disk, l or self.L, points, branching=4, leaf_capacity=8)

    def random_range(self, state, k):
        xs = sorted(state)
        while True:
            a, b = sorted(self.rng.sample(range(len(xs)), 2))
            if b - a + 1 >= k:
                return xs[a], xs[b]


class TestBuild(SmallKCase):
    def test_build(self):
        pts = random_points(self.rng, 300)
        tree = self.tree(pts)
        self.assertEqual(len(tree), 300)
        self.assertEqual(tree.N, 600)
        self.assertEqual(tree.c2l, 32)
        self.assertTrue(tree.base.height() > 2)
        self.assertEqual(sorted(tree.points()), sorted(Point(x, y) for x, y in pts))
        self.assertAudited(tree)

    def test_empty(self):
        tree = self.tree()
        self.assertEqual(tree.N, MIN_N)
        self.assertEqual(MIN_N, 16)
        self.assertAudited(tree)
        self.assertRaises(UsageError, tree.select_approx, 0, 1, 1)

    def test_duplicates_rejected(self):
        self.assertRaises(DuplicateKeyError, self.tree, [(1, 5), (1, 6)])
        self.assertRaises(DuplicateKeyError, self.tree, [(1, 5), (2, 5)])

    def test_default_parameters(self):
        tree = SmallKTree(self.disk, 4, random_points(self.rng, 100))
        f = max(4, int(round(math.sqrt(16 * math.log(200, 2)))))
        self.assertEqual(tree.base.params, (f, f * 4 * 16))

    def test_regime_warning(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always')
            tree = SmallKTree(make_disk(B=16), 2, branching=4, leaf_capacity=8)
        self.assertTrue(any(w.category is RegimeWarning for w in caught))
        self.assertTrue(tree.block_budget > 1)

    def test_rebuild_with_new_l(self):
        tree = self.tree(random_points(self.rng, 100))
        tree.build(tree.points(), l=2)
        self.assertEqual(tree.c2l, 16)
        self.assertAudited(tree)


class TestSelect(SmallKCase):
    def setUp(self):
        super(TestSelect, self).setUp()
        self.pts = random_points(self.rng, 400)
        self.state = dict(self.pts)
        self.smallk = self.tree(self.pts)

    def test_rank_window(self):
        debug.audit_queries(True)
        for _ in range(150):
            k = self.rng.randint(1, self.L)
            x1, x2 = self.random_range(self.state, k)
            p = self.smallk.select_approx(x1, x2, k)
            self.assertTrue(x1 <= p.x <= x2)
            self.assertEqual(self.state[p.x], p.y)
            r = oracle_rank(self.state, x1, x2, p.y)
            self.assertTrue(k <= r <= CANDIDATE_BOUND * k, "k=%d rank=%d" % (k, r))
            self.assertEqual(self.smallk.last_select['rank'], r)
        self.assertTrue(self.smallk.max_ratio <= CANDIDATE_BOUND)

    def test_wide_ranges_use_groups(self):
        xs = sorted(self.state)
        for k in range(1, self.L + 1):
            p = self.smallk.select_approx(xs[0], xs[-1], k)
            r = oracle_rank(self.state, xs[0], xs[-1], p.y)
            self.assertTrue(k <= r <= CANDIDATE_BOUND * k)
        self.assertTrue(self.smallk.last_select['sources'] > 0)

    def test_narrow_range_is_exact(self):
        xs = sorted(self.state)
        for i in range(0, 390, 37):
            x1, x2 = xs[i], xs[i + 2]
            p = self.smallk.select_approx(x1, x2, 2)
            self.assertEqual(oracle_rank(self.state, x1, x2, p.y), 2)
        self.assertTrue(self.smallk.leaf_reads > 0)

    def test_errors(self):
        self.assertRaises(RangeError, self.smallk.select_approx, 5, 1, 1)
        self.assertRaises(UsageError, self.smallk.select_approx, 0, 1, 0)
        self.assertRaises(UsageError, self.smallk.select_approx, 0, 1, self.L + 1)
        x = sorted(self.state)[5]
        self.assertRaises(UsageError, self.smallk.select_approx, x, x, 2)

    def test_audit_flags_low_rank(self):
        debug.audit_queries(True)
        xs = sorted(self.state)
        top = max(self.state.values()) + 1
        self.assertRaises(AuditError, self.smallk._audit_select, xs[0], xs[-1], 1,
                          Point(xs[0], top))

    def test_audit_detects_stale_group(self):
        root = self.smallk.base.load(self.smallk.base.root)
        group = self.smallk._group(root)
        group.delete(0, group.element_at(0, 1))
        self.assertFalse(self.smallk.audit_invariants())


class TestUpdates(SmallKCase):
    def test_inserts_from_empty(self):
        tree = self.tree()
        state = {}
        for i, (x, y) in enumerate(random_points(self.rng, 300)):
            tree.insert(x, y)
            state[x] = y
            if i % 50 == 0:
                self.assertAudited(tree)
        self.assertAudited(tree)
        self.assertTrue(tree.rebuilds > 0)
        for _ in range(40):
            k = self.rng.randint(1, self.L)
            x1, x2 = self.random_range(state, k)
            r = oracle_rank(state, x1, x2, tree.select_approx(x1, x2, k).y)
            self.assertTrue(k <= r <= CANDIDATE_BOUND * k)

    def test_mixed_fuzz(self):
        pool = random_points(self.rng, 500)
        tree = self.tree(pool[:150])
        state = dict(pool[:150])
        pool = pool[150:]
        for step in range(400):
            if self.rng.random() < 0.45 and len(state) > 10:
                x = self.rng.choice(sorted(state))
                self.assertEqual(tree.delete(x), state.pop(x))
            else:
                x, y = pool.pop()
                tree.insert(x, y)
                state[x] = y
            if step % 40 == 0:
                self.assertAudited(tree)
                k = self.rng.randint(1, self.L)
                x1, x2 = self.random_range(state, k)
                r = oracle_rank(state, x1, x2, tree.select_approx(x1, x2, k).y)
                self.assertTrue(k <= r <= CANDIDATE_BOUND * k)
        self.assertAudited(tree)

    def test_delete_global_max(self):
        pts = random_points(self.rng, 200)
        tree = self.tree(pts)
        for _ in range(5):
            best = max(tree.points(), key=lambda p: p.y)
            self.assertEqual(tree.delete(best.x), best.y)
            self.assertAudited(tree)

    def test_insert_global_max(self):
        tree = self.tree(random_points(self.rng, 200))
        tree.insert(-5.0, 1e9)
        tree.insert(1e9, 1e9 + 1)
        self.assertAudited(tree)
        root = tree.base.load(tree.base.root)
        self.assertEqual(tree._group(root).top(2), [encode_real(1e9 + 1), encode_real(1e9)])

    def test_update_errors(self):
        tree = self.tree([(1.0, 10.0), (2.0, 20.0)])
        self.assertRaises(DuplicateKeyError, tree.insert, 3.0, 10.0)
        self.assertRaises(DuplicateKeyError, tree.insert, 1.0, 30.0)
        self.assertRaises(MissingKeyError, tree.delete, 5.0)
        self.assertEqual(len(tree), 2)
        self.assertAudited(tree)

    def test_global_rebuild_on_growth(self):
        tree = self.tree()
        for i in range(MIN_N + 1):
            tree.insert(float(i), float(i))
        self.assertEqual(tree.rebuilds, 1)
        self.assertEqual(tree.N, 2 * (MIN_N + 1))

    def test_global_rebuild_on_shrink(self):
        tree = self.tree([(float(i), float(i)) for i in range(40)])
        self.assertEqual(tree.N, 80)
        for i in range(21):
            tree.delete(float(i))
        self.assertEqual(tree.rebuilds, 1)
        self.assertEqual(tree.N, 2 * 19)
        self.assertAudited(tree)


if __name__ == '__main__':
    main()
