import random
import warnings

from tests import LimitedTestCase, main, make_disk, random_points
from topkrange import debug
from topkrange.bench import oracle_topk
from topkrange.errors import (AuditError, DuplicateKeyError, MissingKeyError,
                              RangeError, RegimeWarning, UsageError)
from topkrange.pst import Point
from topkrange.topk import FacadeConfig, TopkRange


class TestFacadeConfig(LimitedTestCase):
    def test_defaults(self):
        cfg = FacadeConfig()
        self.assertEqual(cfg.k_threshold, None)
        self.assertEqual(cfg.rebuild_factor, 2)
        self.assertTrue('rebuild_factor=2' in repr(cfg))

    def test_validation(self):
        self.assertRaises(UsageError, FacadeConfig, k_threshold=1)
        self.assertRaises(UsageError, FacadeConfig, rebuild_factor=1)
        FacadeConfig(k_threshold=2, rebuild_factor=1.5)


class FacadeCase(LimitedTestCase):
    THRESHOLD = 5

    def setUp(self):
        super(FacadeCase, self).setUp()
        self.warnings = warnings.catch_warnings()
        self.warnings.__enter__()
        warnings.simplefilter('ignore', RegimeWarning)
        self.rng = random.Random(23)
        self.disk = make_disk(B=16)

    def tearDown(self):
        self.warnings.__exit__(None, None, None)
        super(FacadeCase, self).tearDown()

    def facade(self, points=(), threshold=None):
        cfg = FacadeConfig(k_threshold=threshold or self.THRESHOLD)
        return TopkRange(self.disk, points, cfg, branching=4, leaf_capacity=8)

    def check_query(self, facade, state, x1, x2, k):
        got = [(p.x, p.y) for p in facade.topk(x1, x2, k)]
        want = [(p.x, p.y) for p in oracle_topk(state, x1, x2, k)]
        self.assertEqual(got, want, "top-%d of [%r, %r]" % (k, x1, x2))


class TestThreshold(FacadeCase):
    def test_threshold_from_n(self):
        facade = TopkRange(make_disk(B=16))
        self.assertEqual(facade.k_threshold, 16)
        self.assertEqual(facade.smallk.l, 15)
        self.assertEqual(facade.threshold_for(1000), 160)
        self.assertEqual(facade.threshold_for(1024), 160)
        self.assertEqual(facade.threshold_for(1025), 176)

    def test_threshold_floor(self):
        facade = TopkRange(make_disk(B=8), config=FacadeConfig())
        self.assertEqual(facade.threshold_for(0), 8)
        self.assertEqual(facade.threshold_for(2), 8)

    def test_fixed_threshold(self):
        facade = self.facade(threshold=7)
        self.assertEqual(facade.k_threshold, 7)
        self.assertEqual(facade.threshold_for(1 << 20), 7)
        self.assertEqual(facade.smallk.l, 6)


class TestQueries(FacadeCase):
    def setUp(self):
        super(TestQueries, self).setUp()
        self.pts = random_points(self.rng, 300)
        self.state = dict(self.pts)
        self.topk = self.facade(self.pts)
        self.xs = sorted(self.state)

    def random_range(self):
        a, b = sorted(self.rng.sample(range(len(self.xs)), 2))
        return self.xs[a], self.xs[b]

    def test_small_k_matches_oracle(self):
        for _ in range(400):
            x1, x2 = self.random_range()
            self.check_query(self.topk, self.state, x1, x2, self.rng.randint(1, 4))
        self.assertTrue(self.topk.stats['small-k'] >= 400)
        self.assertEqual(self.topk.stats['big-k'], 0)

    def test_big_k_matches_oracle(self):
        for _ in range(300):
            x1, x2 = self.random_range()
            self.check_query(self.topk, self.state, x1, x2, self.rng.randint(5, 60))
            self.assertEqual(self.topk.last_query['path'], 'big-k')
        self.assertEqual(self.topk.stats['small-k'], 0)

    def test_big_k_reads_each_page_once(self):
        x1, x2 = self.xs[20], self.xs[250]
        got = self.assertIoAtMost(self.disk, lambda: self.topk.topk(x1, x2, 40),
                                  self.disk.blocks_in_use)
        self.assertEqual(got, oracle_topk(self.state, x1, x2, 40))

    def test_ranges_between_points(self):
        for _ in range(200):
            x1 = self.rng.uniform(-10, 1 << 20)
            x2 = x1 + self.rng.uniform(0, 1 << 18)
            self.check_query(self.topk, self.state, x1, x2, self.rng.randint(1, 12))

    def test_small_k_candidates(self):
        x1, x2 = self.xs[0], self.xs[-1]
        top = self.topk.topk(x1, x2, 3)
        self.assertEqual(top, oracle_topk(self.state, x1, x2, 3))
        info = self.topk.last_query
        self.assertEqual(info['path'], 'small-k')
        self.assertEqual(info['in_range'], 300)
        self.assertTrue(3 <= info['candidates'] <= 192 * 3)

    def test_whole_range_answer(self):
        x1, x2 = self.xs[10], self.xs[12]
        got = self.topk.topk(x1, x2, 4)
        self.assertEqual(len(got), 3)
        self.assertEqual(got, oracle_topk(self.state, x1, x2, 4))
        self.assertEqual(self.topk.stats['whole-range'], 1)
        self.assertEqual(self.topk.topk(-50.0, -1.0, 2), [])

    def test_count(self):
        self.assertEqual(self.topk.count(self.xs[0], self.xs[-1]), 300)
        self.assertEqual(self.topk.count(self.xs[5], self.xs[9]), 5)
        self.assertEqual(self.topk.count(self.xs[5] + 0.5, self.xs[5] + 0.75), 0)

    def test_errors(self):
        self.assertRaises(RangeError, self.topk.topk, 5, 1, 1)
        self.assertRaises(UsageError, self.topk.topk, 1, 5, 0)
        self.assertRaises(MissingKeyError, self.topk.delete, -1.0)

    def test_duplicates(self):
        x, y = self.pts[0]
        self.assertRaises(DuplicateKeyError, self.topk.insert, x, -1.0)
        self.assertRaises(DuplicateKeyError, self.topk.insert, -1.0, y)
        self.assertEqual(len(self.topk), 300)
        self.assertAudited(self.topk)

    def test_injected_low_selection(self):
        top = max(self.state.values()) + 1
        self.topk.smallk.select_approx = lambda x1, x2, k: Point(x1, top)
        self.assertRaises(AuditError, self.topk.topk, self.xs[0], self.xs[-1], 2)

    def test_audit_mismatched_points(self):
        self.assertAudited(self.topk)
        self.topk.bigk.delete(self.xs[0])
        self.assertFalse(self.topk.audit_invariants())


class TestUpdates(FacadeCase):
    def test_delete_returns_score(self):
        pts = random_points(self.rng, 50)
        facade = self.facade(pts)
        x, y = pts[7]
        self.assertEqual(facade.delete(x), y)
        self.assertEqual(len(facade), 49)
        self.assertEqual(facade.count(x, x), 0)
        self.assertAudited(facade)

    def test_rebuild_after_doubling(self):
        facade = self.facade()
        self.assertEqual(facade.rebuilds, 1)
        for i in range(16):
            facade.insert(float(i), float(i))
        self.assertEqual(facade.rebuilds, 2)
        self.assertEqual(facade.n_built, 16)
        for i in range(8):
            facade.delete(float(i))
        self.assertEqual(facade.rebuilds, 3)
        self.assertEqual(facade.n_built, 8)
        self.assertAudited(facade)

    def test_threshold_follows_rebuilds(self):
        facade = TopkRange(self.disk, config=FacadeConfig(), branching=4, leaf_capacity=8)
        for i in range(40):
            facade.insert(float(i), float(i))
        self.assertEqual(facade.n_built, 32)
        self.assertEqual(facade.k_threshold, 16 * 5)
        self.assertEqual(facade.smallk.l, 16 * 5 - 1)

    def test_fuzz(self):
        debug.audit_queries(True)
        pool = random_points(self.rng, 600)
        facade = self.facade(pool[:100])
        state = dict(pool[:100])
        pool = pool[100:]
        # grow past twice the built size, then shrink below half of it
        for step in range(500):
            growing = step < 200
            if step == 200:
                self.assertTrue(facade.n_built >= 200, facade.n_built)
            if self.rng.random() < 0.75:
                if growing:
                    x, y = pool.pop()
                    facade.insert(x, y)
                    state[x] = y
                elif len(state) > 5:
                    x = self.rng.choice(sorted(state))
                    self.assertEqual(facade.delete(x), state.pop(x))
            else:
                xs = sorted(state)
                a, b = sorted(self.rng.sample(range(len(xs)), 2))
                self.check_query(facade, state, xs[a], xs[b], self.rng.randint(1, 20))
            if step % 50 == 0:
                self.assertAudited(facade)
        self.assertAudited(facade)
        self.assertTrue(facade.n_built < 100, facade.n_built)
        self.assertTrue(facade.rebuilds >= 3, facade.rebuilds)


if __name__ == '__main__':
    main()
