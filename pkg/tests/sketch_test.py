import random

from tests import LimitedTestCase, main
from topkrange.errors import BitBudgetError, UsageError
from topkrange.sketch import (C3, NEG_INF, BitReader, BitWriter, CompressedSketchSet,
                              build_sketch, ceil_lg, fresh_rank, in_window,
                              pivot_count, sketch_union_select, union_lower_bound)


def union_rank(sets, v):
    return sum(1 for s in sets for e in s if e >= v)


class TestHelpers(LimitedTestCase):
    def test_ceil_lg(self):
        self.assertEqual([ceil_lg(n) for n in (0, 1, 2, 3, 4, 5, 128, 129)],
                         [0, 0, 1, 2, 2, 3, 7, 8])

    def test_pivot_count(self):
        self.assertEqual([pivot_count(n) for n in (0, 1, 2, 3, 4, 7, 8, 16)],
                         [0, 1, 2, 2, 3, 3, 4, 5])

    def test_fresh_rank(self):
        self.assertEqual([fresh_rank(j, 100) for j in range(1, 6)], [1, 3, 6, 12, 24])
        self.assertEqual(fresh_rank(4, 8), 8)
        for j in range(1, 8):
            self.assertTrue(in_window(j, fresh_rank(j, 1 << 10)))

    def test_window(self):
        self.assertTrue(in_window(3, 4))
        self.assertTrue(in_window(3, 7))
        self.assertFalse(in_window(3, 8))
        self.assertFalse(in_window(1, 0))


class TestBuildSketch(LimitedTestCase):
    def test_eight_values(self):
        sketch = build_sketch([10, 20, 30, 40, 50, 60, 70, 80])
        self.assertEqual(sketch.ranks, [1, 3, 6, 8])
        self.assertEqual(sketch.pivots, [80, 60, 30, 10])
        self.assertEqual(sketch.size, 8)

    def test_single(self):
        sketch = build_sketch([5])
        self.assertEqual((sketch.pivots, sketch.ranks), ([5], [1]))

    def test_empty(self):
        sketch = build_sketch([])
        self.assertEqual((sketch.pivots, sketch.ranks, sketch.size), ([], [], 0))

    def test_windows_hold(self):
        rng = random.Random(1)
        for _ in range(200):
            values = rng.sample(range(10000), rng.randint(1, 300))
            sketch = build_sketch(values)
            ordered = sorted(values, reverse=True)
            self.assertEqual(len(sketch.pivots), pivot_count(len(values)))
            for j, (v, r) in enumerate(zip(sketch.pivots, sketch.ranks), 1):
                self.assertTrue(in_window(j, r))
                self.assertEqual(ordered[r - 1], v)
            self.assertEqual(sketch.pivots, sorted(sketch.pivots, reverse=True))


class TestUnionSelect(LimitedTestCase):
    def test_c3(self):
        self.assertEqual(C3, 8)

    def test_single_set_k_one(self):
        sketch = build_sketch([3, 9, 4])
        self.assertEqual(sketch_union_select([sketch], 1), 9)

    def test_k_out_of_range(self):
        sketch = build_sketch([1, 2, 3])
        self.assertRaises(UsageError, sketch_union_select, [sketch], 0)
        self.assertRaises(UsageError, sketch_union_select, [sketch], 4)

    def test_lower_bound_never_exceeds_rank(self):
        rng = random.Random(2)
        for _ in range(100):
            sets = _random_sets(rng, rng.randint(1, 4), 32)
            sketches = [build_sketch(s) for s in sets]
            for v in set(p for s in sketches for p in s.pivots):
                self.assertTrue(union_lower_bound(sketches, v) <= union_rank(sets, v))

    def test_small_instances(self):
        rng = random.Random(3)
        worst = 0.0
        for _ in range(150):
            sets = _random_sets(rng, rng.randint(1, 4), 32)
            sketches = [build_sketch(s) for s in sets]
            total = sum(len(s) for s in sets)
            pivots = [p for s in sketches for p in s.pivots]
            for k in range(1, total + 1):
                v = sketch_union_select(sketches, k)
                if v == NEG_INF:
                    for p in pivots:
                        self.assertTrue(union_lower_bound(sketches, p) < k)
                    continue
                r = union_rank(sets, v)
                self.assertTrue(k <= r < C3 * k, "k=%d rank=%d" % (k, r))
                worst = max(worst, r / float(k))
        self.assertTrue(worst < C3)

    def test_identical_sizes_full_k(self):
        rng = random.Random(4)
        for size in (1, 3, 8, 13):
            sets = _random_sets(rng, 3, size, exact=True)
            sketches = [build_sketch(s) for s in sets]
            v = sketch_union_select(sketches, 3 * size)
            if v != NEG_INF:
                self.assertEqual(v, min(e for s in sets for e in s))

    def test_reads_nothing_but_sketches(self):
        # works on sketches alone: values only need to be comparable
        a = build_sketch(['d', 'b'])
        b = build_sketch(['c', 'a'])
        self.assertEqual(sketch_union_select([a, b], 1), 'd')


def _random_sets(rng, m, max_size, exact=False):
    sizes = [max_size if exact else rng.randint(1, max_size) for _ in range(m)]
    pool = rng.sample(range(100000), sum(sizes))
    out = []
    for size in sizes:
        out.append(pool[:size])
        pool = pool[size:]
    return out


class TestBits(LimitedTestCase):
    def test_writer_reader(self):
        out = BitWriter()
        out.write(5, 3)
        out.write(0, 0)
        out.write(1, 1)
        out.write(1023, 10)
        words = out.words(8)
        self.assertEqual(len(words), 2)
        src = BitReader(words, 8)
        self.assertEqual((src.read(3), src.read(0), src.read(1), src.read(10)), (5, 0, 1, 1023))

    def test_writer_rejects_wide_value(self):
        self.assertRaises(UsageError, BitWriter().write, 8, 3)

    def test_reader_truncated(self):
        src = BitReader([0xff], 8)
        src.read(6)
        self.assertRaises(UsageError, src.read, 3)


class TestCompressedSketchSet(LimitedTestCase):
    def test_pivot_bits(self):
        self.assertEqual(CompressedSketchSet.pivot_bits(8, 16), 560)
        self.assertEqual(CompressedSketchSet.total_bits(8, 16), 600)

    def test_budget(self):
        self.assertEqual(CompressedSketchSet.check_budget(8, 16, 16, 64), 600)
        self.assertRaises(BitBudgetError, CompressedSketchSet.check_budget, 8, 16, 8, 64)
        self.assertEqual(CompressedSketchSet.check_budget(8, 16, 8, 64, blocks=2), 600)

    def test_layout(self):
        packed = CompressedSketchSet(1, 2, [2], [[(1, 1), (2, 2)]])
        self.assertEqual(packed.pack(64), [0x8C00000000000000])

    def test_roundtrip(self):
        rng = random.Random(5)
        for _ in range(50):
            f, l = rng.randint(1, 8), rng.randint(1, 40)
            sizes = [rng.randint(0, l) for _ in range(f)]
            pivots = [[(rng.randint(1, f * l), rng.randint(1, l)) for _ in range(pivot_count(n))]
                      for n in sizes]
            packed = CompressedSketchSet(f, l, sizes, pivots)
            words = packed.pack(64)
            self.assertTrue(len(words) * 64 >= CompressedSketchSet.total_bits(f, l))
            self.assertEqual(CompressedSketchSet.unpack(words, f, l, 64), packed)

    def test_sketches_negate_ranks(self):
        packed = CompressedSketchSet(2, 4, [2, 1], [[(1, 1), (4, 2)], [(2, 1)]])
        first, second = packed.sketches()
        self.assertEqual(first.pivots, [-1, -4])
        self.assertEqual(first.ranks, [1, 2])
        self.assertEqual(packed.sketches(1, 1)[0], second)


if __name__ == '__main__':
    main()
