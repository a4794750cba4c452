"""Insertion and deletion I/Os as n doubles"""

import random
import warnings

import benchmarks
from topkrange import Disk, EmConfig, TopkRange
from topkrange.errors import RegimeWarning

warnings.simplefilter('ignore', RegimeWarning)

rng = random.Random(1)
for e in range(8, 14):
    n = 1 << e
    disk = Disk(EmConfig(B=32, M=1 << 16))
    xs = rng.sample(range(1 << 30), n + 100)
    scores = rng.sample(range(1 << 30), n + 100)
    tree = TopkRange(disk, zip(xs[:n], scores[:n]))
    fresh = iter(zip(xs[n:], scores[n:]))
    live = list(xs[:n])

    def run_insert():
        x, y = next(fresh)
        tree.insert(x, y)
        live.append(x)

    def run_delete():
        tree.delete(live.pop(rng.randrange(len(live))))

    best = benchmarks.measure_io(disk, 50, run_insert, run_delete)
    print("n=%-6d insert %8.1f I/Os   delete %8.1f I/Os" % (
        n, best[run_insert], best[run_delete]))
