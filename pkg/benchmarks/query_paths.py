"""Compare the two query paths of the facade for the same k"""

import random
import warnings

import benchmarks
from topkrange import Disk, EmConfig, FacadeConfig, TopkRange
from topkrange.errors import RegimeWarning

warnings.simplefilter('ignore', RegimeWarning)

n = 1 << 13
rng = random.Random(0)
xs = rng.sample(range(1 << 30), n)
scores = rng.sample(range(1 << 30), n)
points = list(zip(xs, scores))
xs.sort()

disk = Disk(EmConfig(B=32, M=1 << 16))
# a threshold above every k below sends all of them down the small-k path
smallk = TopkRange(disk, points, FacadeConfig(k_threshold=65))
bigk = TopkRange(disk, points, FacadeConfig(k_threshold=2))


def window():
    a, b = sorted(rng.sample(range(n), 2))
    return xs[a], xs[b]


for k in (2, 4, 16, 64):
    def run_smallk():
        x1, x2 = window()
        smallk.topk(x1, x2, k)

    def run_bigk():
        x1, x2 = window()
        bigk.topk(x1, x2, k)

    best = benchmarks.measure_io(disk, 50, run_smallk, run_bigk)
    print("k=%-3d small-k path %8.1f I/Os   big-k path %8.1f I/Os" % (
        k, best[run_smallk], best[run_bigk]))
