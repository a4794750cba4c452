import random


def measure_io(disk, repeat, *funcs):
    """Call every function of *funcs* *repeat* times in shuffled order and
    return a dict mapping each one to its mean I/Os per call on *disk*."""
    funcs = list(funcs)
    results = dict([(f, []) for f in funcs])

    for i in range(repeat):
        random.shuffle(funcs)
        for func in funcs:
            before = disk.stats_snapshot()
            func()
            results[func].append((disk.stats_snapshot() - before).total)

    mean_results = {}
    for func, costs in results.items():
        mean_results[func] = sum(costs) / float(len(costs))
    return mean_results
