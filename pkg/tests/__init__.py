# package is named tests, not test, so it won't be confused with test in stdlib
import os
import unittest

from topkrange import config, debug
from topkrange.disk import Disk, EmConfig

# convenience for importers
main = unittest.main

DATA_DIR = os.path.join(os.path.dirname(__file__), 'data')


def data_path(name):
    return os.path.join(DATA_DIR, name)


def make_disk(B=16, M=None, word_bits=64):
    """A fresh disk with block size *B*; M defaults to a roomy 1024 B."""
    return Disk(EmConfig(B=B, M=M if M is not None else 1024 * B, word_bits=word_bits))


def random_points(rng, n, span=1 << 20):
    """*n* points with distinct integral x and distinct scores, drawn from
    *rng*, a :class:`random.Random`."""
    xs = rng.sample(range(span), n)
    ys = rng.sample(range(span), n)
    return [(float(x), float(y) / 8.0) for x, y in zip(xs, ys)]


class IoBudgetExceeded(AssertionError):
    """ Raised when an operation performs more I/Os than a test allows. """
    pass


class LimitedTestCase(unittest.TestCase):
    """ Unittest subclass that starts every test from the default
    configuration with every debug toggle off.  Subclasses must be sure to
    call the LimitedTestCase setUp and tearDown methods.

    :meth:`assertIoAtMost` bounds the I/Os of a single call; the default
    limit is IO_LIMIT, change it per test by passing *limit*."""

    IO_LIMIT = 1000

    def setUp(self):
        debug.reset()
        self.saved_config = config.get_config()
        config.use_config(EmConfig())

    def tearDown(self):
        debug.reset()
        config.use_config(self.saved_config)

    def assertIoAtMost(self, disk, fn, limit=None):
        """Call *fn* and check that it cost at most *limit* I/Os on *disk*.
        Returns what *fn* returned."""
        limit = self.IO_LIMIT if limit is None else limit
        before = disk.stats_snapshot()
        result = fn()
        used = (disk.stats_snapshot() - before).total
        if used > limit:
            raise IoBudgetExceeded("%d I/Os, allowed %d" % (used, limit))
        return result

    def assertAudited(self, structure):
        report = structure.audit_invariants()
        self.assertTrue(report, report.violation)

