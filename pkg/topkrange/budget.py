import contextlib
import logging
import warnings

from topkrange.errors import MemoryBudgetWarning, UsageError

__all__ = ['MemoryBudget']

LOG = logging.getLogger(__name__)


class MemoryBudget(object):
    """
    MemoryBudget accounts for the words of internal memory that one public
    operation holds at a time.  It is the optional shim behind the model's
    *M*: disk reads charge *B* words to the operation that is currently
    open, and the budget remembers the highest total it has seen.

    Operations are scoped with the :meth:`operation` context manager::

        with disk.budget.operation('query'):
            structure.query_topk(x1, x2, k)

    Outside an operation nothing is charged.  The limit can be changed at
    runtime with :meth:`resize`.  Going over the limit issues a
    :class:`~topkrange.errors.MemoryBudgetWarning`, or raises
    :class:`~topkrange.errors.UsageError` when the budget is *strict*.

    The count is conservative: a block read twice inside one operation is
    charged twice.
    """
    def __init__(self, limit, strict=False):
        self.limit = limit
        self.strict = strict
        self.current = 0
        self.peak = 0
        self.high_water = 0
        self.overruns = 0
        self.active = None
        self._depth = 0
        self._warned = False

    def get(self, words):
        """Charge *words* to the open operation, if any."""
        if self.active is None:
            return
        self.current += words
        if self.current > self.peak:
            self.peak = self.current
        if self.current > self.limit:
            self._overrun()

    def put(self, words):
        """Give *words* back, e.g. when scratch space is released."""
        if self.active is None:
            return
        self.current = max(0, self.current - words)

    def resize(self, new_limit):
        """Change the memory limit to *new_limit* words.  Takes effect on the
        next charge."""
        self.limit = new_limit

    def free(self):
        """Return the number of words still available to the open
        operation."""
        return max(0, self.limit - self.current)

    @contextlib.contextmanager
    def operation(self, name):
        """Scope the working set of one public operation.  Nested scopes
        are folded into the outermost one."""
        if self._depth == 0:
            self.active = name
            self.current = 0
            self.peak = 0
            self._warned = False
        self._depth += 1
        try:
            yield self
        finally:
            self._depth -= 1
            if self._depth == 0:
                self.high_water = max(self.high_water, self.peak)
                self.active = None
                self.current = 0

    def _overrun(self):
        msg = "operation %r holds %d words, over the budget of %d" % (
            self.active, self.current, self.limit)
        if self.strict:
            raise UsageError(msg)
        if self._warned:
            return
        self._warned = True
        self.overruns += 1
        if self.overruns == 1 or _g_every_overrun:
            warnings.warn(msg, MemoryBudgetWarning, stacklevel=3)
        LOG.debug(msg)


""" If true, every budget overrun issues a warning instead of only the
first one per budget. """
_g_every_overrun = False
