"""The debug module contains toggles and formatters that help when
checking topkrange structures against their invariants."""

import os

__all__ = ['token_ledger', 'audit_queries', 'memory_warnings',
           'format_io_stats', 'format_pilot_sets', 'reset']


def token_ledger(state=False):
    """Toggles whether big-k trees built from now on keep a token ledger.
    The ledger tracks the insertion and deletion tokens of every bold node
    so that :meth:`~topkrange.pst.PrioritySearchTree.audit_invariants` can
    check the token invariants.  It lives in memory and costs no I/O.
    """
    from topkrange import pst
    pst._g_token_ledger = state


def audit_queries(state=False):
    """Toggles whether queries check themselves against a brute-force scan.
    A big-k query then asserts that its candidate sets contain the true
    top-k, and a small-k selection asserts its rank window; failures raise
    :class:`~topkrange.errors.AuditError`.  The scans are uncharged.
    """
    from topkrange import pst, smallk
    pst._g_audit_queries = state
    smallk._g_audit_queries = state


def memory_warnings(state=False):
    """Toggles whether every memory budget overrun issues a warning, rather
    than only the first one."""
    from topkrange import budget
    budget._g_every_overrun = state


def reset():
    """Turns every toggle off."""
    token_ledger(False)
    audit_queries(False)
    memory_warnings(False)


def format_io_stats(disk):
    """ Returns a formatted string of the I/O counters and block usage of
    *disk*, along with the peak working set recorded by its memory budget.
    """
    stats = disk.stats_snapshot()
    budget = disk.budget
    result = ['reads=%d writes=%d total=%d' % (stats.reads, stats.writes, stats.total),
              'blocks in use=%d (B=%d)' % (disk.blocks_in_use, disk.B),
              'memory high water=%d words of %d' % (budget.high_water, budget.limit)]
    return os.linesep.join(result)


def format_pilot_sets(tree):
    """ Returns a formatted string of the bold nodes of the big-k tree
    *tree*, one line per node, indented by depth, with the pilot set size
    and representative score.  Reading the nodes is not charged.
    """
    result = []
    for depth, node in tree.walk():
        rep = node.representative()
        result.append('%s%s #%d [%r, %r) |pilot|=%d rep=%s' % (
            '  ' * depth, node.kind_name(), node.pid, node.lo, node.hi,
            len(node.points), 'none' if rep is None else repr(rep[1])))
    return os.linesep.join(result)
