"""Exceptions and warnings raised by topkrange.

Contract violations raise a :class:`UsageError` subclass.  Audits never
raise; they hand back an :class:`AuditReport` that is falsy on failure.
"""

import collections

__all__ = ['TopkError', 'UsageError', 'UnknownBlockError', 'RangeError',
           'DuplicateKeyError', 'MissingKeyError', 'CapacityError',
           'PreconditionError', 'ConfigError', 'BitBudgetError',
           'WorkloadError', 'AuditError', 'AuditReport',
           'MemoryBudgetWarning', 'RegimeWarning']


class TopkError(Exception):
    pass


class UsageError(TopkError):
    """The caller broke an operation's precondition."""


class UnknownBlockError(UsageError):
    def __init__(self, block_id, reason='never allocated'):
        UsageError.__init__(self, 'block %r %s' % (block_id, reason))
        self.block_id = block_id


class RangeError(UsageError):
    pass


class DuplicateKeyError(UsageError):
    def __init__(self, key):
        UsageError.__init__(self, 'duplicate key %r' % (key,))
        self.key = key


class MissingKeyError(UsageError):
    def __init__(self, key):
        UsageError.__init__(self, 'no such key %r' % (key,))
        self.key = key


class CapacityError(UsageError):
    pass


class PreconditionError(UsageError):
    pass


class ConfigError(TopkError):
    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = 'line %d: %s' % (lineno, message)
        TopkError.__init__(self, message)
        self.lineno = lineno


class BitBudgetError(ConfigError):
    pass


class WorkloadError(TopkError):
    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = 'line %d: %s' % (lineno, message)
        TopkError.__init__(self, message)
        self.lineno = lineno


class AuditError(TopkError):
    pass


class AuditReport(collections.namedtuple('AuditReport', 'ok violation')):
    """Outcome of an invariant audit; *violation* names the first failure."""
    __slots__ = ()

    def __bool__(self):
        return self.ok

    @classmethod
    def passed(cls):
        return cls(True, None)

    @classmethod
    def failed(cls, violation):
        return cls(False, violation)


class MemoryBudgetWarning(UserWarning):
    pass


class RegimeWarning(UserWarning):
    pass
