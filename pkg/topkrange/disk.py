"""Simulated external memory.

A :class:`Disk` is an unbounded array of *B*-word blocks.  The only way to
move data between it and memory is :meth:`Disk.read` and
:meth:`Disk.write`, and each call costs exactly one I/O, which is all the
cost model counts.  Words are opaque unsigned bit patterns; reals are
stored through the order-preserving :func:`encode_real`.
"""

import collections
import contextlib
import logging
import math
import struct

import numpy as np

from topkrange.budget import MemoryBudget
from topkrange.errors import ConfigError, UnknownBlockError, UsageError

__all__ = ['EmConfig', 'IoStats', 'Disk', 'encode_real', 'decode_real',
           'NEG_INF_WORD', 'POS_INF_WORD']

LOG = logging.getLogger(__name__)


class EmConfig(object):
    """Machine parameters: *B* words per block, *M* words of memory and
    *word_bits* bits per word.  *seed* feeds the workload generators."""

    def __init__(self, B=16, M=4096, word_bits=64, seed=0, max_input_size=None):
        self.B = int(B)
        self.M = int(M)
        self.word_bits = int(word_bits)
        self.seed = int(seed)
        if self.B < 2:
            raise ConfigError("B must be at least 2, got %d" % self.B)
        if self.M < 2 * self.B:
            raise ConfigError("M must be at least 2B (M=%d, B=%d)" % (self.M, self.B))
        if not 1 <= self.word_bits <= 64:
            raise ConfigError("word_bits must lie in [1, 64], got %d" % self.word_bits)
        if max_input_size is not None and max_input_size > 1:
            needed = int(math.ceil(math.log2(max_input_size)))
            if self.word_bits < needed:
                raise ConfigError("word_bits=%d cannot index %d items" % (
                    self.word_bits, max_input_size))

    def replace(self, **kw):
        fields = dict(B=self.B, M=self.M, word_bits=self.word_bits, seed=self.seed)
        fields.update(kw)
        return EmConfig(**fields)

    def __eq__(self, other):
        return isinstance(other, EmConfig) and (
            (self.B, self.M, self.word_bits, self.seed) ==
            (other.B, other.M, other.word_bits, other.seed))

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return "EmConfig(B=%d, M=%d, word_bits=%d, seed=%d)" % (
            self.B, self.M, self.word_bits, self.seed)


class IoStats(collections.namedtuple('IoStats', 'reads writes')):
    __slots__ = ()

    @property
    def total(self):
        return self.reads + self.writes

    def __sub__(self, other):
        return IoStats(self.reads - other.reads, self.writes - other.writes)


class Disk(object):
    """A store of *B*-word blocks with per-instance I/O counters.

    Block ids start at 1, so 0 can be used as a null pointer by the
    structures built on top.  Freed ids are never handed out again.

    A store is used by one logical thread at a time; there is no locking.
    """

    def __init__(self, config=None, budget=None):
        if config is None:
            from topkrange import config as _config
            config = _config.get_config()
        self.config = config
        self.B = config.B
        self.word_bits = config.word_bits
        self._mask = (1 << self.word_bits) - 1
        self._blocks = {}
        self._runs = {}
        self._freed = set()
        self._next_id = 1
        self._reads = 0
        self._writes = 0
        self._charging = True
        if budget is None:
            budget = MemoryBudget(config.M)
        self.budget = budget

    # -- allocation ------------------------------------------------------

    def alloc(self):
        """Return the id of a fresh all-zero block.  No I/O is charged."""
        return self.alloc_run(1)

    def alloc_run(self, count):
        """Allocate *count* consecutive fresh blocks and return the first
        id.  The run length is remembered so that :meth:`run_length` and
        :meth:`free` can find it."""
        if count < 1:
            raise UsageError("cannot allocate a run of %d blocks" % count)
        first = self._next_id
        self._next_id += count
        self._runs[first] = count
        return first

    def run_length(self, first):
        try:
            return self._runs[first]
        except KeyError:
            raise UnknownBlockError(first, 'does not start a run')

    def free(self, first):
        """Release the run starting at *first*.  The ids stay retired."""
        count = self.run_length(first)
        del self._runs[first]
        for bid in range(first, first + count):
            self._blocks.pop(bid, None)
            self._freed.add(bid)

    def __contains__(self, bid):
        return 0 < bid < self._next_id and bid not in self._freed

    @property
    def blocks_in_use(self):
        return sum(self._runs.values())

    # -- transfer ----------------------------------------------------------

    def _check(self, bid):
        if not isinstance(bid, (int, np.integer)) or bid <= 0 or bid >= self._next_id:
            raise UnknownBlockError(bid)
        if bid in self._freed:
            raise UnknownBlockError(bid, 'was freed')

    def read(self, bid):
        """Return a copy of block *bid*; one read is charged."""
        self._check(bid)
        if self._charging:
            self._reads += 1
            self.budget.get(self.B)
        block = self._blocks.get(bid)
        if block is None:
            return np.zeros(self.B, dtype=np.uint64)
        return block.copy()

    def drop(self, nblocks):
        """Give back the memory of *nblocks* blocks read earlier in the open
        operation and no longer held."""
        if self._charging:
            self.budget.put(nblocks * self.B)

    def write(self, bid, block):
        """Replace the content of block *bid* with exactly *B* words; one
        write is charged."""
        self._check(bid)
        words = np.asarray(block, dtype=np.uint64)
        if words.shape != (self.B,):
            raise UsageError("a block holds exactly %d words, got shape %r" % (
                self.B, words.shape))
        if self.word_bits < 64 and int(words.max(initial=0)) > self._mask:
            raise UsageError("word wider than %d bits" % self.word_bits)
        if self._charging:
            self._writes += 1
        self._blocks[bid] = words.copy()

    # -- accounting --------------------------------------------------------

    def stats_snapshot(self):
        return IoStats(self._reads, self._writes)

    def stats_reset(self):
        before = self.stats_snapshot()
        self._reads = 0
        self._writes = 0
        return before

    @contextlib.contextmanager
    def uncharged(self):
        """Suspend I/O accounting, for audits and test oracles."""
        prev = self._charging
        self._charging = False
        try:
            yield self
        finally:
            self._charging = prev

    def __repr__(self):
        return "<Disk B=%d blocks=%d reads=%d writes=%d>" % (
            self.B, self.blocks_in_use, self._reads, self._writes)


_SIGN = 1 << 63
_ALL = (1 << 64) - 1


def encode_real(x):
    """Map a double to a 64-bit word so that unsigned word order equals
    real order.  NaN has no place in that order and is rejected."""
    x = float(x)
    if x != x:
        raise UsageError("NaN cannot be stored")
    if x == 0.0:
        x = 0.0  # fold -0.0 onto +0.0
    bits = struct.unpack('>Q', struct.pack('>d', x))[0]
    if bits & _SIGN:
        return bits ^ _ALL
    return bits | _SIGN


def decode_real(word):
    word = int(word)
    if word & _SIGN:
        bits = word ^ _SIGN
    else:
        bits = word ^ _ALL
    return struct.unpack('>d', struct.pack('>Q', bits))[0]


NEG_INF_WORD = encode_real(float('-inf'))
POS_INF_WORD = encode_real(float('inf'))
