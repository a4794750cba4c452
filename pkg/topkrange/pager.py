"""Word records on runs of disk blocks.

A page is a run of consecutive blocks holding one record: word 0 is the
record length, the record words follow.  Loading a record of *n* words
costs ``ceil((n + 1) / B)`` reads and storing it the same number of writes,
so a structure whose records have O(1) size pays O(1) I/Os per node.
"""

import numpy as np

from topkrange.errors import ConfigError, UsageError

__all__ = ['Pager', 'blocks_for']


def blocks_for(words, B):
    """Blocks needed by a page that can hold *words* record words."""
    return max(1, (words + 1 + B - 1) // B)


class Pager(object):
    """Record I/O on top of a :class:`~topkrange.disk.Disk`.  The pager holds
    no state of its own besides the disk."""

    def __init__(self, disk):
        if disk.word_bits != 64:
            raise ConfigError("records hold 64-bit real encodings; "
                              "word_bits must be 64, got %d" % disk.word_bits)
        self.disk = disk
        self.B = disk.B

    def allocate(self, capacity):
        """Reserve a page able to hold *capacity* words and return its id.
        A fresh page reads back as an empty record; no I/O is charged."""
        return self.disk.alloc_run(blocks_for(capacity, self.B))

    def capacity(self, pid):
        return self.disk.run_length(pid) * self.B - 1

    def release(self, pid):
        self.disk.free(pid)

    def load(self, pid):
        B = self.B
        first = self.disk.read(pid)
        length = int(first[0])
        if length > self.capacity(pid):
            raise UsageError("page %d is corrupt (length %d)" % (pid, length))
        parts = [first]
        for extra in range(1, blocks_for(length, B)):
            parts.append(self.disk.read(pid + extra))
        words = np.concatenate(parts) if len(parts) > 1 else first
        return [int(w) for w in words[1:length + 1]]

    def unload(self, length):
        """The caller is done with a loaded record of *length* words."""
        self.disk.drop(blocks_for(length, self.B))

    def store(self, pid, record):
        B = self.B
        length = len(record)
        if length > self.capacity(pid):
            raise UsageError("record of %d words overflows page %d (capacity %d)"
                             % (length, pid, self.capacity(pid)))
        nblocks = blocks_for(length, B)
        buf = np.zeros(nblocks * B, dtype=np.uint64)
        buf[0] = length
        if length:
            buf[1:length + 1] = np.array(record, dtype=np.uint64)
        for i in range(nblocks):
            self.disk.write(pid + i, buf[i * B:(i + 1) * B])

    def new(self, record, capacity=None):
        """Allocate a page sized for *capacity* (default: the record) and
        store *record* in it."""
        pid = self.allocate(max(len(record), capacity or 0))
        self.store(pid, record)
        return pid
