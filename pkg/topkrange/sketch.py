"""Logarithmic sketches and selection over a union of sketched sets.

The sketch of a set *L* keeps ``floor(lg |L|) + 1`` pivots; pivot *j*
(counting from 1) is an element whose rank in *L* lies in
``[2**(j-1), 2**j)``, rank 1 being the largest.  A value that is at least
pivot *j* of a set is therefore beaten by at least ``2**(j-1)`` elements
of that set, which is all :func:`sketch_union_select` relies on.

Sketch sets of a whole group are bit-packed so that they fit in a block;
see :class:`CompressedSketchSet`.
"""

import collections
import heapq

from topkrange.errors import BitBudgetError, UsageError

__all__ = ['Sketch', 'build_sketch', 'fresh_rank', 'pivot_count', 'in_window',
           'sketch_union_select', 'union_lower_bound', 'CompressedSketchSet',
           'BitWriter', 'BitReader', 'ceil_lg', 'C3']

C3 = 8

NEG_INF = float('-inf')


def ceil_lg(n):
    """Smallest *b* with ``2**b >= n``."""
    return max(0, int(n) - 1).bit_length()


def pivot_count(size):
    """Number of pivots in the sketch of a set of *size* elements."""
    return int(size).bit_length()


def fresh_rank(j, size):
    """Local rank given to a newly chosen pivot *j*: the middle of its
    window, or the last element when the window runs past it."""
    return min((3 << (j - 1)) // 2, size)


def in_window(j, rank):
    return (1 << (j - 1)) <= rank < (1 << j)


Sketch = collections.namedtuple('Sketch', 'pivots ranks size')
Sketch.__doc__ = """Pivot values (decreasing), their local ranks and the
size of the sketched set."""


def build_sketch(values):
    """Sketch the set *values*; an empty set gives an empty sketch."""
    ordered = sorted(values, reverse=True)
    n = len(ordered)
    ranks = [fresh_rank(j, n) for j in range(1, pivot_count(n) + 1)]
    return Sketch([ordered[r - 1] for r in ranks], ranks, n)


def union_lower_bound(sketches, x):
    """Sum over the sketches of ``2**(j-1)`` for the last pivot *j* that is
    at least *x*; never more than the rank of *x* in the union."""
    total = 0
    for s in sketches:
        j = sum(1 for v in s.pivots if v >= x)
        if j:
            total += 1 << (j - 1)
    return total


def sketch_union_select(sketches, k):
    """Pick a pivot whose rank in the union of the sketched sets lies in
    ``[k, C3 * k)``, or -inf.

    The answer is the largest pivot whose lower bound reaches *k*.  It is
    -inf only when no pivot gets there, which needs a union smaller than
    ``2 * k``.
    """
    total = sum(s.size for s in sketches)
    if not 1 <= k <= total:
        raise UsageError("k=%r outside [1, %d]" % (k, total))
    merged = heapq.merge(*[[(v, i) for v in s.pivots] for i, s in enumerate(sketches)],
                         key=lambda vi: vi[0], reverse=True)
    seen = [0] * len(sketches)
    bound = 0
    for v, i in merged:
        seen[i] += 1
        j = seen[i]
        bound += 1 if j == 1 else (1 << (j - 1)) - (1 << (j - 2))
        if bound >= k:
            return v
    return NEG_INF


class BitWriter(object):
    """Appends fixed-width unsigned fields, most significant bit first."""

    def __init__(self):
        self.acc = 0
        self.nbits = 0

    def write(self, value, width):
        if width == 0:
            return
        if not 0 <= value < (1 << width):
            raise UsageError("%r does not fit in %d bits" % (value, width))
        self.acc = (self.acc << width) | value
        self.nbits += width

    def words(self, word_bits):
        nwords = -(-self.nbits // word_bits)
        acc = self.acc << (nwords * word_bits - self.nbits)
        mask = (1 << word_bits) - 1
        return [(acc >> (word_bits * (nwords - 1 - i))) & mask for i in range(nwords)]


class BitReader(object):

    def __init__(self, words, word_bits):
        self.acc = 0
        for w in words:
            self.acc = (self.acc << word_bits) | int(w)
        self.left = len(words) * word_bits

    def read(self, width):
        if width == 0:
            return 0
        if width > self.left:
            raise UsageError("packed set is truncated")
        self.left -= width
        return (self.acc >> self.left) & ((1 << width) - 1)


class CompressedSketchSet(object):
    """The sketches of an (f, l)-group, each pivot described by its global
    rank (in the whole group) and its local rank (in its own set).

    Layout, most significant bit first, set by set: the set size in
    ``ceil(lg(l + 1))`` bits, then ``floor(lg l) + 1`` pivot slots of two
    ``ceil(lg(f l))``-bit fields, ``global rank - 1`` and ``local rank - 1``.
    Unused slots are zero.
    """

    def __init__(self, f, l, sizes=None, pivots=None):
        self.f = f
        self.l = l
        self.sizes = list(sizes) if sizes is not None else [0] * f
        self.pivots = [list(p) for p in pivots] if pivots is not None else [[] for _ in range(f)]

    @staticmethod
    def rank_bits(f, l):
        return max(1, ceil_lg(f * l))

    @staticmethod
    def max_pivots(l):
        return pivot_count(l)

    @classmethod
    def pivot_bits(cls, f, l):
        """Bits taken by the pivot fields alone."""
        return f * cls.max_pivots(l) * 2 * cls.rank_bits(f, l)

    @classmethod
    def total_bits(cls, f, l):
        return cls.pivot_bits(f, l) + f * ceil_lg(l + 1)

    @classmethod
    def check_budget(cls, f, l, B, word_bits, blocks=1):
        bits = cls.total_bits(f, l)
        if bits > blocks * B * word_bits:
            raise BitBudgetError("sketch set for f=%d, l=%d needs %d bits, %d block(s) hold %d"
                                 % (f, l, bits, blocks, blocks * B * word_bits))
        return bits

    def pack(self, word_bits):
        rb = self.rank_bits(self.f, self.l)
        sb = ceil_lg(self.l + 1)
        out = BitWriter()
        for i in range(self.f):
            out.write(self.sizes[i], sb)
            pairs = self.pivots[i]
            for j in range(self.max_pivots(self.l)):
                g, r = pairs[j] if j < len(pairs) else (1, 1)
                out.write(g - 1, rb)
                out.write(r - 1, rb)
        return out.words(word_bits)

    @classmethod
    def unpack(cls, words, f, l, word_bits):
        rb = cls.rank_bits(f, l)
        sb = ceil_lg(l + 1)
        src = BitReader(words, word_bits)
        sizes, pivots = [], []
        for _ in range(f):
            size = src.read(sb)
            pairs = []
            for j in range(cls.max_pivots(l)):
                g, r = src.read(rb) + 1, src.read(rb) + 1
                if j < pivot_count(size):
                    pairs.append((g, r))
            sizes.append(size)
            pivots.append(pairs)
        return cls(f, l, sizes, pivots)

    def sketches(self, first=0, last=None):
        """Sketches of sets ``first..last`` over negated global ranks, so
        that larger still means better."""
        last = self.f - 1 if last is None else last
        return [Sketch([-g for g, _ in self.pivots[i]], [r for _, r in self.pivots[i]],
                       self.sizes[i]) for i in range(first, last + 1)]

    def __eq__(self, other):
        return (isinstance(other, CompressedSketchSet) and
                (self.f, self.l, self.sizes, self.pivots) ==
                (other.f, other.l, other.sizes, other.pivots))

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return "<CompressedSketchSet f=%d l=%d sizes=%r>" % (self.f, self.l, self.sizes)
