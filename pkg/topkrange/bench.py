"""Workloads, a brute-force oracle and I/O reports for the topkrange
structures.

A workload is a text file with one operation per line::

    I x score        insert a point
    D x              delete the point at x
    Q x1 x2 k        top-k query, checked against the oracle
    S x1 x2 k        approximate k-selection, checked for its rank window

Numbers are either ``0x`` followed by the 16 hex digits of an IEEE double,
which is what :func:`gen` writes so that runs are bit-reproducible, or
plain decimal literals.  Blank lines and ``#`` comments are ignored.

The command line front end is :func:`main`::

    python -m topkrange gen --n 1024 --mix mixed --out work.wl
    python -m topkrange run work.wl --audit final --csv io.csv
    python -m topkrange scale --min-exp 9 --max-exp 14
"""

import argparse
import collections
import csv
import logging
import math
import struct
import sys

import numpy as np

from topkrange import config as _config
from topkrange.disk import Disk
from topkrange.errors import TopkError, WorkloadError
from topkrange.pst import Point, PrioritySearchTree
from topkrange.sketch import ceil_lg
from topkrange.smallk import SmallKTree
from topkrange.topk import TopkRange

__all__ = ['WorkloadOp', 'RunReport', 'parse_workload', 'format_number', 'gen',
           'oracle_topk', 'oracle_rank', 'run_workload', 'scale', 'fit_scaling', 'main',
           'CANDIDATE_BOUND']

LOG = logging.getLogger(__name__)

CANDIDATE_BOUND = 192

STRUCTURES = ('facade', 'bigk', 'smallk')

WorkloadOp = collections.namedtuple('WorkloadOp', 'op args lineno')

_ARITY = {'I': 2, 'D': 1, 'Q': 3, 'S': 3}


def format_number(x):
    """The exact bit pattern of the double *x*, as workloads spell it."""
    return '0x%016x' % struct.unpack('>Q', struct.pack('>d', float(x)))[0]


def _parse_number(token, lineno):
    try:
        if token.lower().startswith('0x'):
            return struct.unpack('>d', struct.pack('>Q', int(token, 16)))[0]
        return float(token)
    except (ValueError, struct.error):
        raise WorkloadError("bad number %r" % token, lineno)


def parse_workload(lines):
    """Parse workload *lines* into a list of :class:`WorkloadOp`."""
    ops = []
    for lineno, line in enumerate(lines, 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        op = fields[0].upper()
        if op not in _ARITY:
            raise WorkloadError("unknown operation %r" % fields[0], lineno)
        if len(fields) - 1 != _ARITY[op]:
            raise WorkloadError("%s takes %d arguments, got %d" % (
                op, _ARITY[op], len(fields) - 1), lineno)
        args = fields[1:]
        if op in ('Q', 'S'):
            try:
                k = int(args[2])
            except ValueError:
                raise WorkloadError("bad count %r" % args[2], lineno)
            if k < 1:
                raise WorkloadError("k must be positive", lineno)
            parsed = (_parse_number(args[0], lineno), _parse_number(args[1], lineno), k)
            if parsed[0] > parsed[1]:
                raise WorkloadError("empty range", lineno)
        else:
            parsed = tuple(_parse_number(a, lineno) for a in args)
        ops.append(WorkloadOp(op, parsed, lineno))
    return ops


def load_workload(path):
    with open(path) as f:
        return parse_workload(f)


# -- generation -------------------------------------------------------------

def _draw_points(rng, n, dist):
    xs = set()
    if dist == 'uniform':
        while len(xs) < n:
            xs.update(int(v) for v in rng.integers(0, 1 << 30, size=n - len(xs)))
    elif dist == 'clustered':
        centers = rng.integers(0, 1 << 30, size=max(1, n // 256 + 1))
        spread = float(1 << 16)
        while len(xs) < n:
            c = centers[rng.integers(0, len(centers), size=n - len(xs))]
            xs.update(int(v) for v in np.rint(c + rng.normal(0.0, spread, size=len(c))))
    else:
        raise TopkError("unknown distribution %r" % dist)
    xs = sorted(xs)[:n]
    order = rng.permutation(n)
    xs = [float(xs[i]) for i in order]
    scores = rng.choice(1 << 40, size=n, replace=False) / float(1 << 20)
    return list(zip(xs, (float(s) for s in scores)))


def gen(n, dist='uniform', seed=0, mix='insert-only'):
    """Return the lines of a deterministic workload of *n* insertions, with
    deletions and queries mixed in according to *mix*."""
    rng = np.random.default_rng(seed)
    pts = _draw_points(rng, n, dist)
    lines = []
    live = []

    def insert(p):
        live.append(p)
        lines.append('I %s %s' % (format_number(p[0]), format_number(p[1])))

    def query_op(kind):
        a, b = sorted(rng.choice(len(live), size=2, replace=len(live) < 2))
        x1, x2 = sorted((live[a][0], live[b][0]))
        if kind == 'Q':
            k = int(rng.choice([1, 2, 4, 8, 16, 32, 64, 256]))
        else:
            k = int(rng.integers(1, 17))
        lines.append('%s %s %s %d' % (kind, format_number(x1), format_number(x2), k))

    if mix == 'insert-only':
        for p in pts:
            insert(p)
    elif mix == 'mixed':
        for p in pts:
            insert(p)
            roll = rng.random()
            if roll < 0.25 and len(live) > 1:
                gone = live.pop(int(rng.integers(0, len(live))))
                lines.append('D %s' % format_number(gone[0]))
            elif roll < 0.5:
                query_op('Q')
            elif roll < 0.625:
                query_op('S')
    elif mix == 'query-heavy':
        for p in pts:
            insert(p)
        for _ in range(2 * n):
            query_op('Q' if rng.random() < 0.75 else 'S')
    else:
        raise TopkError("unknown mix %r" % mix)
    return lines


# -- oracle -----------------------------------------------------------------

def oracle_topk(state, x1, x2, k):
    """The min(k, |S ∩ [x1, x2]|) highest points of *state*, a mapping
    from x to score, by exhaustive scan."""
    inside = [Point(x, y) for x, y in state.items() if x1 <= x <= x2]
    inside.sort(key=lambda p: -p.y)
    return inside[:k]


def oracle_rank(state, x1, x2, score):
    """Number of points of *state* in ``[x1, x2]`` scoring at least
    *score*."""
    return sum(1 for x, y in state.items() if x1 <= x <= x2 and y >= score)


# -- running ----------------------------------------------------------------

class RunReport(object):
    """Outcome of :func:`run_workload`: one row per operation plus the
    mismatches and audit failures found along the way."""

    FIELDS = ('index', 'line', 'op', 'reads', 'writes', 'result', 'status')

    def __init__(self, structure):
        self.structure = structure
        self.rows = []
        self.mismatches = []
        self.audit_failures = []
        self.skipped = collections.Counter()
        self.io = collections.defaultdict(list)

    @property
    def ok(self):
        return not self.mismatches and not self.audit_failures

    def add(self, index, op, io, result, status):
        self.rows.append((index, op.lineno, op.op, io.reads, io.writes, result, status))
        self.io[op.op].append(io.total)

    def mismatch(self, index, op, text):
        self.mismatches.append((index, op.lineno, text))
        LOG.debug("op %d (line %d): %s", index, op.lineno, text)

    def write_csv(self, out):
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(self.FIELDS)
        writer.writerows(self.rows)

    def summary(self):
        lines = ['structure=%s ops=%d mismatches=%d audit failures=%d' % (
            self.structure, len(self.rows), len(self.mismatches), len(self.audit_failures))]
        for kind in sorted(self.io):
            costs = self.io[kind]
            lines.append('  %s: n=%d mean I/O=%.2f max=%d' % (
                kind, len(costs), float(np.mean(costs)), max(costs)))
        for kind, count in sorted(self.skipped.items()):
            lines.append('  skipped %s: %d' % (kind, count))
        for index, lineno, text in self.mismatches[:10]:
            lines.append('  MISMATCH op %d (line %d): %s' % (index, lineno, text))
        for index, text in self.audit_failures[:10]:
            lines.append('  AUDIT after op %d: %s' % (index, text))
        return '\n'.join(lines)


def make_structure(kind, disk, n_hint=0, facade_config=None):
    """A fresh structure of *kind* on *disk*; *n_hint* sizes the small-k
    tree's largest k."""
    if kind == 'facade':
        return TopkRange(disk, config=facade_config)
    if kind == 'bigk':
        return PrioritySearchTree(disk)
    if kind == 'smallk':
        return SmallKTree(disk, max(1, disk.B * ceil_lg(max(n_hint, 2)) - 1))
    raise TopkError("unknown structure %r" % kind)


def _referential_check(op, state, scores):
    if op.op == 'I':
        x, y = op.args
        if x in state:
            raise WorkloadError("x=%r is already live" % x, op.lineno)
        if y in scores:
            raise WorkloadError("score %r is already live" % y, op.lineno)
    elif op.op == 'D' and op.args[0] not in state:
        raise WorkloadError("x=%r is not live" % op.args[0], op.lineno)


def run_workload(ops, em_config=None, structure='facade', audit='off', oracle=True,
                 facade_config=None):
    """Execute *ops* on a fresh structure and return a :class:`RunReport`.

    *audit* is ``'off'``, ``'final'`` or ``'every-op'``.  With *oracle*,
    every Q is compared with :func:`oracle_topk` and every S must hit a
    point whose oracle rank lies in ``[k, CANDIDATE_BOUND * k]``.
    """
    disk = Disk(em_config if em_config is not None else _config.get_config())
    n_hint = sum(1 for op in ops if op.op == 'I')
    target = make_structure(structure, disk, n_hint, facade_config)
    report = RunReport(structure)
    state = {}
    scores = set()
    for index, op in enumerate(ops):
        _referential_check(op, state, scores)
        before = disk.stats_snapshot()
        result, status = '', 'ok'
        if op.op == 'I':
            x, y = op.args
            target.insert(x, y)
            state[x] = y
            scores.add(y)
        elif op.op == 'D':
            x = op.args[0]
            target.delete(x)
            scores.discard(state.pop(x))
        elif op.op == 'Q':
            x1, x2, k = op.args
            if structure == 'smallk':
                report.skipped['Q'] += 1
                status = 'skipped'
            else:
                query = target.topk if structure == 'facade' else target.query_topk
                got = [(p.x, p.y) for p in query(x1, x2, k)]
                result = len(got)
                if oracle:
                    want = [(p.x, p.y) for p in oracle_topk(state, x1, x2, k)]
                    if got != want:
                        status = 'mismatch'
                        report.mismatch(index, op, "top-%d of [%r, %r]: %d points, "
                                        "expected %d" % (k, x1, x2, len(got), len(want)))
        else:
            x1, x2, k = op.args
            tree = None
            if structure == 'facade':
                tree = target.smallk
            elif structure == 'smallk':
                tree = target
            available = sum(1 for x in state if x1 <= x <= x2)
            if tree is None or k > tree.l or k > available:
                report.skipped['S'] += 1
                status = 'skipped'
            else:
                p = tree.select_approx(x1, x2, k)
                rank = oracle_rank(state, x1, x2, p.y)
                result = rank
                if oracle and not k <= rank <= CANDIDATE_BOUND * k:
                    status = 'mismatch'
                    report.mismatch(index, op, "selection for k=%d in [%r, %r] has rank %d"
                                    % (k, x1, x2, rank))
        io = disk.stats_snapshot() - before
        report.add(index, op, io, result, status)
        if audit == 'every-op':
            _audit(target, report, index)
    if audit == 'final':
        _audit(target, report, len(ops) - 1)
    return report


def _audit(target, report, index):
    outcome = target.audit_invariants()
    if not outcome:
        report.audit_failures.append((index, outcome.violation))


# -- scaling ----------------------------------------------------------------

ScaleRow = collections.namedtuple('ScaleRow', 'n update_io query_io')


def scale(exponents, ks=(1, 16, 64, 256), queries=32, seed=0, em_config=None):
    """Build a facade over ``2**e`` random points for every *e* in
    *exponents*, inserting one point at a time, then time random queries
    for every k in *ks*.  Returns a list of :class:`ScaleRow` whose
    *query_io* maps k to the mean query I/Os."""
    em_config = em_config if em_config is not None else _config.get_config()
    rows = []
    for e in exponents:
        n = 1 << e
        rng = np.random.default_rng(seed + e)
        pts = _draw_points(rng, n, 'uniform')
        disk = Disk(em_config)
        facade = TopkRange(disk)
        before = disk.stats_snapshot()
        for x, y in pts:
            facade.insert(x, y)
        update_io = (disk.stats_snapshot() - before).total / float(n)
        xs = sorted(x for x, _ in pts)
        query_io = {}
        for k in ks:
            costs = []
            for _ in range(queries):
                a, b = sorted(rng.integers(0, n, size=2))
                before = disk.stats_snapshot()
                facade.topk(xs[a], xs[b], k)
                costs.append((disk.stats_snapshot() - before).total)
            query_io[k] = float(np.mean(costs))
        rows.append(ScaleRow(n, update_io, query_io))
        LOG.info("n=%d: %.2f I/Os per insertion", n, update_io)
    return rows


def fit_scaling(rows, B):
    """Least-squares fit of the mean query I/Os to ``a + b lg n + c k/B``.
    Returns ``(coefficients, residuals)``, one residual per sample."""
    design, target = [], []
    for row in rows:
        for k, cost in sorted(row.query_io.items()):
            design.append([1.0, math.log(row.n, 2), k / float(B)])
            target.append(cost)
    design, target = np.array(design), np.array(target)
    coef = np.linalg.lstsq(design, target, rcond=None)[0]
    return coef, target - design.dot(coef)


def format_scale(rows, coef, residuals):
    ks = sorted(rows[0].query_io) if rows else []
    out = ['%8s %10s ' % ('n', 'update') + ' '.join('%10s' % ('k=%d' % k) for k in ks)]
    for row in rows:
        out.append('%8d %10.2f ' % (row.n, row.update_io) +
                   ' '.join('%10.2f' % row.query_io[k] for k in ks))
    out.append('fit: query I/O = %.3f + %.3f lg n + %.3f k/B' % tuple(coef))
    out.append('residuals: max |r| = %.3f, rms = %.3f' % (
        float(np.max(np.abs(residuals))) if len(residuals) else 0.0,
        float(np.sqrt(np.mean(residuals ** 2))) if len(residuals) else 0.0))
    return '\n'.join(out)


# -- command line -----------------------------------------------------------

def _parser():
    parser = argparse.ArgumentParser(
        prog='topkrange-bench',
        description='Generate workloads, check them against a brute-force oracle '
                    'and report I/O counts.')
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='log more (repeat for debug output)')
    parser.add_argument('--config', metavar='PATH',
                        help='key=value file with B, M, word_bits and seed')
    sub = parser.add_subparsers(dest='command')

    p = sub.add_parser('gen', help='write a workload')
    p.add_argument('--n', type=int, default=1024, help='number of insertions')
    p.add_argument('--dist', choices=('uniform', 'clustered'), default='uniform')
    p.add_argument('--mix', choices=('insert-only', 'mixed', 'query-heavy'),
                   default='insert-only')
    p.add_argument('--seed', type=int, default=None,
                   help='random seed (default: the configured seed)')
    p.add_argument('--out', metavar='PATH', help='output file (default: stdout)')

    p = sub.add_parser('run', help='execute a workload')
    p.add_argument('workload', metavar='WORKLOAD')
    p.add_argument('--structure', choices=STRUCTURES, default='facade')
    p.add_argument('--audit', choices=('off', 'final', 'every-op'), default='off')
    p.add_argument('--oracle', choices=('off', 'on'), default='on')
    p.add_argument('--csv', metavar='PATH', help='write per-operation I/O counts')

    p = sub.add_parser('scale', help='measure I/Os over a doubling series of n')
    p.add_argument('--min-exp', type=int, default=9)
    p.add_argument('--max-exp', type=int, default=14)
    p.add_argument('--k', type=int, action='append', dest='ks',
                   help='query size, may be repeated (default: 1 16 64 256)')
    p.add_argument('--queries', type=int, default=32)
    p.add_argument('--seed', type=int, default=None)
    return parser


def main(argv=None):
    parser = _parser()
    args = parser.parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')
    if args.command is None:
        parser.print_help()
        return 2
    try:
        cfg = _config.load_config(args.config) if args.config else _config.get_config()
        if args.command == 'gen':
            seed = cfg.seed if args.seed is None else args.seed
            text = '\n'.join(gen(args.n, args.dist, seed, args.mix)) + '\n'
            if args.out:
                with open(args.out, 'w') as f:
                    f.write(text)
            else:
                sys.stdout.write(text)
            return 0
        if args.command == 'run':
            ops = load_workload(args.workload)
            report = run_workload(ops, cfg, args.structure, args.audit, args.oracle == 'on')
            if args.csv:
                with open(args.csv, 'w') as f:
                    report.write_csv(f)
            print(report.summary())
            return 0 if report.ok else 1
        seed = cfg.seed if args.seed is None else args.seed
        rows = scale(range(args.min_exp, args.max_exp + 1), tuple(args.ks or (1, 16, 64, 256)),
                     args.queries, seed, cfg)
        coef, residuals = fit_scaling(rows, cfg.B)
        print(format_scale(rows, coef, residuals))
        return 0
    except WorkloadError as e:
        sys.stderr.write('%s\n' % e)
        return 2
    except (TopkError, IOError) as e:
        sys.stderr.write('error: %s\n' % e)
        return 2
