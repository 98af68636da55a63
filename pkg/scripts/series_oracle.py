#!/usr/bin/env python3
"""
Exact Coefficient Oracle
Extracts the coefficients f_n of F = I/J over a finite box from the
recurrence implied by J*F = I, and slices diagonals out of the table
"""

import argparse
import concurrent.futures
import itertools
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np
import pandas as pd
import psutil

try:
    from .errors import DimensionError, SeriesError
    from .poly_core import normalize_fraction, parse_polynomial, default_vars
    from .critical_solver import Direction
    from .asymptotics import evaluate_leading_term
except ImportError:  # run as a standalone script
    from errors import DimensionError, SeriesError
    from poly_core import normalize_fraction, parse_polynomial, default_vars
    from critical_solver import Direction
    from asymptotics import evaluate_leading_term

logger = logging.getLogger(__name__)

# bits used when converting exact values for ratios
ORACLE_PREC = 256
MAX_CELLS = 10 ** 7


@dataclass(frozen=True)
class CoefficientTable:
    bounds: tuple
    values: np.ndarray  # dtype=object, entries int or Fraction

    @property
    def d(self):
        return len(self.bounds)

    @property
    def cells(self):
        return int(self.values.size)

    def value(self, n):
        """f_n, zero outside the nonnegative orthant."""
        n = tuple(n)
        if len(n) != self.d:
            raise DimensionError(f"index {n} does not have {self.d} coordinates")
        if any(k < 0 for k in n):
            return 0
        if any(k > b for k, b in zip(n, self.bounds)):
            raise SeriesError(f"index {n} lies outside the table bounds {self.bounds}")
        return self.values[n]

    def __getitem__(self, n):
        return self.value(n)


@dataclass(frozen=True)
class DiagonalSequence:
    direction: Direction
    length: int
    values: list


def box_cells(bounds):
    total = 1
    for b in bounds:
        total *= b + 1
    return total


def _layer_cells(g, bounds):
    """Cells n of the box with |n| = g, largest x exponent first (graded lex)."""
    if len(bounds) == 1:
        if g <= bounds[0]:
            yield (g,)
        return
    rest = sum(bounds[1:])
    for first in range(min(g, bounds[0]), max(0, g - rest) - 1, -1):
        for tail in _layer_cells(g - first, bounds[1:]):
            yield (first,) + tail


def _layers(bounds):
    """Cells of the box grouped by total degree, one layer at a time."""
    for g in range(sum(bounds) + 1):
        yield g, list(_layer_cells(g, bounds))


def compute_coefficient_table(I, J, bounds, workers=1):
    """
    Exact f_n for every n in prod [0, bounds_i], filled layer by layer:
    f_n = (I_n - sum_{k != 0} J_k f_{n-k}) / J_0.
    """
    bounds = tuple(int(b) for b in bounds)
    if I.vars != J.vars:
        raise DimensionError(f"numerator and denominator variables differ: {I.vars} vs {J.vars}")
    if len(bounds) != J.d:
        raise DimensionError(f"bounds {bounds} do not match d={J.d}")
    if any(b < 0 for b in bounds):
        raise DimensionError(f"bounds must be nonnegative, got {bounds}")
    if J.constant_term() == 0:
        raise SeriesError("series undefined at origin: J(0) = 0")
    cells = box_cells(bounds)
    if cells > MAX_CELLS:
        raise SeriesError(f"box {bounds} has {cells} cells, more than the limit {MAX_CELLS}")

    I, J = normalize_fraction(I, J)
    J0 = J.constant_term()
    integral = J0 == 1 and all(c.denominator == 1 for c in I.terms.values())
    convert = int if integral else Fraction
    i_terms = {exps: convert(c) for exps, c in I.terms.items()}
    j_terms = [(exps, convert(c)) for exps, c in J.sorted_terms() if any(exps)]

    values = np.empty(tuple(b + 1 for b in bounds), dtype=object)

    def fill(n):
        acc = i_terms.get(n, 0)
        for k, coeff in j_terms:
            m = tuple(ni - ki for ni, ki in zip(n, k))
            if min(m) < 0:
                continue
            acc -= coeff * values[m]
        return acc if integral else Fraction(acc) / J0

    logger.info(f"🔬 Filling {cells} cells over box {bounds} ({'integer' if integral else 'rational'} arithmetic)")
    if workers <= 1:
        for _, layer in _layers(bounds):
            for n in layer:
                values[n] = fill(n)
    else:
        max_workers = min(workers, psutil.cpu_count() or 1)
        with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as executor:
            for _, layer in _layers(bounds):
                # cells of one layer only read lower layers
                for n, v in zip(layer, executor.map(fill, layer)):
                    values[n] = v
    return CoefficientTable(bounds=bounds, values=values)


def recurrence_residuals(table, I, J):
    """
    Re-check every cell against sum_k J_k f_{n-k} = I_n, independent of the
    fill order. Returns the list of cells where the identity fails.
    """
    failures = []
    j_terms = J.sorted_terms()
    for n in itertools.product(*(range(b + 1) for b in table.bounds)):
        acc = Fraction(0)
        for k, coeff in j_terms:
            m = tuple(ni - ki for ni, ki in zip(n, k))
            if min(m) < 0:
                continue
            acc += coeff * table.values[m]
        if acc != I.coefficient(n):
            failures.append(n)
    return failures


def diagonal_sequence(table, a, N):
    a = Direction.of(a)
    if a.d != table.d:
        raise DimensionError(f"direction {a.a} does not match table dimension {table.d}")
    if N < 0:
        raise SeriesError("N must be nonnegative")
    if any(ai * N > b for ai, b in zip(a.a, table.bounds)):
        raise SeriesError(f"N={N} too large for table bounds {table.bounds} along {a.a}")
    values = [table.values[tuple(ai * n for ai in a.a)] for n in range(N + 1)]
    return DiagonalSequence(direction=a, length=N, values=values)


def oracle_context():
    ctx = mpmath.MPContext()
    ctx.prec = ORACLE_PREC
    return ctx


def exact_to_mpf(value, ctx=mpmath.mp):
    if isinstance(value, Fraction):
        return ctx.mpf(value.numerator) / ctx.mpf(value.denominator)
    return ctx.mpf(value)


def format_exact(value, digits=40):
    """Integers verbatim, other rationals as a decimal string."""
    if isinstance(value, Fraction) and value.denominator != 1:
        return mpmath.nstr(exact_to_mpf(value, oracle_context()), digits)
    return str(int(value))


def ratio_table(seq, asym, include_companions=False):
    """
    DataFrame of n, exact f_{an}, leading term and their ratio for n >= 1.
    Raises SeriesError when the leading term vanishes.
    """
    if tuple(asym.direction.a) != tuple(seq.direction.a):
        raise ValueError(f"direction mismatch: {asym.direction.a} vs {seq.direction.a}")

    ctx = oracle_context()
    rows = []
    for n in range(1, seq.length + 1):
        term = evaluate_leading_term(asym, n, include_companions=include_companions, ctx=ctx)
        if term == 0:
            raise SeriesError(f"leading term vanishes at n={n}; check the asymptotic result")
        ratio = exact_to_mpf(seq.values[n], ctx) / term
        rows.append({
            'n': n,
            'f_exact': seq.values[n],
            'leading_term': term,
            'ratio': float(ratio),
        })
    return pd.DataFrame(rows, columns=['n', 'f_exact', 'leading_term', 'ratio'])


def dump_table_csv(table, output_file):
    rows = []
    for n in itertools.product(*(range(b + 1) for b in table.bounds)):
        value = Fraction(table.values[n])
        rows.append(list(n) + [value.numerator, value.denominator])
    columns = [f"n{i + 1}" for i in range(table.d)] + ['numerator', 'denominator']
    df = pd.DataFrame(rows, columns=columns)
    df.to_csv(output_file, index=False, lineterminator='\n')
    logger.info(f"💾 Coefficient table saved to: {output_file}")
    return df


def main():
    parser = argparse.ArgumentParser(description='Exact coefficients of a rational generating function')
    parser.add_argument('--numerator', default='1', help='numerator I')
    parser.add_argument('--denominator', required=True, help='denominator J')
    parser.add_argument('--vars', default=None, help='comma-separated variable names')
    parser.add_argument('--bounds', required=True, help='comma-separated box bounds, e.g. 10,10')
    parser.add_argument('--direction', default=None, help='print the diagonal along this direction')
    parser.add_argument('--output', default=None, help='CSV dump of the whole table')

    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format='%(message)s')

    bounds = [int(b) for b in args.bounds.split(',')]
    vars = args.vars.split(',') if args.vars else default_vars(len(bounds))
    I = parse_polynomial(args.numerator, vars)
    J = parse_polynomial(args.denominator, vars)

    table = compute_coefficient_table(I, J, bounds)
    failures = recurrence_residuals(table, I, J)
    print(f"✅ {table.cells} coefficients computed, recurrence failures: {len(failures)}")

    if args.direction:
        a = Direction.of(int(x) for x in args.direction.split(','))
        N = min(b // ai for b, ai in zip(bounds, a.a))
        seq = diagonal_sequence(table, a, N)
        for n, value in enumerate(seq.values):
            print(f"  n={n:3d}  f={format_exact(value)}")

    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        dump_table_csv(table, args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
