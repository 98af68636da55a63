#!/usr/bin/env python3
"""
Regression Fixtures
Job builders for the worked examples (zigzag-free words, Delannoy paths,
ternary words, alignments incl. block size b) and their closed forms
"""

import argparse
import json
import logging
import math
import sys
from pathlib import Path

try:
    from .poly_core import Polynomial, default_vars
except ImportError:  # run as a standalone script
    from poly_core import Polynomial, default_vars

logger = logging.getLogger(__name__)

PHI = (1 + math.sqrt(5)) / 2


def _job(name, numerator, denominator, vars, direction, oracle_N=40, **extra):
    job = {
        'name': name,
        'numerator': numerator,
        'denominator': denominator,
        'vars': list(vars),
        'direction': list(direction),
        'oracle_N': oracle_N,
        'emit': ['json', 'markdown', 'csv'],
    }
    job.update(extra)
    return job


def zigzag_job():
    """Binary words without the zigzag pattern, counted on the main diagonal."""
    return _job('zigzag', '1 + x*y + x^2*y^2', '1 - x - y + x*y - x^2*y^2', ['x', 'y'], [1, 1], oracle_N=80)


def delannoy_job(a=1, b=1, oracle_N=40):
    return _job(f'delannoy_{a}_{b}', '1', '1 - x - y - x*y', ['x', 'y'], [a, b], oracle_N=oracle_N)


def ternary_job(direction=(1, 1, 1), oracle_N=40):
    a = list(direction)
    return _job('ternary_' + '_'.join(map(str, a)), '1', '1 - x - y - z', ['x', 'y', 'z'], a, oracle_N=oracle_N)


def alignment_polynomials(d, b=1):
    """
    Numerator and denominator of the block-size-b alignment function
        (1 - t + t^b) / (1 + (1 - p)(1 - t + t^b) - t^2 + t^(b+1))
    with p = prod(1 + x_i) and t = prod(x_i). b = 1 gives 1/(2 - p).
    """
    if d < 2 or b < 1:
        raise ValueError(f"alignments need d >= 2 and b >= 1, got d={d}, b={b}")
    vars = default_vars(d)
    one = Polynomial.constant(vars, 1)
    p, t = one, one
    for i in range(d):
        x = Polynomial.variable(vars, i)
        p = p * (1 + x)
        t = t * x
    block = 1 - t + t ** b
    return block, 1 + (1 - p) * block - t ** 2 + t ** (b + 1)


def alignments_job(d=2, b=1, oracle_N=None):
    I, J = alignment_polynomials(d, b)
    if oracle_N is None:
        # keeps (N+1)^d small enough for a quick exact run
        oracle_N = {2: 80, 3: 40}.get(d, 12)
    name = f'alignments_d{d}' if b == 1 else f'alignments_block{b}_d{d}'
    extra = {}
    if b > 1:
        # aperiodicity only follows from a power-series rewriting of J
        extra['certify_by_torus'] = False
    return _job(name, I.to_string(), J.to_string(), I.vars, [1] * d, oracle_N=oracle_N, **extra)


def bundled_jobs():
    return [
        zigzag_job(),
        delannoy_job(1, 1),
        delannoy_job(2, 1),
        delannoy_job(3, 2),
        ternary_job((1, 1, 1)),
        ternary_job((1, 2, 3), oracle_N=20),
        alignments_job(2),
        alignments_job(3),
        alignments_job(4),
        alignments_job(2, b=2),
    ]


# ---------------------------------------------------------------------------
# closed forms: f_{an} ~ growth^n * coefficient * n^((1-d)/2)
# ---------------------------------------------------------------------------

def zigzag_closed_form():
    c = 1 / PHI
    return {
        'point': (c, c),
        'h': 4 / (3 * math.sqrt(5) - 5),
        'b0': 2 / math.sqrt(math.sqrt(5) * math.pi),
        'growth': PHI ** 2,
        'coefficient': 2 / math.sqrt(math.sqrt(5) * math.pi),
    }


def delannoy_closed_form(a, b):
    """
    Direction (a, b) for 1/(1 - x - y - xy), L = sqrt(a^2 + b^2). The point
    solving b x J_x = a y J_y is ((L - b)/a, (L - a)/b).
    """
    L = math.sqrt(a * a + b * b)
    x, y = (L - b) / a, (L - a) / b
    coefficient = math.sqrt(a * b / (L * (a + b - L) ** 2 * 2 * math.pi))
    return {
        'point': (x, y),
        'h': -2 * (b - L) * a * (a * a + b * b - a * L) / ((a - L) ** 2 * (a - b + L) ** 2),
        'b0': coefficient * math.sqrt(b),
        'growth': x ** -a * y ** -b,
        'coefficient': coefficient,
    }


def ternary_closed_form(direction):
    a, b, c = direction
    s = a + b + c
    coefficient = math.sqrt(s / (a * b * c)) / (2 * math.pi)
    return {
        'point': (a / s, b / s, c / s),
        'h': a * b * s / c ** 3,
        'b0': coefficient * c,
        # s^s / (a^a b^b c^c)
        'growth': s ** s / (a ** a * b ** b * c ** c),
        'coefficient': coefficient,
    }


def alignment_closed_form(d):
    c = 2 ** (1 / d) - 1
    coefficient = 1 / (c * 2 ** ((d * d - 1) / (2 * d)) * math.sqrt(d * math.pi ** (d - 1)))
    return {
        'point': (c,) * d,
        'h': d * 2 ** ((1 - d) / d),
        'b0': coefficient,
        'growth': c ** -d,
        'coefficient': coefficient,
    }


def write_jobs(jobs, output_dir):
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for job in jobs:
        path = output_dir / f"{job['name']}.json"
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(job, f, indent=2)
            f.write('\n')
        paths.append(path)
    logger.info(f"💾 {len(paths)} job files written to {output_dir}")
    return paths


def main():
    parser = argparse.ArgumentParser(description='Write the regression job files')
    parser.add_argument('--output-dir', default='data/jobs', help='where to write the JSON jobs')
    parser.add_argument('--alignments-d', type=int, action='append', default=[],
                        help='extra alignments job for this d')
    parser.add_argument('--block', type=int, default=1, help='block size b for the extra alignments jobs')

    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format='%(message)s')

    jobs = bundled_jobs() + [alignments_job(d, args.block) for d in args.alignments_d]
    for path in write_jobs(jobs, args.output_dir):
        print(f"  {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
