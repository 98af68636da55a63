#!/usr/bin/env python3
"""
Master Analysis Script
Diagonal asymptotics of rational generating functions, checked against
exact coefficients

    python run_analysis.py analyze data/jobs/delannoy_1_1.json --emit json,markdown,csv
    python run_analysis.py fixtures --out data/jobs
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from scripts.cli_report import EMIT_FORMATS, load_config, run_batch, with_overrides
from scripts.errors import ConfigError
from scripts.fixtures import alignments_job, bundled_jobs, write_jobs


def _emit_list(value):
    formats = [v.strip() for v in value.split(',') if v.strip()]
    for fmt in formats:
        if fmt not in EMIT_FORMATS:
            raise argparse.ArgumentTypeError(f"unknown format {fmt!r}; choose from {', '.join(EMIT_FORMATS)}")
    return formats


def _seed(value):
    try:
        return [float(v) for v in value.split(',')]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be comma-separated numbers, got {value!r}")


def build_parser():
    parser = argparse.ArgumentParser(description='Leading asymptotics of diagonal coefficients of I/J')
    parser.add_argument('--quiet', action='store_true', help='only warnings and errors')
    commands = parser.add_subparsers(dest='command', required=True)

    analyze = commands.add_parser('analyze', help='run one or more JSON jobs')
    analyze.add_argument('configs', nargs='+', help='job files')
    analyze.add_argument('--emit', type=_emit_list, default=None,
                         help='comma-separated report formats (json, markdown, csv)')
    analyze.add_argument('--oracle-n', type=int, default=None, help='diagonal length checked by the oracle')
    analyze.add_argument('--out', default='results', help='output directory')
    analyze.add_argument('--seed', type=_seed, action='append', default=[],
                         help='extra Newton seed, e.g. 0.4,0.4 (repeatable)')
    analyze.add_argument('--tol-residual', type=float, default=None, help='Newton residual tolerance')
    analyze.add_argument('--workers', type=int, default=None, help='parallel jobs (default: CPU count)')

    fixtures = commands.add_parser('fixtures', help='write the bundled regression jobs')
    fixtures.add_argument('--out', default='data/jobs', help='output directory')
    fixtures.add_argument('--alignments-d', type=int, action='append', default=[],
                          help='extra alignments job for this d (repeatable)')
    fixtures.add_argument('--block', type=int, default=1, help='block size b for the extra alignments jobs')
    return parser


def analyze(args):
    configs = []
    for path in args.configs:
        try:
            cfg = load_config(path)
            configs.append(with_overrides(cfg, emit=args.emit, oracle_N=args.oracle_n,
                                          seeds=args.seed, tol_residual=args.tol_residual))
        except ConfigError as e:
            print(f"❌ Config error: {e}")
            return 1
        except OSError as e:
            print(f"❌ Cannot read {path}: {e}")
            return 2

    names = [cfg.name for cfg in configs]
    if len(set(names)) != len(names):
        print(f"❌ Config error: job names must be unique, got {names}")
        return 1

    results = run_batch(configs, args.out, workers=args.workers)

    print(f"\n{'=' * 60}")
    print("📊 ANALYSIS SUMMARY")
    print(f"{'=' * 60}")
    exit_code = 0
    for result in results:
        if result['success']:
            print(f"  ✅ {result['job']}: verdict {result['verdict']}, {result['warnings']} warning(s)")
            for fmt, path in result['files'].items():
                print(f"      {fmt}: {path}")
        else:
            print(f"  ❌ {result['job']}: {result['error']}")
            exit_code = max(exit_code, result['exit_code'])

    summary_file = Path(args.out) / 'batch_summary.json'
    try:
        with open(summary_file, 'w', encoding='utf-8') as f:
            json.dump(results, f, indent=2)
    except OSError as e:
        print(f"❌ Cannot write {summary_file}: {e}")
        return 2
    print(f"\n💾 Summary saved to: {summary_file}")
    return exit_code


def fixtures(args):
    jobs = bundled_jobs() + [alignments_job(d, args.block) for d in args.alignments_d]
    try:
        paths = write_jobs(jobs, args.out)
    except OSError as e:
        print(f"❌ Cannot write jobs: {e}")
        return 2
    for path in paths:
        print(f"  ✓ {path}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format='%(message)s')

    if args.command == 'analyze':
        return analyze(args)
    return fixtures(args)


if __name__ == "__main__":
    sys.exit(main())
