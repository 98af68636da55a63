#!/usr/bin/env python3
"""
Job Configuration, Pipeline and Reports
Reads a JSON job, runs parse -> solve -> classify -> asymptotics -> oracle,
and writes JSON / Markdown / CSV reports. Hypothesis failures become report
warnings; only config, parse and I/O errors abort a job.
"""

import argparse
import concurrent.futures
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import mpmath
import pandas as pd
import psutil

try:
    from .errors import (CONTRIB_CERTIFIED, NUMERATOR_NONZERO, ORIGIN_REGULAR, POSITIVE_UNIQUENESS, ConfigError,
                         DimensionError, HypothesisError, PolynomialSyntaxError, SeriesError)
    from .poly_core import default_vars, is_symmetric, parse_polynomial
    from .critical_solver import (DEFAULT_TOLERANCES, Direction, Tolerances, classify_contributing,
                                  solve_bivariate_complete, solve_positive_newton, solve_symmetric_positive)
    from .asymptotics import CROSS_CHECK_TOL, TERM_PREC, assemble_asymptotics
    from .series_oracle import (MAX_CELLS, box_cells, compute_coefficient_table, diagonal_sequence,
                                format_exact, ratio_table, recurrence_residuals)
except ImportError:  # run as a standalone script
    from errors import (CONTRIB_CERTIFIED, NUMERATOR_NONZERO, ORIGIN_REGULAR, POSITIVE_UNIQUENESS, ConfigError,
                        DimensionError, HypothesisError, PolynomialSyntaxError, SeriesError)
    from poly_core import default_vars, is_symmetric, parse_polynomial
    from critical_solver import (DEFAULT_TOLERANCES, Direction, Tolerances, classify_contributing,
                                 solve_bivariate_complete, solve_positive_newton, solve_symmetric_positive)
    from asymptotics import CROSS_CHECK_TOL, TERM_PREC, assemble_asymptotics
    from series_oracle import (MAX_CELLS, box_cells, compute_coefficient_table, diagonal_sequence,
                               format_exact, ratio_table, recurrence_residuals)

logger = logging.getLogger(__name__)

EMIT_FORMATS = ('json', 'markdown', 'csv')
PASS, INCONCLUSIVE, FAIL = 'PASS', 'INCONCLUSIVE', 'FAIL'
CONFIG_KEYS = ('name', 'numerator', 'denominator', 'vars', 'direction', 'oracle_N', 'emit',
               'tolerances', 'seeds', 'certify_by_torus')


@dataclass(frozen=True)
class JobConfig:
    numerator: str
    denominator: str
    vars: tuple
    direction: Direction
    oracle_N: int = 40
    emit: tuple = ('json',)
    tolerances: Tolerances = DEFAULT_TOLERANCES
    seeds: tuple = ()
    certify_by_torus: bool = True
    name: str = 'job'

    @property
    def d(self):
        return self.direction.d

    def polynomials(self):
        return parse_polynomial(self.numerator, self.vars), parse_polynomial(self.denominator, self.vars)

    def bounds(self):
        return tuple(ai * self.oracle_N for ai in self.direction.a)


@dataclass
class Report:
    config: JobConfig
    critical_points: list = field(default_factory=list)
    complete_enumeration: bool = False
    contrib: object = None
    asymptotics: object = None
    oracle: dict = None
    ratios: pd.DataFrame = None
    verdict: str = None
    warnings: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _positive_number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        raise ConfigError(path, f"must be a positive number, got {value!r}")
    return value


def _parse_tolerances(doc):
    if not isinstance(doc, dict):
        raise ConfigError('tolerances', 'must be an object')
    known = {f.name for f in fields(Tolerances)}
    values = {}
    for key, value in doc.items():
        if key not in known:
            raise ConfigError(f'tolerances.{key}', f"unknown tolerance; expected one of {sorted(known)}")
        if key == 'max_iter':
            if not _is_int(value) or value < 1:
                raise ConfigError('tolerances.max_iter', f"must be a positive integer, got {value!r}")
            values[key] = value
        else:
            values[key] = float(_positive_number(value, f'tolerances.{key}'))
    return replace(DEFAULT_TOLERANCES, **values)


def _parse_direction(value):
    if not isinstance(value, list):
        raise ConfigError('direction', 'must be a list of positive integers')
    for i, ai in enumerate(value):
        if not _is_int(ai):
            raise ConfigError(f'direction[{i}]', f"must be an integer, got {ai!r}")
        if ai < 1:
            raise ConfigError(f'direction[{i}]', 'direction entries must be positive')
    if len(value) < 2:
        raise ConfigError('direction', f"need d >= 2 coordinates, got {len(value)}")
    return Direction(tuple(value))


def _parse_seeds(value, d):
    if not isinstance(value, list):
        raise ConfigError('seeds', 'must be a list of points')
    seeds = []
    for i, seed in enumerate(value):
        if not isinstance(seed, list) or len(seed) != d:
            raise ConfigError(f'seeds[{i}]', f"must be a list of {d} positive numbers")
        seeds.append(tuple(float(_positive_number(v, f'seeds[{i}][{j}]')) for j, v in enumerate(seed)))
    return tuple(seeds)


def _check_expression(text, vars, path):
    if not isinstance(text, str):
        raise ConfigError(path, 'must be an expression string')
    try:
        parse_polynomial(text, vars)
    except PolynomialSyntaxError as e:
        raise ConfigError(path, str(e)) from e


def validate_config(cfg):
    """Cross-field checks shared by parse_config and CLI overrides."""
    if len(cfg.vars) != cfg.d:
        raise ConfigError('vars', f"{len(cfg.vars)} variables for a direction of length {cfg.d}")
    if not _is_int(cfg.oracle_N) or cfg.oracle_N < 1:
        raise ConfigError('oracle_N', f"must be a positive integer, got {cfg.oracle_N!r}")
    cells = box_cells(cfg.bounds())
    if cells > MAX_CELLS:
        raise ConfigError('oracle_N', f"box {cfg.bounds()} has {cells} cells, limit is {MAX_CELLS}")
    for i, fmt in enumerate(cfg.emit):
        if fmt not in EMIT_FORMATS:
            raise ConfigError(f'emit[{i}]', f"unknown format {fmt!r}; expected one of {list(EMIT_FORMATS)}")
    for i, seed in enumerate(cfg.seeds):
        if len(seed) != cfg.d or any(v <= 0 for v in seed):
            raise ConfigError(f'seeds[{i}]', f"must be a list of {cfg.d} positive numbers")
    return cfg


def parse_config(text, source=None):
    """Validated JobConfig from a JSON document; defaults applied."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError('', f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise ConfigError('', 'a job must be a JSON object')
    for key in doc:
        if key not in CONFIG_KEYS:
            raise ConfigError(key, 'unknown key')
    if 'denominator' not in doc:
        raise ConfigError('denominator', 'required')
    if 'direction' not in doc:
        raise ConfigError('direction', 'required')

    direction = _parse_direction(doc['direction'])
    vars = doc.get('vars', default_vars(direction.d))
    if not isinstance(vars, list) or not all(isinstance(v, str) for v in vars):
        raise ConfigError('vars', 'must be a list of names')
    numerator = doc.get('numerator', '1')
    _check_expression(numerator, vars, 'numerator')
    _check_expression(doc['denominator'], vars, 'denominator')

    emit = doc.get('emit', ['json'])
    if not isinstance(emit, list):
        raise ConfigError('emit', 'must be a list of formats')
    certify = doc.get('certify_by_torus', True)
    if not isinstance(certify, bool):
        raise ConfigError('certify_by_torus', 'must be true or false')
    name = doc.get('name') or (Path(source).stem if source else 'job')

    cfg = JobConfig(
        numerator=numerator,
        denominator=doc['denominator'],
        vars=tuple(vars),
        direction=direction,
        oracle_N=doc.get('oracle_N', 40),
        emit=tuple(f for f in EMIT_FORMATS if f in emit) + tuple(f for f in emit if f not in EMIT_FORMATS),
        tolerances=_parse_tolerances(doc.get('tolerances', {})),
        seeds=_parse_seeds(doc.get('seeds', []), direction.d),
        certify_by_torus=certify,
        name=str(name),
    )
    return validate_config(cfg)


def load_config(path):
    path = Path(path)
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    try:
        return parse_config(text, source=str(path))
    except ConfigError as e:
        raise ConfigError(f"{path}:{e.path}" if e.path else str(path), e.message) from e


def with_overrides(cfg, emit=None, oracle_N=None, seeds=None, tol_residual=None):
    """Apply CLI flags on top of a parsed job."""
    changes = {}
    if emit:
        changes['emit'] = tuple(emit)
    if oracle_N is not None:
        changes['oracle_N'] = oracle_N
    if seeds:
        changes['seeds'] = cfg.seeds + tuple(tuple(s) for s in seeds)
    if tol_residual is not None:
        changes['tolerances'] = replace(cfg.tolerances, residual=float(_positive_number(tol_residual, '--tol-residual')))
    return validate_config(replace(cfg, **changes)) if changes else cfg


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def _solve_points(cfg, I, J, report, workers):
    a, tol = cfg.direction, cfg.tolerances
    positive = None
    try:
        positive = solve_positive_newton(J, a, seeds=cfg.seeds, tolerances=tol, workers=workers)
    except HypothesisError as e:
        report.warnings.append(str(e))
        report.failures['critical_points'] = str(e)

    if is_symmetric(J) and a.is_constant():
        try:
            symmetric = solve_symmetric_positive(J, a, tol)
            if positive is None:
                positive = symmetric
            elif max(abs(p - q) for p, q in zip(positive.point, symmetric.point)) > 1e-9:
                message = (f"[{POSITIVE_UNIQUENESS}] Newton and symmetric solves disagree: "
                           f"{positive.real_coords()} vs {symmetric.real_coords()}")
                report.warnings.append(message)
        except HypothesisError as e:
            report.warnings.append(str(e))

    if J.d == 2:
        try:
            report.critical_points = solve_bivariate_complete(J, a, tol)
            report.complete_enumeration = True
            return
        except HypothesisError as e:
            report.warnings.append(str(e))
    report.critical_points = [positive] if positive is not None else []


def _run_oracle(cfg, I, J, report, workers):
    try:
        table = compute_coefficient_table(I, J, cfg.bounds(), workers=workers)
    except SeriesError as e:
        report.warnings.append(f"[{ORIGIN_REGULAR}] {e}")
        report.failures['oracle'] = str(e)
        return None
    failures = recurrence_residuals(table, I, J)
    seq = diagonal_sequence(table, cfg.direction, cfg.oracle_N)
    report.oracle = {
        'N': cfg.oracle_N,
        'bounds': list(cfg.bounds()),
        'cells': table.cells,
        'recurrence_failures': len(failures),
        'diagonal': [format_exact(v) for v in seq.values],
    }
    logger.info(f"✅ Oracle: {table.cells} exact coefficients, recurrence failures: {len(failures)}")
    return seq


def run_analysis(cfg, workers=1):
    """
    End-to-end analysis of one job. Returns a Report; analysis failures are
    recorded as warnings naming the hypothesis that did not hold.
    """
    logger.info(f"🔬 Job {cfg.name}: F = ({cfg.numerator}) / ({cfg.denominator}), direction {list(cfg.direction.a)}")
    report = Report(config=cfg)
    I, J = cfg.polynomials()
    a = cfg.direction

    _solve_points(cfg, I, J, report, workers)
    logger.info(f"📊 {len(report.critical_points)} critical point(s), complete enumeration: {report.complete_enumeration}")

    if report.critical_points:
        try:
            report.contrib = classify_contributing(J, a, report.critical_points,
                                                   complete=report.complete_enumeration,
                                                   certify_by_torus=cfg.certify_by_torus,
                                                   tolerances=cfg.tolerances)
        except HypothesisError as e:
            report.warnings.append(str(e))
            report.failures['contributing'] = str(e)

    if report.contrib is not None:
        if not report.contrib.contrib_certain:
            report.warnings.append(f"[{CONTRIB_CERTIFIED}] not certified: "
                                   + "; ".join(report.contrib.notes))
        try:
            report.asymptotics = assemble_asymptotics(I, J, a, report.contrib, allow_uncertain=True,
                                                      tolerances=cfg.tolerances)
            report.warnings.extend(report.asymptotics.warnings)
        except HypothesisError as e:
            report.warnings.append(str(e))
            report.failures['asymptotics'] = str(e)
    elif 'asymptotics' not in report.failures:
        report.failures['asymptotics'] = 'no contributing point'

    seq = _run_oracle(cfg, I, J, report, workers)
    if seq is not None and report.asymptotics is not None:
        try:
            report.ratios = ratio_table(seq, report.asymptotics)
        except SeriesError as e:
            report.warnings.append(f"[{NUMERATOR_NONZERO}] {e}")
            report.failures['ratios'] = str(e)
        if report.ratios is not None and len(report.ratios) >= 4:
            report.verdict = convergence_verdict(zip(report.ratios['n'], report.ratios['ratio']))
        logger.info(f"📊 Convergence verdict: {report.verdict}")

    for warning in report.warnings:
        logger.warning(f"⚠️ {warning}")
    return report


def _halving_chain(ns):
    """n_max, then the largest tested n <= n_max/2, <= n_max/4, ..."""
    chain = [ns[-1]]
    target = ns[-1]
    while target > 1:
        target //= 2
        below = [n for n in ns if n <= target]
        if not below:
            break
        if below[-1] != chain[-1]:
            chain.append(below[-1])
    return chain[::-1]


def convergence_verdict(ratios):
    """
    PASS when |ratio - 1| shrinks strictly along the last three doublings,
    is below 0.05 at n_max and at least halves (factor 0.6) on the largest
    pair; FAIL when it exceeds 0.2 at n_max and grows; INCONCLUSIVE otherwise.
    """
    errors = {}
    for n, r in ratios:
        errors[int(n)] = abs(float(r) - 1)
    if len(errors) < 4:
        raise ValueError(f"convergence verdict needs at least 4 entries, got {len(errors)}")
    chain = _halving_chain(sorted(errors))
    if len(chain) < 2:
        # tested n span less than one doubling
        return INCONCLUSIVE
    e = [errors[n] for n in chain]
    last, previous = e[-1], e[-2]

    if last > 0.2 and last > previous:
        return FAIL
    tail = e[-4:]
    decreasing = len(tail) == 4 and all(y < x for x, y in zip(tail, tail[1:]))
    if decreasing and last < 0.05 and last <= 0.6 * previous:
        return PASS
    return INCONCLUSIVE


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _complex(z):
    z = complex(z)
    return [z.real, z.imag]


def _point_dict(p, tolerance):
    return {
        'coords': [_complex(z) for z in p.point],
        'residual': p.residual,
        'tolerance': tolerance,
        'is_positive_real': p.is_positive_real,
        'is_smooth': p.is_smooth,
        'is_simple_in_last': p.is_simple_in_last,
        'torus_moduli': list(p.torus_moduli),
    }


def report_to_dict(r):
    cfg, tol = r.config, r.config.tolerances
    point_tol = tol.polish if r.complete_enumeration else tol.residual
    out = {
        'input': {
            'name': cfg.name,
            'numerator': cfg.numerator,
            'denominator': cfg.denominator,
            'vars': list(cfg.vars),
            'direction': list(cfg.direction.a),
            'oracle_N': cfg.oracle_N,
            'emit': list(cfg.emit),
            'tolerances': asdict(tol),
            'seeds': [list(s) for s in cfg.seeds],
            'certify_by_torus': cfg.certify_by_torus,
        },
        'critical_points': {
            'complete_enumeration': r.complete_enumeration,
            'points': [_point_dict(p, point_tol) for p in r.critical_points],
        },
    }

    if r.contrib is not None:
        out['contributing'] = {
            'positive_point': _point_dict(r.contrib.positive_point, point_tol),
            'companions_on_torus': [_point_dict(p, point_tol) for p in r.contrib.companions_on_torus],
            'torus_tolerance': tol.torus,
            'aperiodic_case': r.contrib.aperiodic_case,
            'contrib_certain': r.contrib.contrib_certain,
            'notes': list(r.contrib.notes),
        }
    else:
        out['contributing'] = {'failure': r.failures.get('contributing') or r.failures.get('critical_points')}

    res = r.asymptotics
    if res is not None:
        hess = res.hessian
        out['hessian'] = {
            'path': res.path,
            'matrix': [[_complex(v) for v in row] for row in hess.matrix],
            'determinant': _complex(hess.determinant),
            'general_determinant': _complex(hess.general_determinant),
            'symmetric_determinant': None if hess.symmetric_determinant is None else _complex(hess.symmetric_determinant),
            'symmetric_shortcut_used': hess.symmetric_shortcut_used,
            'cross_check_tolerance': CROSS_CHECK_TOL,
        }
        out['asymptotics'] = {
            'formula': res.formula(),
            'point': [_complex(z) for z in res.point.point],
            'b0': res.b0.real,
            'b0_complex': _complex(res.b0),
            'exponent': str(res.exponent),
            'growth_per_step': res.growth_per_step,
            'last_coordinate_weight': res.last_coordinate_weight,
            'error_order': res.error_order(),
            'certified': res.certified,
            'precision_bits': TERM_PREC,
            'terms': [{'point': [_complex(z) for z in t.point.point], 'b0': _complex(t.b0),
                       'h': _complex(t.hessian.determinant)} for t in res.terms],
            'notes': list(res.notes),
        }
    else:
        failure = {'failure': r.failures.get('asymptotics')}
        out['hessian'] = failure
        out['asymptotics'] = failure

    if r.oracle is not None:
        oracle = dict(r.oracle)
        if 'ratios' in r.failures:
            oracle['ratio_failure'] = r.failures['ratios']
        oracle['ratios'] = [] if r.ratios is None else [
            {'n': int(row.n), 'f_exact': format_exact(row.f_exact),
             'leading_term': mpmath.nstr(row.leading_term, 17), 'ratio': float(row.ratio)}
            for row in r.ratios.itertuples(index=False)]
        out['oracle'] = oracle
    else:
        out['oracle'] = {'failure': r.failures.get('oracle')}
    out['verdict'] = r.verdict
    out['warnings'] = list(r.warnings)
    return out


def ratio_frame(r):
    """The ratio table with every column rendered as text for CSV output."""
    if r.ratios is None:
        return pd.DataFrame(columns=['n', 'f_exact', 'leading_term', 'ratio'])
    return pd.DataFrame({
        'n': r.ratios['n'].astype(int),
        'f_exact': [format_exact(v) for v in r.ratios['f_exact']],
        'leading_term': [mpmath.nstr(v, 17) for v in r.ratios['leading_term']],
        'ratio': [repr(float(v)) for v in r.ratios['ratio']],
    })


def render_markdown(r):
    data = report_to_dict(r)
    cfg = r.config
    lines = [
        f"# {cfg.name}",
        "",
        f"F = ({cfg.numerator}) / ({cfg.denominator}) over ({', '.join(cfg.vars)}), "
        f"direction a = ({', '.join(map(str, cfg.direction.a))})",
        "",
        "## Leading asymptotics",
        "",
    ]
    res = r.asymptotics
    if res is not None:
        lines += [
            f"f_{{a n}} ~ {res.formula()}, relative error {res.error_order()}",
            "",
            "| quantity | value |",
            "|---|---|",
            f"| c | {', '.join(f'{v:.15g}' for v in res.point.real_coords())} |",
            f"| h(J, c) | {res.hessian.determinant.real:.15g} ({res.path}) |",
            f"| b0 | {res.b0.real:.15g} |",
            f"| exponent | {res.exponent} |",
            f"| growth per step | {res.growth_per_step:.15g} |",
            f"| contrib certain | {r.contrib.contrib_certain} |",
            "",
        ]
    else:
        lines += [f"Not available: {data['asymptotics']['failure']}", ""]

    lines += ["## Oracle", ""]
    if r.oracle is None:
        lines += [f"Not available: {data['oracle']['failure']}", ""]
    else:
        lines += [f"Exact diagonal up to n = {cfg.oracle_N} ({r.oracle['cells']} cells, "
                  f"{r.oracle['recurrence_failures']} recurrence failures). Verdict: **{r.verdict}**", ""]
        if r.ratios is not None and len(r.ratios):
            frame = ratio_frame(r)
            shown = set(_halving_chain(sorted(frame['n'].tolist())))
            lines += ["| n | f_exact | leading term | ratio |", "|---|---|---|---|"]
            for row in frame.itertuples(index=False):
                if row.n in shown:
                    lines.append(f"| {row.n} | {row.f_exact} | {row.leading_term} | {row.ratio} |")
            lines.append("")

    lines += ["## Warnings", ""]
    lines += [f"- {w}" for w in r.warnings] or ["none"]
    if res is not None:
        lines += ["", "## Notes", ""] + [f"- {n}" for n in res.notes]
    return "\n".join(lines) + "\n"


def emit_report(r, formats, output_dir):
    """Write the requested formats to output_dir; returns {format: path}."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    for fmt in formats:
        if fmt == 'json':
            path = output_dir / f"{r.config.name}.json"
            with open(path, 'w', encoding='utf-8', newline='\n') as f:
                json.dump(report_to_dict(r), f, indent=2, ensure_ascii=False)
                f.write('\n')
        elif fmt == 'markdown':
            path = output_dir / f"{r.config.name}.md"
            with open(path, 'w', encoding='utf-8', newline='\n') as f:
                f.write(render_markdown(r))
        elif fmt == 'csv':
            path = output_dir / f"{r.config.name}.csv"
            ratio_frame(r).to_csv(path, index=False, encoding='utf-8', lineterminator='\n')
        else:
            raise ValueError(f"unknown report format {fmt!r}")
        written[fmt] = path
        logger.info(f"💾 {fmt} report saved to: {path}")
    return written


def run_job(cfg, output_dir, workers=1):
    """One job end to end; failures are returned, not raised."""
    try:
        report = run_analysis(cfg, workers=workers)
        files = emit_report(report, cfg.emit, output_dir)
        return {'job': cfg.name, 'success': True, 'verdict': report.verdict,
                'warnings': len(report.warnings), 'files': {k: str(v) for k, v in files.items()}}
    except OSError as e:
        return {'job': cfg.name, 'success': False, 'error': str(e), 'exit_code': 2}
    except (ConfigError, PolynomialSyntaxError, DimensionError) as e:
        return {'job': cfg.name, 'success': False, 'error': str(e), 'exit_code': 1}


def run_batch(configs, output_dir, workers=None):
    """
    Run several jobs concurrently, each writing to output_dir/<name>/.
    Results come back in input order.
    """
    output_dir = Path(output_dir)
    max_workers = max(1, min(len(configs), workers or psutil.cpu_count() or 1))
    logger.info(f"🔬 Running {len(configs)} job(s) with {max_workers} worker(s)")
    if len(configs) == 1:
        return [run_job(configs[0], output_dir / configs[0].name)]
    with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as executor:
        futures = [executor.submit(run_job, cfg, output_dir / cfg.name) for cfg in configs]
        return [future.result() for future in futures]


def main():
    parser = argparse.ArgumentParser(description='Analyse one job file and print the Markdown report')
    parser.add_argument('config', help='JSON job file')
    args = parser.parse_args()
    logging.basicConfig(level=logging.WARNING, format='%(message)s')

    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        print(f"❌ {e}")
        return 1
    except OSError as e:
        print(f"❌ {e}")
        return 2
    print(render_markdown(run_analysis(cfg)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
