import json
from pathlib import Path

import mpmath
import pytest

import run_analysis
from scripts.cli_report import (FAIL, INCONCLUSIVE, PASS, convergence_verdict, emit_report, load_config,
                                parse_config, render_markdown, report_to_dict, run_analysis as analyze_job,
                                run_batch, with_overrides)
from scripts.critical_solver import DEFAULT_TOLERANCES, Direction
from scripts.errors import (CONTRIB_CERTIFIED, FINITE_CRITICAL_SET, HESSIAN_NONZERO, NUMERATOR_NONZERO, ORIGIN_REGULAR,
                            POSITIVE_EXISTENCE, POSITIVE_UNIQUENESS, SIMPLE_ZERO, SMOOTH_POINT, SYMMETRIC_INPUT,
                            ConfigError, SeriesError)
from scripts.fixtures import bundled_jobs
from scripts.poly_core import parse_polynomial

from conftest import DELANNOY_J, JOBS_DIR, ZIGZAG_I, ZIGZAG_J

REPORT_KEYS = ['input', 'critical_points', 'contributing', 'hessian', 'asymptotics', 'oracle', 'verdict',
               'warnings']
# largest accepted |ratio - 1| at the last oracle n
RATIO_BOUNDS = {'zigzag': 0.02, 'delannoy_1_1': 0.03, 'delannoy_2_1': 0.03, 'delannoy_3_2': 0.03,
                'ternary_1_1_1': 0.02}


def job(**fields):
    doc = {'denominator': DELANNOY_J, 'direction': [1, 1]}
    doc.update(fields)
    return parse_config(json.dumps(doc))


@pytest.fixture(scope='module')
def delannoy_report():
    return analyze_job(job(name='delannoy', oracle_N=40, emit=['json', 'markdown', 'csv']))


class TestParseConfig:
    def test_defaults(self):
        cfg = job()
        assert cfg.numerator == '1'
        assert cfg.vars == ('x', 'y')
        assert cfg.direction == Direction((1, 1))
        assert cfg.oracle_N == 40
        assert cfg.emit == ('json',)
        assert cfg.tolerances == DEFAULT_TOLERANCES
        assert cfg.seeds == ()
        assert cfg.certify_by_torus
        assert cfg.name == 'job'

    def test_overrides_and_emit_order(self):
        cfg = job(emit=['csv', 'json'], tolerances={'residual': 1e-12, 'max_iter': 50}, seeds=[[0.4, 0.4]])
        assert cfg.emit == ('json', 'csv')
        assert cfg.tolerances.residual == 1e-12
        assert cfg.tolerances.max_iter == 50
        assert cfg.seeds == ((0.4, 0.4),)

    def test_default_variable_names(self):
        cfg = parse_config(json.dumps({'denominator': '1 - x1 - x2 - x3 - x4', 'direction': [1, 1, 1, 1]}))
        assert cfg.vars == ('x1', 'x2', 'x3', 'x4')

    @pytest.mark.parametrize('fields,path', [
        ({'direction': [1, 0]}, 'direction[1]'),
        ({'direction': [1, 'a']}, 'direction[1]'),
        ({'direction': [1]}, 'direction'),
        ({'vars': ['x', 'y', 'z']}, 'vars'),
        ({'oracle_N': 0}, 'oracle_N'),
        ({'oracle_N': 10 ** 6}, 'oracle_N'),
        ({'emit': ['pdf']}, 'emit[0]'),
        ({'tolerances': {'residual': -1}}, 'tolerances.residual'),
        ({'tolerances': {'speed': 1}}, 'tolerances.speed'),
        ({'seeds': [[0.1]]}, 'seeds[0]'),
        ({'certify_by_torus': 'yes'}, 'certify_by_torus'),
        ({'colour': 'red'}, 'colour'),
        ({'denominator': '1 - x - w'}, 'denominator'),
        ({'numerator': '2x'}, 'numerator'),
    ])
    def test_errors_name_the_field(self, fields, path):
        with pytest.raises(ConfigError) as excinfo:
            job(**fields)
        assert excinfo.value.path == path

    def test_non_positive_direction_message(self):
        with pytest.raises(ConfigError, match='direction entries must be positive'):
            job(direction=[0, 1])

    def test_missing_denominator(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config(json.dumps({'direction': [1, 1]}))
        assert excinfo.value.path == 'denominator'

    def test_invalid_json(self):
        with pytest.raises(ConfigError, match='invalid JSON'):
            parse_config('{"direction": [1, 1],')

    def test_load_config_prefixes_path(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text(json.dumps({'denominator': DELANNOY_J, 'direction': [1, -1]}), encoding='utf-8')
        with pytest.raises(ConfigError) as excinfo:
            load_config(path)
        assert str(excinfo.value).startswith(f"{path}:direction[1]")

    def test_name_defaults_to_file_stem(self, tmp_path):
        path = tmp_path / 'my_job.json'
        path.write_text(json.dumps({'denominator': DELANNOY_J, 'direction': [1, 1]}), encoding='utf-8')
        assert load_config(path).name == 'my_job'

    def test_with_overrides(self):
        cfg = with_overrides(job(), emit=['markdown'], oracle_N=12, seeds=[[0.3, 0.3]], tol_residual=1e-11)
        assert cfg.emit == ('markdown',)
        assert cfg.oracle_N == 12
        assert cfg.seeds == ((0.3, 0.3),)
        assert cfg.tolerances.residual == 1e-11
        with pytest.raises(ConfigError):
            with_overrides(job(), oracle_N=-3)


class TestConvergenceVerdict:
    def test_pass(self):
        ratios = [(n, 1 - 0.5 / n) for n in range(1, 41)]
        assert convergence_verdict(ratios) == PASS

    def test_fail(self):
        ratios = [(n, 1 + 0.05 * n) for n in range(1, 41)]
        assert convergence_verdict(ratios) == FAIL

    def test_slow_convergence_is_inconclusive(self):
        # error ~ n^(-1/4) only shrinks by 0.84 per doubling
        ratios = [(n, 1 + 0.2 * n ** -0.25) for n in range(1, 41)]
        assert convergence_verdict(ratios) == INCONCLUSIVE

    def test_oscillation_is_inconclusive(self):
        ratios = [(n, 1 + (0.01 if n % 2 else 0.03)) for n in range(1, 41)]
        assert convergence_verdict(ratios) == INCONCLUSIVE

    def test_needs_four_entries(self):
        with pytest.raises(ValueError):
            convergence_verdict([(1, 0.9), (2, 0.95), (3, 0.97)])

    def test_less_than_one_doubling_is_inconclusive(self):
        assert convergence_verdict([(10, 1.01), (11, 1.009), (12, 1.008), (13, 1.007)]) == INCONCLUSIVE


class TestRunAnalysis:
    def test_delannoy(self, delannoy_report):
        res = delannoy_report.asymptotics
        assert res.growth_per_step == pytest.approx(5.8284, abs=1e-4)
        assert res.b0.real == pytest.approx(0.57268, abs=1e-5)
        assert delannoy_report.contrib.contrib_certain
        assert delannoy_report.complete_enumeration
        assert delannoy_report.oracle['recurrence_failures'] == 0
        assert delannoy_report.oracle['diagonal'][:5] == ['1', '3', '13', '63', '321']
        assert delannoy_report.verdict == PASS
        assert delannoy_report.warnings == []

    def test_failures_become_warnings(self):
        report = analyze_job(job(denominator='x - y', oracle_N=8))
        assert report.asymptotics is None
        assert report.oracle is None
        assert report.verdict is None
        assert any(POSITIVE_EXISTENCE in w for w in report.warnings)
        assert any(ORIGIN_REGULAR in w for w in report.warnings)
        data = report_to_dict(report)
        assert 'undefined at origin' in data['oracle']['failure']
        assert data['asymptotics']['failure']

    def test_vanishing_numerator_is_a_warning(self):
        report = analyze_job(job(numerator='x - y', oracle_N=10))
        assert report.asymptotics is None
        assert report.verdict is None
        assert any(w.startswith(f'[{NUMERATOR_NONZERO}]') for w in report.warnings)
        assert report.oracle['diagonal'] == ['0'] * 11
        assert report_to_dict(report)['oracle']['ratios'] == []

    def test_ratio_failure_is_a_warning(self, monkeypatch):
        def vanishing(seq, asym):
            raise SeriesError('leading term vanishes at n=1; check the asymptotic result')

        monkeypatch.setattr('scripts.cli_report.ratio_table', vanishing)
        report = analyze_job(job(oracle_N=8))
        assert report.ratios is None
        assert report.verdict is None
        assert any(w.startswith(f'[{NUMERATOR_NONZERO}]') for w in report.warnings)
        assert 'leading term vanishes' in report_to_dict(report)['oracle']['ratio_failure']

    def test_determinant_mismatch_reaches_report(self, monkeypatch):
        monkeypatch.setattr('scripts.asymptotics.hessian_det_symmetric', lambda J, c, tolerances: 7 + 0j)
        report = analyze_job(job(numerator=ZIGZAG_I, denominator=ZIGZAG_J, oracle_N=8))
        warnings = report_to_dict(report)['warnings']
        assert any(w.startswith(f'[{SYMMETRIC_INPUT}] Hessian determinant mismatch') for w in warnings)

    def test_ternary_without_complete_enumeration(self):
        cfg = parse_config(json.dumps({'denominator': '1 - x - y - z', 'direction': [1, 2, 3], 'oracle_N': 8}))
        report = analyze_job(cfg)
        assert not report.complete_enumeration
        assert report.contrib.contrib_certain
        assert report.asymptotics.path == 'general'
        assert report.oracle['diagonal'][1] == '60'

    @pytest.mark.slow
    def test_zigzag_acceptance(self):
        report = analyze_job(load_config(JOBS_DIR / 'zigzag.json'))
        r80 = report.ratios.loc[report.ratios.n == 80, 'ratio'].item()
        assert abs(r80 - 1) < 0.02
        assert report.verdict == PASS
        assert report.contrib.contrib_certain

    @pytest.mark.slow
    def test_block_alignments_uncertain_but_convergent(self):
        report = analyze_job(load_config(JOBS_DIR / 'alignments_block2_d2.json'))
        assert not report.contrib.contrib_certain
        assert any(CONTRIB_CERTIFIED in w for w in report.warnings)
        assert report.asymptotics is not None
        assert report.verdict == PASS


class TestReports:
    def test_json_layout(self, delannoy_report):
        data = report_to_dict(delannoy_report)
        assert list(data) == REPORT_KEYS
        assert data['asymptotics']['exponent'] == '-1/2'
        assert data['asymptotics']['error_order'] == 'O(n_d^(-3/2))'
        assert data['hessian']['symmetric_shortcut_used']
        assert data['oracle']['ratios'][3]['f_exact'] == '321'

    def test_emitted_files(self, delannoy_report, tmp_path):
        written = emit_report(delannoy_report, ['json', 'markdown', 'csv'], tmp_path)
        assert set(written) == {'json', 'markdown', 'csv'}

        rows = written['csv'].read_bytes().decode('utf-8').split('\n')
        assert rows[0] == 'n,f_exact,leading_term,ratio'
        assert rows[4].startswith('4,321,330.4')
        assert rows[4].split(',')[3].startswith('0.971')
        assert b'\r\n' not in written['csv'].read_bytes()

        markdown = written['markdown'].read_text(encoding='utf-8')
        assert 'c^{-n·a} · b0 · (a_d n)^{(1-d)/2}' in markdown
        assert 'Verdict: **PASS**' in markdown
        assert markdown == render_markdown(delannoy_report)

        assert json.loads(written['json'].read_text(encoding='utf-8'))['verdict'] == PASS

    def test_json_is_reproducible(self, tmp_path):
        cfg = job(name='delannoy_small', oracle_N=10)
        first = emit_report(analyze_job(cfg), ['json'], tmp_path / 'a')['json'].read_bytes()
        second = emit_report(analyze_job(cfg), ['json'], tmp_path / 'b')['json'].read_bytes()
        assert first == second


class TestBundledJobs:
    def test_job_files_match_builders(self):
        for built in bundled_jobs():
            with open(JOBS_DIR / f"{built['name']}.json", encoding='utf-8') as f:
                stored = json.load(f)
            assert set(stored) == set(built)
            for key in built:
                if key in ('numerator', 'denominator'):
                    assert parse_polynomial(stored[key], stored['vars']) == parse_polynomial(built[key], built['vars'])
                else:
                    assert stored[key] == built[key], key

    def test_job_files_parse(self):
        for path in sorted(JOBS_DIR.glob('*.json')):
            assert load_config(path).name == path.stem

    @pytest.mark.slow
    @pytest.mark.parametrize('path', sorted(JOBS_DIR.glob('*.json')), ids=lambda p: p.stem)
    def test_bundled_job_converges(self, path):
        report = analyze_job(load_config(path))
        assert report.verdict == PASS
        assert report.oracle['recurrence_failures'] == 0
        bound = RATIO_BOUNDS.get(path.stem)
        if bound is not None:
            last = report.ratios.iloc[-1]
            assert last.n == report.config.oracle_N
            assert abs(last.ratio - 1) < bound


class TestCommandLine:
    def test_bad_config_exit_code(self, tmp_path):
        path = tmp_path / 'bad.json'
        path.write_text('{"denominator": "1 - x - y", "direction": [0, 1]}', encoding='utf-8')
        assert run_analysis.main(['--quiet', 'analyze', str(path), '--out', str(tmp_path / 'out')]) == 1

    def test_missing_file_exit_code(self, tmp_path):
        assert run_analysis.main(['--quiet', 'analyze', str(tmp_path / 'absent.json'),
                                  '--out', str(tmp_path / 'out')]) == 2

    def test_analyze_writes_reports(self, tmp_path):
        path = tmp_path / 'delannoy.json'
        path.write_text(json.dumps({'denominator': DELANNOY_J, 'direction': [2, 1], 'oracle_N': 12}),
                        encoding='utf-8')
        out = tmp_path / 'out'
        assert run_analysis.main(['--quiet', 'analyze', str(path), '--emit', 'json,csv', '--out', str(out)]) == 0
        assert (out / 'delannoy' / 'delannoy.json').exists()
        assert (out / 'delannoy' / 'delannoy.csv').exists()
        assert not (out / 'delannoy' / 'delannoy.md').exists()
        summary = json.loads((out / 'batch_summary.json').read_text(encoding='utf-8'))
        assert summary[0]['success']

    def test_fixtures_command(self, tmp_path):
        assert run_analysis.main(['--quiet', 'fixtures', '--out', str(tmp_path), '--alignments-d', '5']) == 0
        assert (tmp_path / 'zigzag.json').exists()
        assert (tmp_path / 'alignments_d5.json').exists()


class TestBatch:
    def test_concurrent_jobs_match_serial_runs(self, tmp_path):
        configs = []
        for i in range(8):
            if i % 2:
                configs.append(job(name=f'delannoy_{i}', direction=[2, 1], oracle_N=20))
            else:
                configs.append(job(name=f'zigzag_{i}', numerator=ZIGZAG_I, denominator=ZIGZAG_J, oracle_N=20))
        prec = mpmath.mp.prec
        results = run_batch(configs, tmp_path, workers=8)
        assert mpmath.mp.prec == prec
        assert all(r['success'] for r in results)
        for cfg, result in zip(configs, results):
            batched = json.loads(Path(result['files']['json']).read_text(encoding='utf-8'))
            serial = json.loads(json.dumps(report_to_dict(analyze_job(cfg))))
            for key in ('asymptotics', 'oracle', 'verdict', 'warnings'):
                assert batched[key] == serial[key], key


def test_warning_labels_name_result_and_hypothesis():
    labels = [POSITIVE_EXISTENCE, POSITIVE_UNIQUENESS, FINITE_CRITICAL_SET, CONTRIB_CERTIFIED, SMOOTH_POINT,
              SIMPLE_ZERO, NUMERATOR_NONZERO, HESSIAN_NONZERO, SYMMETRIC_INPUT, ORIGIN_REGULAR]
    assert len(set(labels)) == len(labels)
    for label in labels:
        result, hypothesis = label.split(': ', 1)
        assert result and hypothesis
