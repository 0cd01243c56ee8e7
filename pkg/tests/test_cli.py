from __future__ import annotations

import io
import json

import pandas as pd
import pytest

from surplus_sharing.cli import (
    ExitCode,
    dump_portfolio,
    load_portfolio,
    main,
    parse_args,
    parse_grid,
    parse_portfolio,
)
from surplus_sharing.utils import DistortionError, GuardError, InputError


def run_main(capsys, *argv) -> tuple[int, str, str]:
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_run_model2_w1(capsys, fixtures):
    code, out, _ = run_main(capsys, 'run', '--model', '2', fixtures / 'w1.json')
    assert code == ExitCode.OK
    (report,) = json.loads(out)['reports']
    assert report['model'] == 2
    assert report['retention']['R'] == pytest.approx(29 / 9, abs=1e-10)
    assert report['accepted'] is True


def test_run_all_models_csv(capsys, fixtures):
    code, out, _ = run_main(capsys, 'run', '--model', 'all', fixtures / 'w1-model4.json', '--format', 'csv')
    assert code == ExitCode.OK
    frame = pd.read_csv(io.StringIO(out))
    assert list(frame.columns) == ['model', 'quantity', 'value', 'atom_w1', 'atom_w2', 'atom_w3', 'atom_w4']
    assert sorted(frame['model'].unique()) == [1, 2, 3, 4]
    surplus = frame[(frame['model'] == 4) & (frame['quantity'] == 'surplus')]
    assert surplus[['atom_w1', 'atom_w4']].values.tolist() == [[pytest.approx(257 / 64), pytest.approx(1 / 64)]]


def test_run_underpriced_is_input_error(capsys, fixtures):
    code, out, err = run_main(capsys, 'run', '--model', '3', fixtures / 'w1-underpriced.json')
    assert code == ExitCode.INPUT_ERROR
    assert out == ''
    assert 'premia.agent1' in err


def test_run_is_deterministic(capsys, fixtures):
    outputs = [run_main(capsys, 'run', '--model', 'all', fixtures / 'w1-model4.json')[1] for _ in range(2)]
    assert outputs[0] == outputs[1]
    assert outputs[0].endswith('}\n')


def test_run_text_format(capsys, fixtures):
    code, out, _ = run_main(capsys, 'run', '--model', '1', fixtures / 'w1.json', '--format', 'text')
    assert code == ExitCode.OK
    assert out.startswith('Model 1: accepted')
    assert '{w4}' in out


def test_run_with_verify(capsys, fixtures):
    code, out, _ = run_main(capsys, 'run', '--verify', fixtures / 'w1-model4.json')
    assert code == ExitCode.OK
    assert all('oracle_mismatches' not in r for r in json.loads(out)['reports'])


def test_run_writes_to_file(capsys, fixtures, tmp_path):
    target = tmp_path / 'reports.json'
    code, out, _ = run_main(capsys, 'run', '--model', '4', fixtures / 'w1-model4.json', '--out', target)
    assert code == ExitCode.OK
    assert out == ''
    (report,) = json.loads(target.read_text())['reports']
    assert report['figures']['extra_return'] == pytest.approx(29 / 64, abs=1e-10)


def test_run_insurer_sup_premia(capsys, fixtures):
    code, out, _ = run_main(
        capsys, 'run', '--model', '3', '--premia-principle', 'insurer-sup', fixtures / 'w1-model4.json'
    )
    assert code == ExitCode.OK
    (report,) = json.loads(out)['reports']
    assert report['charged_premia'] == {'agent1': 1.375, 'agent2': 1.1875}
    assert report['retention']['R'] == pytest.approx(29 / 9, abs=1e-10)


def test_run_reinsurer_sup_needs_reinsurer(capsys, fixtures):
    code, _, err = run_main(
        capsys, 'run', '--model', '1', '--premia-principle', 'reinsurer-sup', fixtures / 'w1.json'
    )
    assert code == ExitCode.INPUT_ERROR
    assert 'utilities.reinsurer' in err


def test_run_model4_without_reinsurer(capsys, fixtures):
    code, _, err = run_main(capsys, 'run', '--model', '4', fixtures / 'w1.json')
    assert code == ExitCode.INPUT_ERROR
    assert 'utilities.reinsurer' in err


@pytest.mark.parametrize(
    'argv',
    [
        [],
        ['run'],
        ['run', '--model', 'five', 'w1.json'],
        ['launch', 'w1.json'],
        ['verify', '--atoms', '9'],
        ['verify', '--count', '0'],
        ['verify', '--tie-frequency', '2'],
    ],
)
def test_usage_errors(capsys, argv):
    code, out, err = run_main(capsys, *argv)
    assert code == ExitCode.INPUT_ERROR
    assert err.startswith('error:')


def test_unreadable_input(capsys, tmp_path):
    assert run_main(capsys, 'run', tmp_path / 'missing.json')[0] == ExitCode.INPUT_ERROR
    broken = tmp_path / 'broken.json'
    broken.write_text('{"space": ')
    assert run_main(capsys, 'run', broken)[0] == ExitCode.INPUT_ERROR


def test_sweep_w1(capsys, fixtures):
    code, out, _ = run_main(capsys, 'sweep', '--grid', '0.25:8:32', fixtures / 'w1-model4.json', '--format', 'csv')
    assert code == ExitCode.OK
    assert out.endswith('# monotone_retention=true monotone_utility=true\n')
    frame = pd.read_csv(io.StringIO(out), comment='#')
    assert len(frame) == 32
    assert frame['R'].is_monotonic_increasing
    assert frame['insurer_utility'].is_monotonic_increasing


def test_sweep_rejects_negative_grid(capsys, fixtures):
    code, _, err = run_main(capsys, 'sweep', '--grid=-0.5:2:3', fixtures / 'w1-model4.json')
    assert code == ExitCode.INPUT_ERROR
    assert 'grid' in err


def test_verify(capsys):
    code, out, _ = run_main(capsys, 'verify', '--seed', '3', '--count', '4')
    assert code == ExitCode.OK
    summary = json.loads(out)
    assert summary['passed'] == summary['total'] == 4
    assert [r['seed'] for r in summary['results']] == [3, 4, 5, 6]


def test_verify_text(capsys):
    code, out, _ = run_main(capsys, 'verify', '--count', '2', '--atoms', '3', '--agents', '1', '--format', 'text')
    assert code == ExitCode.OK
    assert out.endswith('passed 2 of 2\n')


def test_validate(capsys, fixtures):
    path = fixtures / 'w1-model4.json'
    code, out, _ = run_main(capsys, 'validate', '--model', '4', path)
    assert code == ExitCode.OK
    assert out == f'{path}: valid for model(s) 4 (4 atoms, 2 agents)\n'
    code, _, err = run_main(capsys, 'validate', fixtures / 'w1-underpriced.json')
    assert code == ExitCode.INPUT_ERROR
    assert 'premia.agent1' in err


def test_parse_args_defaults():
    config = parse_args(['run', 'w1.json'])
    assert config.models == (1, 2, 3, 4)
    assert config.fmt == 'json' and config.out is None and not config.verify
    assert config.premia_principle == 'charged'


def test_parse_args_verify_guards():
    with pytest.raises(GuardError):
        parse_args(['verify', '--agents', '6'])


@pytest.mark.parametrize('text', ['1:0.5:3', '0:1:3', 'a:b:c', '1:2', '1:2:0', '-1'])
def test_parse_grid_rejects(text):
    with pytest.raises(InputError) as exc:
        parse_grid(text)
    assert exc.value.field == 'grid'


def test_portfolio_round_trip(fixtures):
    portfolio = parse_portfolio(fixtures / 'w1-model4.json', (1, 2, 3, 4))
    again = load_portfolio(json.loads(json.dumps(dump_portfolio(portfolio))))
    assert dump_portfolio(again) == dump_portfolio(portfolio)
    assert again.reinsurer == portfolio.reinsurer
    assert again.premia == pytest.approx((100 / 64, 93 / 64))


@pytest.fixture
def doc(fixtures) -> dict:
    return json.loads((fixtures / 'w1-model4.json').read_text())


@pytest.mark.parametrize(
    'path, value, field',
    [
        (('claims', 'agent1'), [0, -1, 1, 2], 'claims.agent1'),
        (('claims', 'agent2'), [0, 1], 'claims.agent2'),
        (('space', 'probs'), ['1/2', '1/4', '1/4', '1/4'], 'space.probs'),
        (('space', 'atoms'), 'w1 w2', 'space.atoms'),
        (('capital',), -1, 'capital'),
        (('capital',), 'lots', 'capital'),
        (('premia', 'agent2'), 'x', 'premia.agent2'),
        (('utilities', 'insurer'), 'power:0.5', 'utilities.insurer'),
        (('utilities', 'agents', 'agent1'), 'pwl:0,0;0.5,0.6;1,1', 'utilities.agents.agent1'),
    ],
)
def test_load_portfolio_field_paths(doc, path, value, field):
    target = doc
    for key in path[:-1]:
        target = target[key]
    target[path[-1]] = value
    with pytest.raises(InputError) as exc:
        load_portfolio(doc)
    assert exc.value.field == field


def test_load_portfolio_distortion_errors_keep_class(doc):
    doc['utilities']['reinsurer'] = 'gamma:3'
    with pytest.raises(DistortionError) as exc:
        load_portfolio(doc)
    assert exc.value.field == 'utilities.reinsurer'


def test_load_portfolio_missing_fields(doc):
    del doc['capital']
    with pytest.raises(InputError) as exc:
        load_portfolio(doc)
    assert exc.value.field == 'capital'
    doc['capital'] = 1
    doc['premia'] = {'agent1': 1.6}
    with pytest.raises(InputError) as exc:
        load_portfolio(doc)
    assert exc.value.field == 'premia.agent2'


def test_load_portfolio_validates_models(doc):
    doc['premia']['agent1'] = '1.5'
    load_portfolio(doc, (3,))
    with pytest.raises(InputError) as exc:
        load_portfolio(doc, (4,))
    assert exc.value.field == 'premia.agent1'


if __name__ == '__main__':
    pytest.main([__file__])
