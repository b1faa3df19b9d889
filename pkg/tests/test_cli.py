import json
import pytest
from ctcsync import __version__
from ctcsync.harness.cli import main, parser


def _config(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


SMALL = {
    'beacon-match': {'trials': 20, 'grid': {'beacon.length': [3, 4], 'noise': ['low']}},
    'ber-temporal': {'trials': 10, 'grid': {'temporal.granularity_ms': [2]}},
    'ber-energy': {'trials': 10, 'grid': {'energy.levels': [2, 4], 'energy.slot_ns': ['10 ms']}},
    'sync-error': {'trials': 3, 'grid': {'pair_interval_ns': ['50 ms', '7 s']},
                   'base': {'rounds': 2, 'holdover_ns': '3 s'}},
    'sweep': {'trials': 2, 'grid': {'codec': ['temporal', 'energy']}, 'base': {'rounds': 2}},
}


@pytest.mark.parametrize('kind', sorted(SMALL))
def test_reruns_are_byte_identical(tmp_path, kind):
    config = _config(tmp_path, 'cfg.json', SMALL[kind])
    outputs = []
    for run in ('a', 'b'):
        out = tmp_path / run / 'table.csv'
        assert main([kind, '-c', config, '-s', '11', '-o', str(out), '-q']) == 0
        outputs.append(sorted(p.name for p in out.parent.iterdir()))
        outputs.append([p.read_bytes() for p in sorted(out.parent.iterdir())])
    assert outputs[0] == outputs[2]
    assert outputs[1] == outputs[3]
    if kind == 'sync-error':
        assert outputs[0] == ['table.csv', 'table_series.csv', 'table_skew_hist.csv']


def test_seed_changes_the_output(tmp_path):
    config = _config(tmp_path, 'cfg.json', SMALL['ber-energy'])
    main(['ber-energy', '-c', config, '-s', '1', '-n', '30', '-o', str(tmp_path / 'a.csv'), '-q'])
    main(['ber-energy', '-c', config, '-s', '2', '-n', '30', '-o', str(tmp_path / 'b.csv'), '-q'])
    assert (tmp_path / 'a.csv').read_bytes() != (tmp_path / 'b.csv').read_bytes()


def test_summary_is_printed(tmp_path, capsys):
    config = _config(tmp_path, 'cfg.json', SMALL['sweep'])
    assert main(['sweep', '-c', config, '-j', '1']) == 0
    out = capsys.readouterr().out
    assert '[sweep] cell 1 (codec=energy) accepted_pairs' in out


def test_configuration_errors_exit_with_2(tmp_path, capsys):
    assert main(['sweep', '-c', str(tmp_path / 'missing.json')]) == 2
    assert 'ctcsync: error: ' in capsys.readouterr().err

    bad = tmp_path / 'bad.json'
    bad.write_text('{"trials": 2,\n "grid": {"rounds": [1, 2}\n}')
    assert main(['sweep', '-c', str(bad)]) == 2
    assert 'bad.json:2:' in capsys.readouterr().err

    config = _config(tmp_path, 'unknown.json', {'base': {'beacon': {'lenght': 3}}})
    assert main(['sweep', '-c', config]) == 2
    assert 'beacon.lenght' in capsys.readouterr().err

    config = _config(tmp_path, 'invalid.json', {'grid': {'beacon.length': [7]}})
    assert main(['beacon-match', '-c', config, '-n', '1']) == 2
    assert 'unsupported beacon length 7' in capsys.readouterr().err


def test_runtime_errors_exit_with_1(tmp_path, capsys):
    blocker = tmp_path / 'file'
    blocker.write_text('')
    config = _config(tmp_path, 'cfg.json', SMALL['sweep'])
    assert main(['sweep', '-c', config, '-o', str(blocker / 'table.csv'), '-q']) == 1
    assert 'ctcsync: error: ' in capsys.readouterr().err


def test_usage_errors():
    with pytest.raises(SystemExit) as e:
        main(['calibrate'])
    assert e.value.code == 2
    with pytest.raises(SystemExit):
        main([])


def test_version(capsys):
    with pytest.raises(SystemExit) as e:
        parser().parse_args(['--version'])
    assert e.value.code == 0
    assert __version__ in capsys.readouterr().out
