import json
import pytest
from ctcsync.sync import SessionConfig
from ctcsync.harness.config import ConfigException, load_presets, read_config_file, merge, build, session_config, \
    apply_overrides
from ctcsync.beacon import BeaconSpec

MS = 1_000_000
S = 1_000_000_000


def test_presets():
    presets = load_presets()
    assert presets['noise_levels'] == {'none': 0.0, 'low': 1.0, 'medium': 3.0, 'high': 6.0}
    assert set(presets['experiments']) == {'beacon-match', 'ber-temporal', 'ber-energy', 'sync-error', 'sweep'}


def test_read_json(tmp_path):
    path = tmp_path / 'cfg.json'
    path.write_text(json.dumps({'trials': 3, 'base': {'pair_interval_ns': '7 s'}}))
    assert read_config_file(str(path)) == {'trials': 3, 'base': {'pair_interval_ns': '7 s'}}


def test_empty_file_is_an_empty_mapping(tmp_path):
    path = tmp_path / 'empty.yaml'
    path.write_text('')
    assert read_config_file(str(path)) == {}


def test_syntax_errors_carry_line_and_column(tmp_path):
    path = tmp_path / 'bad.json'
    path.write_text('{"trials": 3,\n  "seed": [1, 2\n}\n')
    with pytest.raises(ConfigException, match=r'bad\.json:\d+:\d+'):
        read_config_file(str(path))


def test_non_mapping_and_missing_files(tmp_path):
    path = tmp_path / 'list.yaml'
    path.write_text('- 1\n- 2\n')
    with pytest.raises(ConfigException, match='must be a mapping'):
        read_config_file(str(path))
    with pytest.raises(ConfigException, match='cannot read'):
        read_config_file(str(tmp_path / 'missing.json'))


def test_merge_is_recursive_and_copies():
    base = {'base': {'rounds': 5, 'beacon': {'length': 3}}, 'trials': 10}
    merged = merge(base, {'base': {'beacon': {'t2_ns': '60 ms'}}, 'trials': 2})
    assert merged == {'base': {'rounds': 5, 'beacon': {'length': 3, 't2_ns': '60 ms'}}, 'trials': 2}
    merged['base']['rounds'] = 1
    assert base['base']['rounds'] == 5


def test_session_config_from_quantities():
    cfg = session_config({
        'pair_interval_ns': '7 s',
        'holdover_ns': '43 s',
        'beacon': {'length': 4, 't2_ns': '60 ms'},
        'interference': {'mean_rate_hz': '5 Hz', 'duration_ns': ['1 ms', '2 ms']},
        'energy': {'levels': 2, 'power_dbm': {1: -80}},
        'temporal': {'granularity_ms': '3 ms'},
        'clock_receiver': {'skew': 1.0001, 'offset_ns': '2 s'},
    })
    assert cfg.pair_interval_ns == 7 * S
    assert cfg.holdover == 43 * S
    assert cfg.beacon == BeaconSpec(length=4, t2_ns=60 * MS)
    assert cfg.interference.mean_rate_hz == 5.0
    assert cfg.interference.duration_ns == (MS, 2 * MS)
    assert cfg.energy.packet_power_dbm == (-80.0,)
    assert cfg.temporal.granularity_ms == 3
    assert cfg.clock_receiver.offset_ns == 2 * S


def test_unknown_fields_report_their_path():
    with pytest.raises(ConfigException, match=r'^beacon\.lenght: unknown field of BeaconSpec'):
        session_config({'beacon': {'lenght': 3}})
    with pytest.raises(ConfigException, match=r'^pair_intervall_ns: unknown field'):
        session_config({'pair_intervall_ns': '7 s'})


def test_invalid_values_report_their_path():
    with pytest.raises(ConfigException, match=r'^beacon: unsupported beacon length 7'):
        session_config({'beacon': {'length': 7}})
    with pytest.raises(ConfigException, match=r'^SessionConfig: unknown codec'):
        session_config({'codec': 'phase'})
    with pytest.raises(ConfigException, match=r'^pair_interval_ns: cannot'):
        session_config({'pair_interval_ns': '7 parsecs'})


def test_build_rejects_non_mappings():
    with pytest.raises(ConfigException):
        build(SessionConfig, [1, 2])


def test_apply_overrides():
    cfg = apply_overrides(SessionConfig(), {'beacon.t2_ns': '60 ms', 'noise': 'high', 'rounds': 2})
    assert cfg.beacon.t2_ns == 60 * MS
    assert cfg.noise.sigma_db == 6.0
    assert cfg.rounds == 2
    assert apply_overrides(SessionConfig(), {'noise': 2.5}).noise.sigma_db == 2.5
    assert apply_overrides(SessionConfig(), {'noise_level': 'quiet'}, {'quiet': 0.5}).noise.sigma_db == 0.5
    cfg = apply_overrides(SessionConfig(), {'noise': {'sigma_db': 2.0, 'floor_dbm': -90.0}})
    assert (cfg.noise.sigma_db, cfg.noise.floor_dbm) == (2.0, -90.0)


def test_apply_overrides_errors():
    with pytest.raises(ConfigException, match='unknown noise level'):
        apply_overrides(SessionConfig(), {'noise': 'deafening'})
    with pytest.raises(ConfigException, match=r'^beacon\.lenght: unknown field'):
        apply_overrides(SessionConfig(), {'beacon.lenght': 4})
    with pytest.raises(ConfigException, match=r'^beacon\.length: unsupported beacon length 6'):
        apply_overrides(SessionConfig(), {'beacon.length': 6})
    with pytest.raises(ConfigException, match=r'^rounds\.count'):
        apply_overrides(SessionConfig(), {'rounds.count': 4})
