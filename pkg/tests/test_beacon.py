import numpy as np
import pytest
from ctcsync.symbols import T1, T2, Erasure, symbol_of
from ctcsync.clocks import JitterModel
from ctcsync.channel import NoiseModel, InterferenceModel, DetectorParams
from ctcsync.beacon import PATTERNS, BarkerCode, BeaconSpec, BeaconException, pattern_of, autocorrelation, \
    beacon_schedule, symbolize, match_beacon, beacon_trial, matching_rate

MS = 1_000_000
PERIOD = 166_667


def test_symbols():
    assert int(T1) == 1 and int(T2) == -1 and int(Erasure) == 0
    assert float(T2) == -1.0
    assert str(T1) == 't1' and str(Erasure) == '?'
    assert T1 == 1 and T2 == T2 and T1 != T2
    assert symbol_of(-1) is T2
    assert len({T1, T2, Erasure}) == 3


def test_every_pattern_is_a_barker_code():
    for (length, variant), code in PATTERNS.items():
        barker = BarkerCode(code)
        assert len(barker) == length - 1
        for v in range(1, len(barker)):
            assert abs(autocorrelation(barker, v)) <= 1, (length, variant, v)
        assert barker.is_barker


def test_alternating_sequence_is_not_barker():
    code = BarkerCode((1, -1, 1, -1))
    assert autocorrelation(code, 2) == 2
    assert not code.is_barker


def test_autocorrelation_peak():
    code = BarkerCode((1, 1, 1, -1))
    assert autocorrelation(code, 0) == 4
    assert code.sidelobes == [1, 0, -1]
    with pytest.raises(BeaconException):
        code.autocorrelation(4)


def test_pattern_table():
    assert pattern_of(3) == (T1, T2)
    assert pattern_of(4) == (T1, T1, T2)
    assert pattern_of(5) == (T1, T1, T1, T2)
    assert pattern_of(5, 'B') == (T1, T1, T2, T1)
    assert len(pattern_of(14)) == 13


def test_unsupported_length():
    with pytest.raises(BeaconException, match='unsupported beacon length 7'):
        pattern_of(7)
    with pytest.raises(BeaconException):
        BeaconSpec(length=9)


def test_beacon_spec_validation():
    with pytest.raises(BeaconException):
        BeaconSpec(t1_ns=30 * MS, t2_ns=30 * MS)
    with pytest.raises(BeaconException):
        BeaconSpec(t1_ns=5 * MS, t2_ns=70 * MS)


def test_beacon_spec_properties():
    spec = BeaconSpec(length=4, t1_ns=30 * MS, t2_ns=70 * MS)
    assert spec.intervals_ns == (30 * MS, 30 * MS, 70 * MS)
    assert spec.span_ns == 130 * MS
    assert spec.default_tolerance_ns() == 5 * MS
    assert BeaconSpec(t1_ns=30 * MS, t2_ns=40 * MS).default_tolerance_ns() == 2_500_000


def test_beacon_schedule():
    events, alignment = beacon_schedule(BeaconSpec(), 1_000 * MS)
    assert alignment == 1_000 * MS
    assert [e.start for e in events] == [1_000 * MS, 1_030 * MS, 1_100 * MS]


def test_symbolize():
    assert symbolize([30 * MS, 69 * MS, 50 * MS], 30 * MS, 70 * MS, 5 * MS) == [T1, T2, Erasure]
    with pytest.raises(BeaconException):
        symbolize([30 * MS], 30 * MS, 70 * MS, 20 * MS)


def test_match_exact_beacon():
    rises = [0, 30 * MS, 100 * MS]
    match = match_beacon(rises, BeaconSpec())
    assert match.first_packet_rise == 0
    assert match.last_packet_rise == 100 * MS
    assert match.correlation_score == 2
    assert match.skipped == 0


def test_match_earliest_beacon_after_noise():
    rises = [0, 12 * MS, 47 * MS, 500 * MS, 530 * MS, 600 * MS, 1_000 * MS, 1_030 * MS, 1_100 * MS]
    match = match_beacon(rises, BeaconSpec())
    assert match.first_packet_rise == 500 * MS
    assert match.rise_index == 3


def test_match_with_inserted_rise():
    rises = [0, 30 * MS, 62 * MS, 100 * MS]
    assert match_beacon(rises, BeaconSpec(), allow_insertions=False) is None
    match = match_beacon(rises, BeaconSpec())
    assert match.first_packet_rise == 0
    assert match.last_packet_rise == 100 * MS
    assert match.skipped == 1


def test_match_too_few_rises():
    assert match_beacon([0, 30 * MS], BeaconSpec()) is None


def test_intervals_outside_both_bands_never_match():
    rng = np.random.default_rng(5)
    spec = BeaconSpec(length=5)
    tol = spec.default_tolerance_ns()
    gaps = rng.integers(spec.min_interval_ns, 3 * spec.t2_ns, 300_000)
    far = (np.abs(gaps - spec.t1_ns) > tol) & (np.abs(gaps - spec.t2_ns) > tol)
    gaps = gaps[far][:100_000]
    assert gaps.size == 100_000
    assert set(symbolize(gaps.tolist(), spec.t1_ns, spec.t2_ns, tol)) == {Erasure}
    rises = np.concatenate([[0], np.cumsum(gaps)]).tolist()
    assert match_beacon(rises, spec, allow_insertions=False) is None
    for start in range(0, 100_000, 1_000):
        assert match_beacon(rises[start:start + 6], spec, allow_insertions=False) is None


def test_closed_loop_alignment_accuracy():
    spec = BeaconSpec(length=3, t1_ns=30 * MS, t2_ns=70 * MS)
    rng = np.random.default_rng(2024)
    trials = []
    for _ in range(1000):
        trial = beacon_trial(spec, DetectorParams(sample_period_ns=PERIOD), NoiseModel(), InterferenceModel(),
                             JitterModel(), start_ns=100 * MS, lead_ns=50 * MS + int(rng.integers(0, PERIOD)))
        assert trial.detection is not None
        assert 0 <= trial.alignment_error_ns < PERIOD
        trials.append(trial)
    assert matching_rate(trials) == 1.0


def test_beacon_trial_is_reproducible():
    args = (BeaconSpec(length=4), DetectorParams(), NoiseModel(sigma_db=3.0), InterferenceModel(mean_rate_hz=5.0),
            JitterModel(mean_ns=0, stddev_ns=2 * MS))
    a = beacon_trial(*args, np.random.default_rng(1), np.random.default_rng(2), np.random.default_rng(3))
    b = beacon_trial(*args, np.random.default_rng(1), np.random.default_rng(2), np.random.default_rng(3))
    assert a == b


def _rate(length, t2_ms, sigma_db, trials=300):
    spec = BeaconSpec(length=length, t1_ns=30 * MS, t2_ns=t2_ms * MS)
    jitter = JitterModel(mean_ns=0, stddev_ns=4 * MS)
    tolerance = abs(spec.t2_ns - spec.t1_ns) // 4
    correct = []
    for k in range(trials):
        rngs = [np.random.default_rng([k, i]) for i in range(3)]
        correct.append(beacon_trial(spec, DetectorParams(), NoiseModel(sigma_db=sigma_db), InterferenceModel(),
                                    jitter, *rngs, power_dbm=-78.0, tolerance_ns=tolerance).correct)
    return matching_rate(correct)


def test_matching_rate_trends():
    assert _rate(3, 70, 1.0) >= _rate(3, 50, 1.0)
    assert _rate(5, 60, 1.0) <= _rate(3, 60, 1.0)


def test_matching_rate_inputs():
    assert matching_rate([True, False, True, True]) == 0.75
    with pytest.raises(BeaconException):
        matching_rate([])
