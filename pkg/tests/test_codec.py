import numpy as np
import pytest
from ctcsync.channel import NoiseModel, InterferenceModel, RssiTrace, render_trace, detect_packets, intervals, \
    dbm_sum
from ctcsync.codec import Timestamp64, TemporalParams, EnergyParams, DecodeResult, SymbolStatus, CodecException, \
    DeltaOverflowException, timestamp_to_digits, digits_to_timestamp, timestamp_to_bits, bits_to_timestamp, \
    bits_to_symbols, symbols_to_bits, delta_encode, delta_decode, delta_to_digits, delta_to_bits, \
    temporal_encode, temporal_decode, temporal_decode_rises, energy_encode, energy_decode, ber

MS = 1_000_000
US = 1_000
PERIOD = 166_667


def test_digit_intervals():
    p = TemporalParams(granularity_ms=1, compensation_ns=0)
    assert p.intervals_of(5) == (15 * MS, 15 * MS)
    assert p.intervals_of(3) == (13 * MS, 17 * MS)
    assert p.intervals_of(0) == (10 * MS, 20 * MS)
    assert p.intervals_of(9) == (19 * MS, 11 * MS)
    assert all(sum(p.intervals_of(a)) == 30 * MS for a in range(10))
    with pytest.raises(CodecException):
        p.intervals_of(10)


def test_uncompensated_latency_shifts_the_digit():
    assert TemporalParams(granularity_ms=1, compensation_ns=0).decode_digit(int(13.7 * MS)) == 4
    assert TemporalParams(granularity_ms=1, compensation_ns=400_000).decode_digit(int(13.7 * MS)) == 3


def test_temporal_decode_of_a_jittered_pair():
    decoded = temporal_decode([int(13.7 * MS), int(16.3 * MS)], TemporalParams(granularity_ms=1, compensation_ns=0))
    assert decoded.symbols == (4,)
    assert decoded.ok
    assert decoded.value == 4


def test_decode_digit_clamps():
    p = TemporalParams(granularity_ms=1, compensation_ns=0)
    assert p.decode_digit(5 * MS) == 0
    assert p.decode_digit(25 * MS) == 9


def test_temporal_params_validation():
    with pytest.raises(CodecException):
        TemporalParams(granularity_ms=0)
    with pytest.raises(CodecException):
        TemporalParams(granularity_ms=1, min_interval_ns=15 * MS)
    with pytest.raises(CodecException):
        TemporalParams(base=16)


def test_temporal_schedule_shares_window_boundaries():
    p = TemporalParams(granularity_ms=2, compensation_ns=0)
    events = temporal_encode([5, 3], p, 1_000 * MS)
    assert [e.start for e in events] == [1_000 * MS, 1_030 * MS, 1_060 * MS, 1_086 * MS, 1_120 * MS]


@pytest.mark.parametrize('g', [1, 2, 3])
def test_temporal_round_trip_on_schedules(g):
    p = TemporalParams(granularity_ms=g, compensation_ns=0)
    digits = np.random.default_rng(g).integers(0, 10, 10_000).tolist()
    rises = [e.start for e in temporal_encode(digits, p, 0)]
    decoded = temporal_decode(intervals(rises), p)
    assert decoded.ok
    assert ber(digits, decoded) == 0.0
    assert list(decoded.symbols) == digits


@pytest.mark.parametrize('g', [1, 2, 3])
def test_temporal_round_trip_through_the_channel(g):
    p = TemporalParams(granularity_ms=g, compensation_ns=0)
    digits = np.random.default_rng(10 + g).integers(0, 10, 200).tolist()
    events = temporal_encode(digits, p, 50 * MS)
    trace = render_trace(events, NoiseModel(), InterferenceModel(), PERIOD, (0, events[-1].end + 50 * MS))
    decoded = temporal_decode_rises(detect_packets(trace), len(digits), p)
    assert ber(digits, decoded) == 0.0


def test_temporal_erasures():
    p = TemporalParams(granularity_ms=1, compensation_ns=0)
    decoded = temporal_decode([15 * MS, 15 * MS, 13 * MS, 19 * MS, 12 * MS], p)
    assert decoded.symbols == (5, None, None)
    assert decoded.status == (SymbolStatus.OK, SymbolStatus.ERASURE, SymbolStatus.ERASURE)
    assert decoded.erasures == 2
    assert decoded.value is None
    assert not decoded.ok
    assert ber([5, 2, 1], decoded) == pytest.approx(2 / 3)


def test_temporal_decode_rises_drops_fragments_and_pads():
    p = TemporalParams(granularity_ms=1, compensation_ns=0)
    rises = [0, 200_000, 13 * MS, 30 * MS]
    decoded = temporal_decode_rises(rises, 2, p)
    assert decoded.symbols == (3, None)
    assert decoded.erasures == 1


def test_bit_layout_of_energy_slots():
    p = EnergyParams(slot_ns=10 * MS, levels=2)
    events = energy_encode([1, 0, 1, 1], p, 0)
    assert [e.start // p.slot_ns + 1 for e in events] == [1, 3, 4]
    assert all(e.duration_ns == p.slot_ns for e in events)


def test_energy_four_levels_use_increasing_power():
    p = EnergyParams(slot_ns=10 * MS, levels=4)
    assert p.bits_per_slot == 2
    events = energy_encode([0, 1, 1, 0, 1, 1, 0, 0], p, 0)
    assert [e.power_dbm for e in events] == [-86.0, -78.0, -70.0]


def test_energy_params_validation():
    with pytest.raises(CodecException):
        EnergyParams(levels=3)
    with pytest.raises(CodecException):
        EnergyParams(levels=4, power_dbm=(-70.0, -78.0, -86.0))
    with pytest.raises(CodecException):
        EnergyParams(levels=4, power_dbm=(-70.0,))
    with pytest.raises(CodecException):
        EnergyParams(slot_ns=1 * MS, min_slot_ns=5 * MS)
    assert EnergyParams(levels=4, power_dbm={'3': -84, '1': -90, '2': -87}).packet_power_dbm == (-90.0, -87.0, -84.0)


@pytest.mark.parametrize('levels', [2, 4])
def test_energy_round_trip(levels):
    p = EnergyParams(slot_ns=5 * MS, levels=levels)
    bits = np.random.default_rng(levels).integers(0, 2, 10_000).tolist()
    start = 10 * MS
    events = energy_encode(bits, p, start)
    n_slots = len(bits) // p.bits_per_slot
    trace = render_trace(events, NoiseModel(), InterferenceModel(), PERIOD, (0, start + n_slots * p.slot_ns + 10 * MS))
    decoded = energy_decode(trace, start, n_slots, p)
    assert ber(bits, decoded) == 0.0
    assert decoded.value is not None


def test_energy_decode_needs_coverage():
    p = EnergyParams()
    trace = render_trace([], NoiseModel(), InterferenceModel(), PERIOD, (0, 50 * MS))
    with pytest.raises(CodecException):
        energy_decode(trace, 10 * MS, 26, p)


def _slot_trace(slot_means, p, start):
    n = (start + len(slot_means) * p.slot_ns) // PERIOD + 2
    times = np.arange(n) * PERIOD
    slots = np.clip((times - start) // p.slot_ns, 0, len(slot_means) - 1)
    samples = np.where(times < start, p.floor_dbm, np.asarray(slot_means)[slots])
    return RssiTrace(start=0, sample_period_ns=PERIOD, samples=samples)


def test_energy_slots_near_a_decision_boundary_are_erased():
    p = EnergyParams(slot_ns=10 * MS, levels=2, margin_db=1.0)
    high = dbm_sum(p.floor_dbm, -70.0)
    boundary = (p.floor_dbm + high) / 2
    trace = _slot_trace([p.floor_dbm, boundary + 0.5, high, boundary - 2.0], p, 10 * MS)
    decoded = energy_decode(trace, 10 * MS, 4, p)
    assert decoded.symbols == (0, None, 1, 0)
    assert decoded.status[1] is SymbolStatus.ERASURE
    assert decoded.value is None
    assert not decoded.ok
    assert ber([0, 1, 1, 0], decoded) == pytest.approx(0.25)


def test_energy_erasure_covers_every_bit_of_the_slot():
    p = EnergyParams(slot_ns=10 * MS, levels=4, margin_db=0.5)
    levels = p.observed_levels()
    trace = _slot_trace([levels[3], (levels[1] + levels[2]) / 2], p, 10 * MS)
    decoded = energy_decode(trace, 10 * MS, 2, p)
    assert decoded.symbols == (1, 1, None, None)
    assert decoded.erasures == 2


def test_energy_without_margin_always_decides():
    p = EnergyParams(slot_ns=10 * MS, levels=2, margin_db=0.0)
    high = dbm_sum(p.floor_dbm, -70.0)
    trace = _slot_trace([(p.floor_dbm + high) / 2 + 0.1], p, 10 * MS)
    assert energy_decode(trace, 10 * MS, 1, p).value == 1
    with pytest.raises(CodecException):
        EnergyParams(margin_db=-1.0)


def test_bit_symbol_grouping():
    assert bits_to_symbols([1, 0, 1, 1, 0, 0], 2) == [2, 3, 0]
    assert symbols_to_bits([2, 3, 0], 2) == [1, 0, 1, 1, 0, 0]
    with pytest.raises(CodecException):
        bits_to_symbols([1, 0, 1], 2)


def test_timestamp_fields():
    t = Timestamp64((7 << 32) | (1 << 31))
    assert t.seconds == 7
    assert t.fraction == 1 << 31
    assert t.to_ns() == 7_500_000_000
    with pytest.raises(CodecException):
        Timestamp64(2 ** 64)
    with pytest.raises(CodecException):
        Timestamp64.from_ns(-1)


def test_timestamp_serializations_round_trip():
    rng = np.random.default_rng(64)
    for _ in range(10_000):
        t = Timestamp64(int(rng.integers(0, 2 ** 62)) * 4 + int(rng.integers(0, 4)))
        digits = timestamp_to_digits(t)
        assert len(digits) == 20
        assert digits_to_timestamp(digits) == t
        bits = timestamp_to_bits(t)
        assert len(bits) == 64
        assert bits_to_timestamp(bits) == t
        assert Timestamp64.from_bits(bits) == t
        assert Timestamp64.from_digits(digits) == t


def test_digits_beyond_64_bits_are_rejected():
    with pytest.raises(CodecException):
        digits_to_timestamp([9] * 20)
    with pytest.raises(CodecException):
        digits_to_timestamp([1] * 19)


def test_nanoseconds_round_trip_exactly():
    rng = np.random.default_rng(9)
    for ns in rng.integers(0, 4 * 10 ** 18, 10_000).tolist() + [0, 999_999_999, 10 ** 9]:
        assert Timestamp64.from_ns(ns).to_ns() == ns


def test_delta_round_trip():
    rng = np.random.default_rng(26)
    for _ in range(10_000):
        prev = Timestamp64.from_ns(int(rng.integers(0, 4 * 10 ** 15)) * US)
        delta = int(rng.integers(0, 2 ** 26))
        cur = Timestamp64.from_ns(prev.to_ns() + delta * US)
        assert delta_encode(prev, cur) == delta
        assert delta_decode(prev, delta) == cur
        assert len(delta_to_digits(delta)) == 8
        assert len(delta_to_bits(delta)) == 26


def test_delta_overflow_boundary():
    prev = Timestamp64.from_ns(10 ** 12)
    assert delta_encode(prev, Timestamp64.from_ns(10 ** 12 + (2 ** 26 - 1) * US)) == 2 ** 26 - 1
    with pytest.raises(DeltaOverflowException):
        delta_encode(prev, Timestamp64.from_ns(10 ** 12 + 2 ** 26 * US))
    with pytest.raises(CodecException):
        delta_encode(Timestamp64.from_ns(10 ** 12), Timestamp64.from_ns(10 ** 11))
    with pytest.raises(CodecException):
        delta_decode(prev, 2 ** 26)


def test_delta_just_below_the_limit_encodes():
    prev = Timestamp64.from_ns(10 ** 12)
    assert delta_encode(prev, Timestamp64.from_ns(10 ** 12 + 2 ** 26 * US - 300)) == 2 ** 26 - 1
    assert delta_encode(prev, Timestamp64.from_ns(10 ** 12 + 2 ** 26 * US - 1)) == 2 ** 26 - 1
    with pytest.raises(DeltaOverflowException):
        delta_encode(prev, Timestamp64.from_ns(10 ** 12 + 2 ** 26 * US))


def test_decode_result_padding():
    result = DecodeResult((1, 2), (SymbolStatus.OK, SymbolStatus.OK), 12)
    assert result.padded(2).value == 12
    padded = result.padded(3)
    assert padded.symbols == (1, 2, None)
    assert padded.value is None
    assert padded.erasures == 1


def test_ber_validation():
    with pytest.raises(CodecException):
        ber([1, 2], [1])
    with pytest.raises(CodecException):
        ber([], [])
