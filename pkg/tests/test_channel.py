import numpy as np
import pytest
from ctcsync.clocks import JitterModel
from ctcsync.channel import PacketEvent, NoiseModel, InterferenceModel, RssiTrace, ChannelException, dbm_sum, \
    emit, render_trace, detect_packets, debounce, intervals

PERIOD = 166_667
QUIET = NoiseModel()
NO_INTERFERENCE = InterferenceModel()


def test_dbm_sum():
    assert dbm_sum(-95.0) == pytest.approx(-95.0)
    assert dbm_sum(-60.0, -60.0) == pytest.approx(-56.9897, abs=1e-4)
    assert dbm_sum(-95.0, -60.0) == pytest.approx(-60.0, abs=0.01)


def test_render_sample_count_and_grid():
    trace = render_trace([], QUIET, NO_INTERFERENCE, PERIOD, (1_000, 1_000 + 10 * PERIOD + 1))
    assert len(trace) == 11
    assert trace.time_of(3) == 1_000 + 3 * PERIOD
    assert trace.end == 1_000 + 11 * PERIOD
    assert np.all(trace.samples == pytest.approx(-95.0))


def test_render_empty_span():
    with pytest.raises(ChannelException):
        render_trace([], QUIET, NO_INTERFERENCE, PERIOD, (10, 10))


def test_packet_active_on_half_open_interval():
    period = 1_000
    trace = render_trace([PacketEvent(5_000, 3_000, -60.0)], QUIET, NO_INTERFERENCE, period, (0, 10_000))
    high = np.flatnonzero(trace.samples > -70.0)
    assert list(high) == [5, 6, 7]


def test_overlapping_equal_packets_add_3_db():
    quiet = NoiseModel(floor_dbm=-200.0)
    single = render_trace([PacketEvent(0, 2_000_000, -60.0)], quiet, NO_INTERFERENCE, PERIOD, (0, 2_000_000))
    double = render_trace([PacketEvent(0, 2_000_000, -60.0), PacketEvent(500_000, 1_500_000, -60.0)], quiet,
                          NO_INTERFERENCE, PERIOD, (0, 2_000_000))
    assert double.samples[3:] - single.samples[3:] == pytest.approx(3.0103, abs=1e-4)
    assert double.samples[:3] == pytest.approx(single.samples[:3])


def test_render_is_order_invariant():
    events = [PacketEvent(1_000_000, 2_000_000, -60.0),
              PacketEvent(2_000_000, 2_000_000, -63.0),
              PacketEvent(2_500_000, 500_000, -71.5)]
    noise = NoiseModel(sigma_db=2.0, seed=4)
    a = render_trace(events, noise, NO_INTERFERENCE, PERIOD, (0, 6_000_000))
    b = render_trace(list(reversed(events)), noise, NO_INTERFERENCE, PERIOD, (0, 6_000_000))
    assert a.samples.tobytes() == b.samples.tobytes()


def test_interference_events_are_seeded():
    model = InterferenceModel(mean_rate_hz=50.0, seed=9)
    a = model.events((0, 10 ** 9))
    b = model.events((0, 10 ** 9))
    assert a == b
    assert 20 < len(a) < 90
    assert all(0 <= e.start < 10 ** 9 for e in a)
    assert all(500_000 <= e.duration_ns <= 2_500_000 for e in a)
    assert all(-70.0 <= e.power_dbm <= -45.0 for e in a)


def test_interference_validation():
    with pytest.raises(ChannelException):
        InterferenceModel(mean_rate_hz=-1.0)
    with pytest.raises(ChannelException):
        NoiseModel(sigma_db=-0.5)


def test_detect_noise_free_packets():
    starts = [10_000_000, 40_000_000, 110_000_000]
    trace = render_trace([PacketEvent(s, 2_000_000, -60.0) for s in starts], QUIET, NO_INTERFERENCE, PERIOD,
                         (0, 150_000_000))
    detections = detect_packets(trace)
    assert len(detections) == 3
    for d, s in zip(detections, starts):
        assert 0 <= d.rise_true_time - s < PERIOD
        assert d.mean_power_dbm == pytest.approx(-60.0, abs=0.01)
        assert d.length_samples in (11, 12, 13)


def test_detect_interpolated_rise_is_centered():
    starts = [10_000_000 + k * 31_234_567 for k in range(50)]
    trace = render_trace([PacketEvent(s, 2_000_000, -60.0) for s in starts], QUIET, NO_INTERFERENCE, PERIOD,
                         (0, starts[-1] + 10_000_000))
    errors = [d.rise_true_time - s for d, s in zip(detect_packets(trace, interpolate=True), starts)]
    assert all(abs(e) <= PERIOD // 2 + 1 for e in errors)
    assert abs(np.mean(errors)) < PERIOD / 4


def test_short_spikes_are_rejected():
    samples = np.full(100, -95.0)
    samples[10:12] = -50.0
    samples[50:54] = -50.0
    detections = detect_packets(RssiTrace(0, PERIOD, samples), min_high_samples=3)
    assert [d.rise_sample_index for d in detections] == [50]


def test_detect_empty_trace():
    assert detect_packets(RssiTrace(0, PERIOD, np.empty(0))) == []


def test_detect_validation():
    trace = RssiTrace(0, PERIOD, np.full(10, -95.0))
    with pytest.raises(ChannelException):
        detect_packets(trace, margin_db=0.0)
    with pytest.raises(ChannelException):
        detect_packets(trace, min_high_samples=0)
    for alpha in (0.0, -0.1, 1.5):
        with pytest.raises(ChannelException):
            detect_packets(trace, ema_alpha=alpha)
    assert detect_packets(trace, ema_alpha=1.0) == []


def test_intervals_accept_detections_and_ints():
    trace = render_trace([PacketEvent(s, 5_000_000, -60.0) for s in (5_000_000, 35_000_000)], QUIET,
                         NO_INTERFERENCE, 1_000_000, (0, 50_000_000))
    assert intervals(detect_packets(trace)) == [30_000_000]
    assert intervals([1, 4, 10]) == [3, 6]


def test_debounce():
    assert debounce([0, 1_000, 30_000_000, 30_500_000, 45_000_000], 5_000_000) == [0, 30_000_000, 45_000_000]


def test_emit_chained_accumulates_delays():
    schedule = [PacketEvent(k * 30_000_000, 2_000_000, -60.0) for k in range(4)]
    sent = emit(schedule, JitterModel(mean_ns=1_000), chained=True)
    assert [e.start for e in sent] == [1_000, 30_002_000, 60_003_000, 90_004_000]
    assert intervals([e.start for e in sent]) == [30_001_000] * 3


def test_mean_emission_latency_lengthens_intervals():
    schedule = [PacketEvent(k * 30_000_000, 2_000_000, -60.0) for k in range(2_001)]
    assert set(intervals([e.start for e in emit(schedule, JitterModel(400_000, 0))])) == {30_400_000}
    measured = np.array(intervals([e.start for e in emit(schedule, JitterModel(400_000, 100_000, seed=3))]))
    assert measured.std() > 0
    assert abs(measured.mean() - 30_400_000) <= 3 * 100_000 / np.sqrt(measured.size)


def test_emit_absolute_deadlines():
    schedule = [PacketEvent(k * 10_000_000, 10_000_000, -70.0) for k in range(3)]
    sent = emit(schedule, JitterModel(mean_ns=1_000), chained=False)
    assert [e.start for e in sent] == [1_000, 10_001_000, 20_001_000]


def test_emit_identity_is_a_copy():
    schedule = [PacketEvent(0, 1, -60.0)]
    assert emit(schedule, JitterModel()) == schedule


def test_trace_csv_round_trip(tmp_path):
    trace = render_trace([PacketEvent(2_000_000, 2_000_000, -60.0)], NoiseModel(sigma_db=1.0, seed=1),
                         NO_INTERFERENCE, PERIOD, (123, 10_000_123))
    path = str(tmp_path / 'trace.csv')
    trace.to_csv(path)
    loaded = RssiTrace.from_csv(path)
    assert loaded.start == 123
    assert loaded.sample_period_ns == PERIOD
    assert loaded.samples == pytest.approx(trace.samples, rel=1e-8)


def test_trace_csv_missing_header(tmp_path):
    path = tmp_path / 'bad.csv'
    path.write_text('sample_index,dbm\n0,-95\n')
    with pytest.raises(ChannelException):
        RssiTrace.from_csv(str(path))
