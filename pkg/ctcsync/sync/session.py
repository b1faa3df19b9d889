"""Synchronization sessions: configuration, round-by-round simulation and the resulting log.

A session runs ``rounds`` rounds one pair interval apart, feeds every accepted pair to the calibrator and samples the
true synchronization error at a fixed cadence, from the availability of the first pair until ``holdover_ns`` after
the last round::

    error(t) = estimate(read_receiver(t)) - read_sender(t)

Each sample uses the model as the receiver knew it at that instant: a pair becomes available at the end of its
round's airtime.

Examples:
    >>> cfg = SessionConfig(rounds=2, pair_source='direct')
    >>> cfg.payload_kind(0), cfg.payload_kind(1)
    ('full', 'delta')
"""
from __future__ import annotations
from typing import List, Optional, Tuple
from dataclasses import dataclass, field, replace
import bisect
import logging
import numpy as _np
import pandas as _pd
from ..constants import NS_PER_MS, NS_PER_S, NS_PER_US, DELTA_LIMIT_US, TIMESTAMP_DIGITS, TIMESTAMP_BITS, \
    DELTA_DIGITS, DELTA_BITS, DEFAULT_PACKET_DURATION_NS, DEFAULT_ALIGNMENT_TOLERANCE_NS
from ..clocks import ClockParams, JitterModel, read_local, TrueTime
from ..channel import NoiseModel, InterferenceModel, DetectorParams
from ..beacon import BeaconSpec, matching_rate
from ..codec import TemporalParams, EnergyParams
from ..outputs import ERROR_SERIES_COLUMNS, ROUND_COLUMNS, write_frame, sibling_path
from .calibration import CalibrationModel, SyncPair, CALIBRATION_MODES, calibrate, estimate_ns
from .protocol import RngStreams, Sender, Receiver

__all__ = [
    'SessionConfigException',
    'CODECS',
    'PAIR_SOURCES',
    'SessionConfig',
    'RoundRecord',
    'SessionLog',
    'run_session',
]

_logger = logging.getLogger(__name__)

CODECS = ('temporal', 'energy')
PAIR_SOURCES = ('auto', 'radio', 'direct')

NTP_ERA_OFFSET_NS = 3_900_000_000 * NS_PER_S
"""Default sender clock reading at the epoch (an NTP-era time, in ns)."""


class SessionConfigException(Exception):
    """Exception raised for invalid session configurations."""

    def __init__(self, m):
        self.message = m

    def __str__(self):
        return self.message


@dataclass(frozen=True)
class SessionConfig:
    """Configuration of one synchronization session.

    Attributes:
        seed: root seed of the session's random streams
        session_id: index mixed into the seed, distinct sessions of one experiment get independent streams
        rounds: number of synchronization rounds
        pair_interval_ns: time between successive rounds, on the sender's clock
        start_ns: true time of the first round's deadline
        holdover_ns: observation time after the last round (defaults to one pair interval)
        beacon: beacon shared by both sides
        guard_ns: gap between the last beacon packet and the payload (defaults to 5·t1)
        codec: 'temporal' or 'energy'
        temporal: temporal modulation settings
        energy: energy modulation settings
        auto_compensation: replace the temporal compensation by the expected emission latency
        incremental: send 26-bit deltas after the first round
        full_timestamp_every: send a full timestamp every that many rounds (0: only in round 0)
        packet_duration_ns: airtime of beacon and temporal packets
        packet_power_dbm: received power of beacon and temporal packets
        detector: receiver sampling and packet detection settings
        symbol_tolerance_ns: beacon symbol tolerance (defaults to the beacon's default)
        match_threshold: beacon correlation threshold (defaults to an exact match)
        allow_insertions: let the beacon matcher skip extra rises
        max_insertions: maximum number of skipped rises
        noise: channel noise
        interference: foreign traffic
        emission_jitter: sender emission latency
        stamp_jitter_sender: sender timestamping latency
        stamp_jitter_receiver: receiver timestamping latency
        clock_sender: sender clock
        clock_receiver: receiver clock
        calibration: 'regression' or 'offset'
        window: number of pairs in the regression window
        pair_source: 'radio', 'direct' or 'auto' (radio whenever a round fits in the pair interval)
        listen_margin_ns: receiver listening margin before and after a round
        error_sample_period_ns: cadence of the error series
        stamp_resolution_ns: resolution of the sender's stamps (a multiple of 1 µs)
        alignment_tolerance_ns: distance within which a beacon match counts as correct
        plausibility: relative tolerance between sender and receiver elapsed times across rounds
        plausibility_floor_ns: absolute tolerance added to the relative one
    """
    seed: int = 0
    session_id: int = 0
    rounds: int = 5
    pair_interval_ns: int = 7 * NS_PER_S
    start_ns: TrueTime = NS_PER_S
    holdover_ns: Optional[int] = None
    beacon: BeaconSpec = field(default_factory=BeaconSpec)
    guard_ns: Optional[int] = None
    codec: str = 'temporal'
    temporal: TemporalParams = field(default_factory=TemporalParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    auto_compensation: bool = True
    incremental: bool = True
    full_timestamp_every: int = 5
    packet_duration_ns: int = DEFAULT_PACKET_DURATION_NS
    packet_power_dbm: float = -60.0
    detector: DetectorParams = field(default_factory=DetectorParams)
    symbol_tolerance_ns: Optional[int] = None
    match_threshold: Optional[int] = None
    allow_insertions: bool = True
    max_insertions: int = 2
    noise: NoiseModel = field(default_factory=lambda: NoiseModel(sigma_db=1.0))
    interference: InterferenceModel = field(default_factory=InterferenceModel)
    emission_jitter: JitterModel = field(default_factory=lambda: JitterModel(400_000, 100_000))
    stamp_jitter_sender: JitterModel = field(default_factory=lambda: JitterModel(0, 200_000))
    stamp_jitter_receiver: JitterModel = field(default_factory=lambda: JitterModel(0, 200_000))
    clock_sender: ClockParams = field(default_factory=lambda: ClockParams(offset_ns=NTP_ERA_OFFSET_NS))
    clock_receiver: ClockParams = field(default_factory=lambda: ClockParams(offset_ns=12_345_678_901,
                                                                            skew=1.00005))
    calibration: str = 'regression'
    window: int = 5
    pair_source: str = 'auto'
    listen_margin_ns: int = 50 * NS_PER_MS
    error_sample_period_ns: int = 100 * NS_PER_MS
    stamp_resolution_ns: int = NS_PER_US
    alignment_tolerance_ns: int = DEFAULT_ALIGNMENT_TOLERANCE_NS
    plausibility: float = 0.05
    plausibility_floor_ns: int = 2 * NS_PER_MS

    def __post_init__(self):
        if self.seed < 0 or self.session_id < 0:
            raise SessionConfigException(f"seed and session_id must be non-negative.")
        if self.rounds < 1:
            raise SessionConfigException(f"a session needs at least one round (got {self.rounds}).")
        if self.pair_interval_ns <= 0:
            raise SessionConfigException(f"pair interval must be strictly positive (got {self.pair_interval_ns}).")
        if self.codec not in CODECS:
            raise SessionConfigException(f"unknown codec '{self.codec}' (expected one of {CODECS}).")
        if self.calibration not in CALIBRATION_MODES:
            raise SessionConfigException(f"unknown calibration mode '{self.calibration}' (expected one of "
                                         f"{CALIBRATION_MODES}).")
        if self.pair_source not in PAIR_SOURCES:
            raise SessionConfigException(f"unknown pair source '{self.pair_source}' (expected one of "
                                         f"{PAIR_SOURCES}).")
        if self.window < 1:
            raise SessionConfigException(f"the calibration window needs at least one pair (got {self.window}).")
        if self.full_timestamp_every < 0:
            raise SessionConfigException(f"full_timestamp_every must be non-negative.")
        if self.stamp_resolution_ns <= 0 or self.stamp_resolution_ns % NS_PER_US:
            raise SessionConfigException(f"stamp resolution must be a positive multiple of 1 us "
                                         f"(got {self.stamp_resolution_ns} ns).")
        if self.start_ns < self.listen_margin_ns:
            raise SessionConfigException(f"the first round must start after the listening margin "
                                         f"({self.start_ns} < {self.listen_margin_ns} ns).")
        if self.error_sample_period_ns <= 0:
            raise SessionConfigException(f"error sample period must be strictly positive.")
        if self.pair_source == 'radio' and self.listen_ns('full') > self.pair_interval_ns:
            raise SessionConfigException(f"a {self.pair_interval_ns} ns pair interval cannot contain a round "
                                         f"({self.listen_ns('full')} ns of listening); use pair_source 'direct'.")
        if self.incremental and self.pair_interval_ns + self._slack_ns(1) >= DELTA_LIMIT_US * NS_PER_US:
            raise SessionConfigException(f"a {self.pair_interval_ns} ns pair interval does not fit in a 26-bit "
                                         f"microsecond delta; disable incremental timestamps.")

    @property
    def guard(self) -> int:
        return self.guard_ns if self.guard_ns is not None else 5 * self.beacon.t1_ns

    @property
    def holdover(self) -> int:
        return self.holdover_ns if self.holdover_ns is not None else self.pair_interval_ns

    @property
    def temporal_params(self) -> TemporalParams:
        """Temporal settings with the compensation actually used by the receiver."""
        if not self.auto_compensation:
            return self.temporal
        return replace(self.temporal, compensation_ns=int(round(self.emission_jitter.expected_ns())))

    @property
    def resolved_pair_source(self) -> str:
        if self.pair_source != 'auto':
            return self.pair_source
        return 'radio' if self.listen_ns('full') <= self.pair_interval_ns else 'direct'

    def payload_kind(self, round_index: int) -> str:
        """'full' or 'delta', as agreed by both sides for a round."""
        if not self.incremental or round_index == 0:
            return 'full'
        if self.full_timestamp_every and round_index % self.full_timestamp_every == 0:
            return 'full'
        return 'delta'

    def payload_length(self, kind: str) -> int:
        """Number of payload symbols: digits for temporal modulation, bits for energy modulation."""
        if self.codec == 'temporal':
            return TIMESTAMP_DIGITS if kind == 'full' else DELTA_DIGITS
        return TIMESTAMP_BITS if kind == 'full' else DELTA_BITS

    def _slack_ns(self, n_packets: int) -> int:
        j = self.emission_jitter
        return int(n_packets * (j.expected_ns() + 3 * j.stddev_ns))

    def airtime_ns(self, kind: str) -> int:
        """Upper estimate of the time from the nominal round start to the end of the payload."""
        n = self.payload_length(kind)
        if self.codec == 'temporal':
            payload = n * self.temporal.window_ns
            slack = self._slack_ns(self.beacon.length + 2 * n + 1)
            tail = self.packet_duration_ns
        else:
            payload = n // self.energy.bits_per_slot * self.energy.slot_ns
            slack = self._slack_ns(self.beacon.length + 1)
            tail = 0
        return self.beacon.span_ns + self.guard + payload + tail + slack

    def listen_ns(self, kind: str) -> int:
        """Receiver listening time for one round."""
        return self.airtime_ns(kind) + 2 * self.listen_margin_ns

    @property
    def duty_cycle(self) -> float:
        """Long-run fraction of time the receiver samples the channel."""
        if not self.incremental:
            listen = self.listen_ns('full')
        elif self.full_timestamp_every:
            k = self.full_timestamp_every
            listen = (self.listen_ns('full') + (k - 1) * self.listen_ns('delta')) / k
        else:
            listen = self.listen_ns('delta')
        return listen / self.pair_interval_ns


@dataclass(frozen=True)
class RoundRecord:
    """One round of a session, as seen from both sides."""
    round_index: int
    payload_kind: str
    pair_source: str
    sender_fallback: bool
    emission_true_ns: TrueTime
    beacon_detected: bool
    beacon_correct: bool
    alignment_error_ns: Optional[int]
    status: str
    pair_accepted: bool
    t_z: Optional[int]
    t_w: Optional[int]
    available_ns: TrueTime


@dataclass
class SessionLog:
    """Full record of one session."""
    config: SessionConfig
    rounds: List[RoundRecord]
    pairs: List[SyncPair]
    model: CalibrationModel
    errors: _pd.DataFrame
    holdover_start_ns: TrueTime

    @property
    def accepted_pairs(self) -> int:
        return len(self.pairs)

    @property
    def skew_estimate(self) -> Optional[float]:
        """Final regression slope, None when no regression was fitted."""
        return self.model.alpha if self.model.fitted else None

    @property
    def duty_cycle(self) -> float:
        return self.config.duty_cycle

    @property
    def matching_rate(self) -> float:
        return matching_rate([self])

    def _max_abs(self, phase: Optional[str] = None) -> Optional[int]:
        errors = self.errors if phase is None else self.errors[self.errors['phase'] == phase]
        if errors.empty:
            return None
        return int(errors['error_ns'].abs().max())

    @property
    def max_abs_error_ns(self) -> Optional[int]:
        return self._max_abs()

    @property
    def holdover_max_abs_error_ns(self) -> Optional[int]:
        """Largest error after the last round, without further synchronization."""
        return self._max_abs('holdover')

    def rounds_frame(self) -> _pd.DataFrame:
        rows = [dict(session_id=self.config.session_id, **r.__dict__) for r in self.rounds]
        return _pd.DataFrame(rows, columns=ROUND_COLUMNS)

    def to_csv(self, path: str):
        """Write the error series to ``path`` and the round log next to it (``<stem>_rounds.csv``)."""
        write_frame(self.errors, path)
        write_frame(self.rounds_frame(), sibling_path(path, 'rounds'))


def _error_series(cfg: SessionConfig,
                  timeline: List[Tuple[TrueTime, CalibrationModel, TrueTime]],
                  holdover_start: TrueTime) -> _pd.DataFrame:
    if not timeline:
        return _pd.DataFrame(columns=ERROR_SERIES_COLUMNS)
    available = [t for t, _, _ in timeline]
    first_pair = timeline[0][2]
    times = _np.arange(available[0], holdover_start + cfg.holdover + 1, cfg.error_sample_period_ns, dtype=_np.int64)
    rows = []
    for t in times.tolist():
        _, model, last_pair = timeline[bisect.bisect_right(available, t) - 1]
        error = estimate_ns(model, read_local(cfg.clock_receiver, t)) - read_local(cfg.clock_sender, t)
        rows.append((cfg.session_id, t, t - first_pair, t - last_pair,
                     'holdover' if t >= holdover_start else 'sync', error))
    return _pd.DataFrame(rows, columns=ERROR_SERIES_COLUMNS)


def run_session(cfg: SessionConfig) -> SessionLog:
    """Simulate a session; identical configurations give identical logs."""
    streams = RngStreams.derive(cfg.seed, cfg.session_id)
    source = cfg.resolved_pair_source
    sender = Sender(cfg, cfg.clock_sender, streams)
    receiver = Receiver(cfg, cfg.clock_receiver, streams)
    model = CalibrationModel(size=cfg.window, mode=cfg.calibration)
    _logger.info(f"Session {cfg.session_id}: {cfg.rounds} rounds every {cfg.pair_interval_ns} ns, {cfg.codec} "
                 f"codec, {source} pairs, {cfg.calibration} calibration.")

    records, pairs, timeline = [], [], []
    available = cfg.start_ns
    for k in range(cfg.rounds):
        sent = sender.send(k)
        reception = receiver.receive(sent, source)
        if source == 'direct':
            available = sent.emission_ns
        else:
            available = max(sent.end_ns, receiver.listen_span(sent)[1])
        detection = reception.detection
        error = detection.first_packet_rise - sent.emission_ns if detection is not None else None
        pair = reception.pair
        if reception.confirms is not None:
            held_round, held_pair = reception.confirms
            pairs.append(held_pair)
            model = calibrate(model, held_pair)
            timeline.append((available, model, records[held_round].emission_true_ns))
            records[held_round] = replace(records[held_round], status='ok', pair_accepted=True)
        if pair is not None:
            pairs.append(pair)
            model = calibrate(model, pair)
            timeline.append((available, model, sent.emission_ns))
        records.append(RoundRecord(round_index=k,
                                   payload_kind=cfg.payload_kind(k),
                                   pair_source=source,
                                   sender_fallback=sent.fallback,
                                   emission_true_ns=sent.emission_ns,
                                   beacon_detected=detection is not None,
                                   beacon_correct=error is not None and abs(error) <= cfg.alignment_tolerance_ns,
                                   alignment_error_ns=error,
                                   status=reception.status,
                                   pair_accepted=pair is not None,
                                   t_z=reception.t_z,
                                   t_w=reception.t_w.value if reception.t_w is not None else None,
                                   available_ns=available))

    if not pairs:
        _logger.warning(f"Session {cfg.session_id}: no synchronization pair was accepted.")
    errors = _error_series(cfg, timeline, available)
    return SessionLog(config=cfg, rounds=records, pairs=pairs, model=model, errors=errors,
                      holdover_start_ns=available)
