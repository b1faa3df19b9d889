"""Sender and receiver sides of one synchronization round.

A round starts at a sender-local deadline. The sender emits the beacon, stamps the actual emission of its first
packet on its own clock, waits a guard gap after the last beacon packet and transmits the stamp (in full, or as a
delta from its previous stamp). The receiver listens around the round, detects packets, matches the beacon, stamps
the matched first rise on its own clock and decodes the payload at the agreed offset after the beacon. A clean
decode yields a synchronization pair.

When the pair interval is too short to carry a beacon and a payload over the air, pairs can be synthesized directly
from ground truth with the same error terms (``pair_source='direct'``): sampling quantization of the rise and
timestamping latency on both sides.
"""
from __future__ import annotations
from typing import TYPE_CHECKING, Dict, List, Optional, Tuple
from dataclasses import dataclass, field, replace
import logging
import numpy as _np
from ..clocks import ClockParams, read_local, true_of_local, stamp_event, TrueTime
from ..channel import PacketEvent, RssiTrace, emit, render_trace, detect_packets
from ..beacon import BeaconDetection, beacon_schedule, match_beacon
from ..codec import Timestamp64, DecodeResult, CodecException, DeltaOverflowException, delta_encode, delta_decode, \
    delta_to_digits, delta_to_bits, temporal_encode, temporal_decode_rises, energy_encode, energy_decode
from .calibration import SyncPair
if TYPE_CHECKING:
    from .session import SessionConfig

__all__ = [
    'STREAMS',
    'RngStreams',
    'SenderRound',
    'Reception',
    'Sender',
    'Receiver',
    'sender_round',
    'receive',
    'receiver_round',
    'direct_pair',
]

_logger = logging.getLogger(__name__)

STREAMS = ('emission', 'stamp_sender', 'stamp_receiver', 'noise', 'interference', 'quantization', 'payload')
"""Independent random streams of one session, in derivation order."""


@dataclass
class RngStreams:
    """Random generators of one session, one per stochastic component."""
    emission: _np.random.Generator
    stamp_sender: _np.random.Generator
    stamp_receiver: _np.random.Generator
    noise: _np.random.Generator
    interference: _np.random.Generator
    quantization: _np.random.Generator
    payload: _np.random.Generator

    @classmethod
    def derive(cls, seed: int, session_id: int = 0) -> RngStreams:
        """Streams derived from ``(seed, session_id)``; distinct sessions get independent streams."""
        return cls(*[
            _np.random.default_rng(_np.random.SeedSequence(seed, spawn_key=(session_id, i)))
            for i in range(len(STREAMS))
        ])


@dataclass
class SenderRound:
    """Everything the sender put on the air in one round."""
    round_index: int
    payload_kind: str
    fallback: bool
    nominal_start: TrueTime
    beacon_events: List[PacketEvent]
    payload_events: List[PacketEvent]
    payload_start: TrueTime
    payload_symbols: List[int]
    t_w: Timestamp64

    @property
    def events(self) -> List[PacketEvent]:
        return self.beacon_events + self.payload_events

    @property
    def emission_ns(self) -> TrueTime:
        """True emission time of the beacon's first packet."""
        return self.beacon_events[0].start

    @property
    def end_ns(self) -> TrueTime:
        return max(e.end for e in self.events)


def _quantize(local: int, resolution_ns: int) -> int:
    return (local + resolution_ns // 2) // resolution_ns * resolution_ns


def sender_round(cfg: SessionConfig,
                 round_index: int,
                 clock_w: ClockParams,
                 streams: Optional[RngStreams] = None,
                 previous: Optional[Timestamp64] = None) -> SenderRound:
    """Emit the beacon and the timestamp payload of one round.

    Args:
        cfg: session configuration
        round_index: index of the round (round 0 always carries a full timestamp)
        clock_w: the sender's clock
        streams: random streams of the session (derived from the configuration's seed when None)
        previous: the sender's stamp of the previous round, needed for delta payloads

    Returns:
        the packets on the air and the stamped ``t_w``.
    """
    streams = streams or RngStreams.derive(cfg.seed, cfg.session_id)
    deadline = read_local(clock_w, cfg.start_ns) + round_index * cfg.pair_interval_ns
    nominal_start = true_of_local(clock_w, deadline)

    nominal, _ = beacon_schedule(cfg.beacon, nominal_start, cfg.packet_duration_ns, cfg.packet_power_dbm)
    beacon = emit(nominal, cfg.emission_jitter, streams.emission, chained=True)
    stamp = stamp_event(clock_w, cfg.stamp_jitter_sender, beacon[0].start, streams.stamp_sender)
    t_w = Timestamp64.from_ns(_quantize(stamp, cfg.stamp_resolution_ns))

    kind = cfg.payload_kind(round_index)
    fallback = False
    delta = None
    if kind == 'delta':
        try:
            if previous is None:
                raise CodecException("no previous stamp to encode a delta from.")
            delta = delta_encode(previous, t_w)
        except (DeltaOverflowException, CodecException) as e:
            _logger.warning(f"Round {round_index}: {e.message} Falling back to a full timestamp.")
            kind, fallback = 'full', True

    payload_start = beacon[-1].start + cfg.guard
    if cfg.codec == 'temporal':
        symbols = t_w.to_digits() if kind == 'full' else delta_to_digits(delta)
        payload = temporal_encode(symbols, cfg.temporal_params, payload_start, cfg.packet_duration_ns,
                                  cfg.packet_power_dbm)
        payload = emit(payload, cfg.emission_jitter, streams.emission, chained=True)
    else:
        symbols = t_w.to_bits() if kind == 'full' else delta_to_bits(delta)
        payload = energy_encode(symbols, cfg.energy, payload_start)
        payload = emit(payload, cfg.emission_jitter, streams.emission, chained=False)

    _logger.debug(f"Round {round_index}: beacon at {beacon[0].start} ns, {kind} payload of {len(symbols)} symbols.")
    return SenderRound(round_index=round_index,
                       payload_kind=kind,
                       fallback=fallback,
                       nominal_start=nominal_start,
                       beacon_events=beacon,
                       payload_events=payload,
                       payload_start=payload_start,
                       payload_symbols=symbols,
                       t_w=t_w)


@dataclass
class Reception:
    """What the receiver made of one round.

    ``confirms`` holds the (round index, pair) of an earlier unconfirmed pair that this round vouches for.
    """
    status: str
    detection: Optional[BeaconDetection] = None
    t_z: Optional[int] = None
    t_w: Optional[Timestamp64] = None
    decoded: Optional[DecodeResult] = None
    confirms: Optional[Tuple[int, SyncPair]] = None

    @property
    def pair(self) -> Optional[SyncPair]:
        if self.status != 'ok':
            return None
        return SyncPair(self.t_z, self.t_w)


def _plausible(cfg: SessionConfig, t_z: int, t_w: Timestamp64, last_pair: Optional[SyncPair]) -> bool:
    if last_pair is None:
        return True
    dz = t_z - last_pair.t_z
    dw = t_w.to_ns() - last_pair.t_w_ns
    return dz > 0 and abs(dw - dz) <= cfg.plausibility * dz + cfg.plausibility_floor_ns


def receive(cfg: SessionConfig,
            trace: RssiTrace,
            clock_z: ClockParams,
            rng: Optional[_np.random.Generator] = None,
            payload_kind: str = 'full',
            previous_t_w: Optional[Timestamp64] = None,
            last_pair: Optional[SyncPair] = None) -> Reception:
    """Process the trace of one round: detect, match, stamp, decode and validate.

    Args:
        cfg: session configuration
        trace: RSSI samples covering the round
        clock_z: the receiver's clock
        rng: generator for the receiver's timestamping latency
        payload_kind: 'full' or 'delta', as agreed for this round
        previous_t_w: decoded sender stamp of the previous round (delta payloads only)
        last_pair: latest accepted pair, for the plausibility check

    Returns:
        the reception, whose status is 'ok' or the reason the round was dropped ('no-beacon', 'erasure',
        'truncated', 'chain-broken', 'implausible').
    """
    detector = cfg.detector
    detections = detect_packets(trace, detector.margin_db, detector.min_high_samples, detector.ema_alpha,
                                detector.interpolate)
    match = match_beacon(detections, cfg.beacon, cfg.symbol_tolerance_ns, cfg.match_threshold,
                         cfg.allow_insertions, cfg.max_insertions)
    if match is None:
        return Reception('no-beacon')
    t_z = stamp_event(clock_z, cfg.stamp_jitter_receiver, match.first_packet_rise, rng)

    payload_start = match.last_packet_rise + cfg.guard
    n_symbols = cfg.payload_length(payload_kind)
    if cfg.codec == 'temporal':
        rises = [d for d in detections if d.rise_true_time >= payload_start - cfg.guard // 2]
        decoded = temporal_decode_rises(rises, n_symbols, cfg.temporal_params)
    else:
        try:
            decoded = energy_decode(trace, payload_start, n_symbols // cfg.energy.bits_per_slot, cfg.energy)
        except CodecException as e:
            _logger.info(f"Payload not covered by the trace: {e.message}")
            return Reception('truncated', match, t_z)
    if not decoded.ok:
        return Reception('erasure', match, t_z, decoded=decoded)

    try:
        if payload_kind == 'full':
            t_w = Timestamp64(decoded.value)
        elif previous_t_w is None:
            return Reception('chain-broken', match, t_z, decoded=decoded)
        else:
            t_w = delta_decode(previous_t_w, decoded.value)
    except CodecException:
        return Reception('implausible', match, t_z, decoded=decoded)
    if not _plausible(cfg, t_z, t_w, last_pair):
        return Reception('implausible', match, t_z, t_w, decoded)
    return Reception('ok', match, t_z, t_w, decoded)


def receiver_round(cfg: SessionConfig,
                   trace: RssiTrace,
                   clock_z: ClockParams,
                   rng: Optional[_np.random.Generator] = None,
                   payload_kind: str = 'full',
                   previous_t_w: Optional[Timestamp64] = None,
                   last_pair: Optional[SyncPair] = None) -> Optional[SyncPair]:
    """The synchronization pair of one round, or None when the round is skipped (see `receive`)."""
    return receive(cfg, trace, clock_z, rng, payload_kind, previous_t_w, last_pair).pair


def direct_pair(cfg: SessionConfig, sent: SenderRound, clock_z: ClockParams, streams: RngStreams) -> Reception:
    """Synthesize the pair of a round from ground truth, with sampling quantization and timestamping latency."""
    period = cfg.detector.sample_period_ns
    rise = sent.emission_ns + int(streams.quantization.integers(0, period))
    if cfg.detector.interpolate:
        rise -= period // 2
    t_z = stamp_event(clock_z, cfg.stamp_jitter_receiver, rise, streams.stamp_receiver)
    detection = BeaconDetection(first_packet_rise=rise,
                                last_packet_rise=rise + cfg.beacon.span_ns,
                                rise_index=0,
                                sample_index=None,
                                matched_length=cfg.beacon.length - 1,
                                correlation_score=cfg.beacon.length - 1)
    return Reception('ok', detection, t_z, sent.t_w)


@dataclass
class Sender:
    """Sender state across rounds: its clock and its previous stamp."""
    cfg: SessionConfig
    clock: ClockParams
    streams: RngStreams
    previous: Optional[Timestamp64] = None

    def send(self, round_index: int) -> SenderRound:
        sent = sender_round(self.cfg, round_index, self.clock, self.streams, self.previous)
        self.previous = sent.t_w
        return sent


@dataclass
class Receiver:
    """Receiver state across rounds: its clock, the decoded stamps and the latest accepted pair.

    Nothing vouches for the first pair decoded from the radio, so it is held back (status 'unconfirmed') until a
    later round decodes a pair that is plausible against it; both are then accepted. An implausible successor discards
    the held pair together with its stamp, so that no delta is decoded against it.
    """
    cfg: SessionConfig
    clock: ClockParams
    streams: RngStreams
    decoded: Dict[int, Timestamp64] = field(default_factory=dict)
    last_pair: Optional[SyncPair] = None
    pending: Optional[Tuple[int, SyncPair]] = None

    def _confirm(self, round_index: int, reception: Reception) -> Reception:
        if self.last_pair is not None:
            return reception
        if reception.status == 'ok':
            if self.pending is None:
                self.pending = (round_index, reception.pair)
                self.decoded[round_index] = reception.t_w
                return replace(reception, status='unconfirmed')
            held, self.pending = self.pending, None
            return replace(reception, confirms=held)
        if reception.status == 'implausible' and self.pending is not None:
            _logger.info(f"Round {round_index} contradicts the unconfirmed pair of round {self.pending[0]}; "
                         f"discarding both.")
            self.decoded.pop(self.pending[0], None)
            self.pending = None
        return reception

    def listen_span(self, sent: SenderRound):
        """True-time window the receiver samples for a round."""
        start = sent.nominal_start - self.cfg.listen_margin_ns
        return start, start + self.cfg.listen_ns(self.cfg.payload_kind(sent.round_index))

    def receive(self, sent: SenderRound, source: str) -> Reception:
        """Receive one round from the radio trace, or synthesize its pair when ``source`` is 'direct'."""
        if source == 'direct':
            reception = direct_pair(self.cfg, sent, self.clock, self.streams)
        else:
            span = self.listen_span(sent)
            trace = render_trace(sent.events, self.cfg.noise, self.cfg.interference,
                                 self.cfg.detector.sample_period_ns, span, self.streams.noise,
                                 self.streams.interference)
            kind = self.cfg.payload_kind(sent.round_index)
            reference = self.last_pair if self.pending is None else self.pending[1]
            reception = receive(self.cfg, trace, self.clock, self.streams.stamp_receiver, kind,
                                self.decoded.get(sent.round_index - 1), reference)
            reception = self._confirm(sent.round_index, reception)
        if reception.status == 'unconfirmed':
            _logger.info(f"Round {sent.round_index} held back until a later pair confirms it.")
        elif reception.status == 'ok':
            self.decoded[sent.round_index] = reception.t_w
            self.last_pair = reception.pair
        else:
            _logger.info(f"Round {sent.round_index} dropped: {reception.status}.")
        return reception
