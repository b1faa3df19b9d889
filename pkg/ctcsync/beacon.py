"""Beacons: Barker-coded packet-interval sequences marking a shared instant.

A beacon of length N is N packets whose N - 1 intervals follow a Barker code over two atomic intervals ``t1`` (+1)
and ``t2`` (-1). The aperiodic autocorrelation of a Barker code has sidelobes of magnitude at most one, so the
correlation of the code with the interval stream peaks unambiguously at the start of the beacon. The rise of the
beacon's first packet is the alignment event both sides timestamp.

Supported patterns:

======  =======  ==========================================
Length  Variant  Intervals
======  =======  ==========================================
3       A        t1 t2
4       A        t1 t1 t2
5       A        t1 t1 t1 t2
5       B        t1 t1 t2 t1
6       A        t1 t1 t1 t2 t1
8       A        t1 t1 t1 t2 t2 t1 t2
12      A        t1 t1 t1 t2 t2 t2 t1 t2 t2 t1 t2
14      A        t1 t1 t1 t1 t1 t2 t2 t1 t1 t2 t1 t2 t1
======  =======  ==========================================

Examples:
    >>> pattern_of(3)
    (T1, T2)
    >>> autocorrelation(BarkerCode((1, 1, 1, -1)), 1)
    1
    >>> [autocorrelation(BarkerCode((1, -1, 1, -1)), v) for v in range(4)]
    [4, -3, 2, -1]
"""
from __future__ import annotations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union
from dataclasses import dataclass
import logging
import numpy as _np
from .constants import DEFAULT_MIN_PACKET_INTERVAL_NS, DEFAULT_PACKET_DURATION_NS, DEFAULT_ALIGNMENT_TOLERANCE_NS, \
    NS_PER_MS
from .symbols import SymbolType, T1, T2, Erasure, symbol_of
from .clocks import JitterModel, TrueTime
from .channel import PacketEvent, PacketDetection, NoiseModel, InterferenceModel, DetectorParams, emit, \
    render_trace, detect_packets, intervals

__all__ = [
    'BeaconException',
    'PATTERNS',
    'BarkerCode',
    'BeaconSpec',
    'BeaconDetection',
    'BeaconTrial',
    'pattern_of',
    'autocorrelation',
    'beacon_schedule',
    'symbolize',
    'match_beacon',
    'beacon_trial',
    'matching_rate',
]

_logger = logging.getLogger(__name__)

PATTERNS: Dict[Tuple[int, str], Tuple[int, ...]] = {
    (3, 'A'): (1, -1),
    (4, 'A'): (1, 1, -1),
    (5, 'A'): (1, 1, 1, -1),
    (5, 'B'): (1, 1, -1, 1),
    (6, 'A'): (1, 1, 1, -1, 1),
    (8, 'A'): (1, 1, 1, -1, -1, 1, -1),
    (12, 'A'): (1, 1, 1, -1, -1, -1, 1, -1, -1, 1, -1),
    (14, 'A'): (1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1),
}
"""Interval codes (+1 for t1, -1 for t2) indexed by beacon length and variant."""


class BeaconException(Exception):
    """Exception raised for errors in the beacon module."""

    def __init__(self, m):
        self.message = m

    def __str__(self):
        return self.message


def pattern_of(length: int, variant: str = 'A') -> Tuple[SymbolType, ...]:
    """Interval pattern of a beacon.

    Args:
        length: number of packets of the beacon
        variant: pattern selector when two patterns exist for one length ('A' or 'B')

    Returns:
        a tuple of ``length - 1`` interval symbols.

    Raises:
        BeaconException if the length (or the variant) is not supported.
    """
    try:
        code = PATTERNS[(length, variant)]
    except KeyError:
        supported = sorted({k[0] for k in PATTERNS})
        raise BeaconException(f"unsupported beacon length {length} (variant '{variant}'); "
                              f"supported lengths are {supported}.")
    return tuple(symbol_of(c) for c in code)


@dataclass(frozen=True)
class BarkerCode:
    """A sequence over {+1, -1}."""
    symbols: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'symbols', tuple(int(s) for s in self.symbols))
        if not self.symbols or any(s not in (1, -1) for s in self.symbols):
            raise BeaconException(f"a code is a non-empty sequence over {{+1, -1}} (got {self.symbols}).")

    def __len__(self) -> int:
        return len(self.symbols)

    def autocorrelation(self, v: int) -> int:
        n = len(self.symbols)
        if not 0 <= v < n:
            raise BeaconException(f"lag {v} out of range for a code of length {n}.")
        return sum(self.symbols[j] * self.symbols[j + v] for j in range(n - v))

    @property
    def sidelobes(self) -> List[int]:
        return [self.autocorrelation(v) for v in range(1, len(self))]

    @property
    def is_barker(self) -> bool:
        return all(abs(c) <= 1 for c in self.sidelobes)


def autocorrelation(code: BarkerCode, v: int) -> int:
    """Aperiodic autocorrelation of a code at lag ``v`` (exact integer)."""
    return code.autocorrelation(v)


@dataclass(frozen=True)
class BeaconSpec:
    """Beacon definition shared by the sender and the receiver.

    Attributes:
        length: number of packets
        t1_ns: first atomic interval (+1)
        t2_ns: second atomic interval (-1)
        variant: pattern selector for lengths with two patterns
        min_interval_ns: shortest interval the sender hardware can produce
    """
    length: int = 3
    t1_ns: int = 30 * NS_PER_MS
    t2_ns: int = 70 * NS_PER_MS
    variant: str = 'A'
    min_interval_ns: int = DEFAULT_MIN_PACKET_INTERVAL_NS

    def __post_init__(self):
        pattern_of(self.length, self.variant)
        if self.t1_ns == self.t2_ns:
            raise BeaconException(f"the atomic intervals must differ (both are {self.t1_ns} ns).")
        if min(self.t1_ns, self.t2_ns) < self.min_interval_ns:
            raise BeaconException(f"beacon intervals ({self.t1_ns}, {self.t2_ns}) ns are shorter than the minimum "
                                  f"packet interval ({self.min_interval_ns} ns).")

    @property
    def pattern(self) -> Tuple[SymbolType, ...]:
        return pattern_of(self.length, self.variant)

    @property
    def code(self) -> BarkerCode:
        return BarkerCode(tuple(int(s) for s in self.pattern))

    @property
    def intervals_ns(self) -> Tuple[int, ...]:
        return tuple(self.t1_ns if s == T1 else self.t2_ns for s in self.pattern)

    @property
    def span_ns(self) -> int:
        """Time from the first to the last packet rise; the sampling cost of one beacon."""
        return sum(self.intervals_ns)

    def default_tolerance_ns(self) -> int:
        """Symbol tolerance: a quarter of the gap between the atomic intervals, at most 5 ms."""
        return min(abs(self.t2_ns - self.t1_ns) // 4, 5 * NS_PER_MS)


@dataclass(frozen=True)
class BeaconDetection:
    """A matched beacon in a stream of packet rises."""
    first_packet_rise: TrueTime
    last_packet_rise: TrueTime
    rise_index: int
    sample_index: Optional[int]
    matched_length: int
    correlation_score: int
    skipped: int = 0


def beacon_schedule(spec: BeaconSpec,
                    first_packet_start: TrueTime,
                    duration_ns: int = DEFAULT_PACKET_DURATION_NS,
                    power_dbm: float = -60.0) -> Tuple[List[PacketEvent], TrueTime]:
    """Nominal packet schedule of a beacon.

    Returns:
        the packets (rise-to-rise gaps follow the beacon pattern) and the sender-side alignment time, which is the
        start of the first packet.
    """
    rises = [first_packet_start]
    for gap in spec.intervals_ns:
        rises.append(rises[-1] + gap)
    return [PacketEvent(r, duration_ns, power_dbm) for r in rises], first_packet_start


def symbolize(measured: Iterable[int], t1_ns: int, t2_ns: int, tol_ns: int) -> List[SymbolType]:
    """Map measured intervals to symbols: within ``tol_ns`` of t1 gives T1, of t2 gives T2, else an Erasure.

    >>> symbolize([30_100_000, 69_800_000], 30_000_000, 70_000_000, 5_000_000)
    [T1, T2]
    """
    if not tol_ns < abs(t2_ns - t1_ns) / 2:
        raise BeaconException(f"symbol tolerance {tol_ns} ns must be smaller than half the gap between the atomic "
                              f"intervals.")
    symbols = []
    for i in measured:
        if abs(i - t1_ns) <= tol_ns:
            symbols.append(T1)
        elif abs(i - t2_ns) <= tol_ns:
            symbols.append(T2)
        else:
            symbols.append(Erasure)
    return symbols


def _rise_time(r: Union[PacketDetection, int]) -> int:
    return r.rise_true_time if isinstance(r, PacketDetection) else int(r)


def _sample_index(r: Union[PacketDetection, int]) -> Optional[int]:
    return r.rise_sample_index if isinstance(r, PacketDetection) else None


def _follow_code(times: Sequence[int], start: int, expected: Sequence[int], tol_ns: int,
                 max_insertions: int) -> Optional[Tuple[int, int]]:
    """Follow the code from one candidate first rise, skipping short extra rises; returns (last index, skipped)."""
    current = start
    skipped = 0
    for gap in expected:
        m = current + 1
        while m < len(times) and times[m] - times[current] < gap - tol_ns:
            m += 1
            skipped += 1
        if skipped > max_insertions or m >= len(times) or times[m] - times[current] > gap + tol_ns:
            return None
        current = m
    return current, skipped


def match_beacon(rises: Sequence[Union[PacketDetection, int]],
                 spec: BeaconSpec,
                 tolerance_ns: Optional[int] = None,
                 threshold: Optional[int] = None,
                 allow_insertions: bool = True,
                 max_insertions: int = 2) -> Optional[BeaconDetection]:
    """Find the earliest beacon in a stream of packet rises.

    The ±1 code slides over the symbolized interval stream; erasures contribute 0. A window whose correlation reaches
    the threshold (the code length by default, an exact match) is a beacon, reported at the rise of its first packet.
    When no window matches and insertions are allowed, each rise is tried as a first packet while skipping extra rises
    that fall short of the expected interval (interference landing inside the beacon).

    Args:
        rises: packet detections (or rise times) in arrival order
        spec: the beacon to look for
        tolerance_ns: symbol tolerance (defaults to the beacon's default tolerance)
        threshold: minimum correlation score (defaults to the code length)
        allow_insertions: enable the insertion-tolerant retry
        max_insertions: maximum number of skipped rises per beacon in the retry

    Returns:
        the detection, or None when no beacon is found.
    """
    tol = spec.default_tolerance_ns() if tolerance_ns is None else tolerance_ns
    code = _np.array(spec.code.symbols, dtype=_np.int64)
    n = len(code)
    threshold = n if threshold is None else threshold
    times = [_rise_time(r) for r in rises]
    if len(times) < n + 1:
        return None

    values = _np.array([int(s) for s in symbolize(intervals(times), spec.t1_ns, spec.t2_ns, tol)], dtype=_np.int64)
    scores = _np.correlate(values, code, mode='valid')
    hits = _np.flatnonzero(scores >= threshold)
    if hits.size:
        k = int(hits[0])
        _logger.debug(f"Beacon matched at rise {k} with score {scores[k]}.")
        return BeaconDetection(first_packet_rise=times[k],
                               last_packet_rise=times[k + n],
                               rise_index=k,
                               sample_index=_sample_index(rises[k]),
                               matched_length=n,
                               correlation_score=int(scores[k]))

    if allow_insertions:
        for k in range(len(times) - n):
            followed = _follow_code(times, k, spec.intervals_ns, tol, max_insertions)
            if followed is not None:
                last, skipped = followed
                _logger.debug(f"Beacon matched at rise {k} after skipping {skipped} extra rises.")
                return BeaconDetection(first_packet_rise=times[k],
                                       last_packet_rise=times[last],
                                       rise_index=k,
                                       sample_index=_sample_index(rises[k]),
                                       matched_length=n,
                                       correlation_score=n,
                                       skipped=skipped)
    return None


@dataclass(frozen=True)
class BeaconTrial:
    """Outcome of one labelled beacon experiment."""
    correct: bool
    detection: Optional[BeaconDetection]
    emission_ns: TrueTime
    alignment_error_ns: Optional[int] = None


def beacon_trial(spec: BeaconSpec,
                 detector: DetectorParams,
                 noise: NoiseModel,
                 interference: InterferenceModel,
                 emission_jitter: JitterModel,
                 rng_emission: Optional[_np.random.Generator] = None,
                 rng_noise: Optional[_np.random.Generator] = None,
                 rng_interference: Optional[_np.random.Generator] = None,
                 start_ns: TrueTime = 100 * NS_PER_MS,
                 lead_ns: int = 50 * NS_PER_MS,
                 packet_duration_ns: int = DEFAULT_PACKET_DURATION_NS,
                 power_dbm: float = -60.0,
                 tolerance_ns: Optional[int] = None,
                 threshold: Optional[int] = None,
                 allow_insertions: bool = True,
                 max_insertions: int = 2,
                 alignment_tolerance_ns: int = DEFAULT_ALIGNMENT_TOLERANCE_NS) -> BeaconTrial:
    """Send one beacon through the channel and check the receiver's match against ground truth.

    The match is correct when the reported first rise is within ``alignment_tolerance_ns`` of the true emission of the
    beacon's first packet.
    """
    nominal, _ = beacon_schedule(spec, start_ns, packet_duration_ns, power_dbm)
    sent = emit(nominal, emission_jitter, rng_emission, chained=True)
    span = (max(0, start_ns - lead_ns), sent[-1].end + lead_ns)
    trace = render_trace(sent, noise, interference, detector.sample_period_ns, span, rng_noise, rng_interference)
    detections = detect_packets(trace, detector.margin_db, detector.min_high_samples, detector.ema_alpha,
                                detector.interpolate)
    match = match_beacon(detections, spec, tolerance_ns, threshold, allow_insertions, max_insertions)
    if match is None:
        return BeaconTrial(correct=False, detection=None, emission_ns=sent[0].start)
    error = match.first_packet_rise - sent[0].start
    return BeaconTrial(correct=abs(error) <= alignment_tolerance_ns,
                       detection=match,
                       emission_ns=sent[0].start,
                       alignment_error_ns=error)


def matching_rate(trials: Iterable) -> float:
    """Fraction of correctly matched beacons.

    Args:
        trials: session logs (every round counts as one beacon), beacon trials or plain booleans

    Returns:
        matched / total.

    Raises:
        BeaconException when there is no trial at all.
    """
    labels = []
    for trial in trials:
        if hasattr(trial, 'rounds'):
            labels.extend(bool(r.beacon_correct) for r in trial.rounds)
        elif hasattr(trial, 'correct'):
            labels.append(bool(trial.correct))
        else:
            labels.append(bool(trial))
    if not labels:
        raise BeaconException("cannot compute a matching rate over zero trials.")
    return sum(labels) / len(labels)
