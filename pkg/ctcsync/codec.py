"""Timestamp transfer over the RSSI side channel.

Two modulations are supported:

- **temporal modulation**: a decimal digit ``a`` is carried by two consecutive packet intervals of ``g·(10 + a)`` and
  ``g·(20 - a)`` milliseconds, ``g`` being the time granularity. Every digit window therefore lasts exactly ``30·g``
  ms, whatever the digit, and consecutive windows share their boundary packet. The receiver subtracts a compensation
  (the expected emission latency) from every measured interval, checks that each pair sums to the window within
  ``g/2`` ms and abandons the digit otherwise (an *erasure*);
- **energy modulation**: fixed-length slots each carry ``log2(L)`` bits, through packet absence (symbol 0) or presence
  at one of ``L - 1`` increasing power levels.

Timestamps are 64-bit NTP-style values (32 bits of seconds, 32 bits of fraction). They travel either in full, as 20
decimal digits or 64 bits, or as a 26-bit microsecond delta from the previous round's timestamp.

Examples:
    >>> TemporalParams(granularity_ms=1, compensation_ns=0).intervals_of(3)
    (13000000, 17000000)
    >>> timestamp_to_digits(Timestamp64(2 ** 64 - 1))
    [1, 8, 4, 4, 6, 7, 4, 4, 0, 7, 3, 7, 0, 9, 5, 5, 1, 6, 1, 5]
"""
from __future__ import annotations
from typing import List, Mapping, Optional, Sequence, Tuple, Union
from dataclasses import dataclass
from enum import Enum
import logging
import numpy as _np
from .constants import NS_PER_S, NS_PER_MS, NS_PER_US, NTP_FRACTION, TIMESTAMP_BITS, TIMESTAMP_DIGITS, \
    DELTA_BITS, DELTA_DIGITS, DELTA_LIMIT_US, DEFAULT_MIN_PACKET_INTERVAL_NS, DEFAULT_PACKET_DURATION_NS, \
    DEFAULT_NOISE_FLOOR_DBM
from .clocks import TrueTime
from .channel import PacketEvent, PacketDetection, RssiTrace, dbm_sum, debounce, intervals

__all__ = [
    'CodecException',
    'DeltaOverflowException',
    'Timestamp64',
    'TemporalParams',
    'EnergyParams',
    'SymbolStatus',
    'DecodeResult',
    'value_to_digits',
    'digits_to_value',
    'value_to_bits',
    'bits_to_value',
    'bits_to_symbols',
    'symbols_to_bits',
    'timestamp_to_digits',
    'digits_to_timestamp',
    'timestamp_to_bits',
    'bits_to_timestamp',
    'delta_encode',
    'delta_decode',
    'delta_to_digits',
    'delta_to_bits',
    'temporal_encode',
    'temporal_decode',
    'temporal_decode_rises',
    'energy_encode',
    'energy_decode',
    'ber',
]

_logger = logging.getLogger(__name__)


class CodecException(Exception):
    """Exception raised for errors in the codec module."""

    def __init__(self, m):
        self.message = m

    def __str__(self):
        return self.message


class DeltaOverflowException(CodecException):
    """Raised when a delta does not fit in 26 bits of microseconds; the caller falls back to a full timestamp."""
    pass


@dataclass(frozen=True, order=True)
class Timestamp64:
    """64-bit NTP-style timestamp: the high 32 bits count seconds, the low 32 bits count 2**-32 s.

    >>> Timestamp64.from_ns(1_500_000_000).seconds
    1
    >>> Timestamp64.from_ns(1_500_000_000).to_ns()
    1500000000
    """
    value: int

    def __post_init__(self):
        if not 0 <= self.value < 2 ** TIMESTAMP_BITS:
            raise CodecException(f"{self.value} does not fit in a 64-bit timestamp.")

    def __int__(self) -> int:
        return self.value

    @property
    def seconds(self) -> int:
        return self.value >> 32

    @property
    def fraction(self) -> int:
        return self.value & (NTP_FRACTION - 1)

    @classmethod
    def from_ns(cls, ns: int) -> Timestamp64:
        """Timestamp of an integer number of nanoseconds, fraction rounded to nearest."""
        if ns < 0:
            raise CodecException(f"cannot represent a negative time ({ns} ns).")
        seconds, remainder = divmod(int(ns), NS_PER_S)
        fraction = (remainder * NTP_FRACTION + NS_PER_S // 2) // NS_PER_S
        if fraction == NTP_FRACTION:
            seconds, fraction = seconds + 1, 0
        return cls((seconds << 32) | fraction)

    def to_ns(self) -> int:
        """Integer nanoseconds, rounded to nearest; exact inverse of `from_ns`."""
        return self.seconds * NS_PER_S + ((self.fraction * NS_PER_S + NTP_FRACTION // 2) >> 32)

    def to_digits(self) -> List[int]:
        return value_to_digits(self.value, TIMESTAMP_DIGITS)

    def to_bits(self) -> List[int]:
        return value_to_bits(self.value, TIMESTAMP_BITS)

    @classmethod
    def from_digits(cls, digits: Sequence[int]) -> Timestamp64:
        return digits_to_timestamp(digits)

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> Timestamp64:
        return bits_to_timestamp(bits)


def value_to_digits(value: int, n_digits: int) -> List[int]:
    """Zero-padded base-10 digits, most significant first."""
    text = str(int(value)).zfill(n_digits)
    if len(text) > n_digits or value < 0:
        raise CodecException(f"{value} does not fit in {n_digits} decimal digits.")
    return [int(c) for c in text]


def digits_to_value(digits: Sequence[int]) -> int:
    if any(not 0 <= int(d) <= 9 for d in digits):
        raise CodecException(f"digits must be in 0..9 (got {list(digits)}).")
    value = 0
    for d in digits:
        value = 10 * value + int(d)
    return value


def value_to_bits(value: int, n_bits: int) -> List[int]:
    """Binary digits, most significant first.

    >>> value_to_bits(11, 4)
    [1, 0, 1, 1]
    """
    if not 0 <= value < 2 ** n_bits:
        raise CodecException(f"{value} does not fit in {n_bits} bits.")
    return [(int(value) >> (n_bits - 1 - k)) & 1 for k in range(n_bits)]


def bits_to_value(bits: Sequence[int]) -> int:
    value = 0
    for b in bits:
        if int(b) not in (0, 1):
            raise CodecException(f"bits must be 0 or 1 (got {list(bits)}).")
        value = (value << 1) | int(b)
    return value


def bits_to_symbols(bits: Sequence[int], bits_per_symbol: int) -> List[int]:
    """Group bits into symbols of ``bits_per_symbol`` bits, most significant first.

    >>> bits_to_symbols([1, 0, 1, 1], 2)
    [2, 3]
    """
    if bits_per_symbol < 1 or len(bits) % bits_per_symbol:
        raise CodecException(f"{len(bits)} bits cannot be split into {bits_per_symbol}-bit symbols.")
    return [bits_to_value(bits[k:k + bits_per_symbol]) for k in range(0, len(bits), bits_per_symbol)]


def symbols_to_bits(symbols: Sequence[int], bits_per_symbol: int) -> List[int]:
    bits: List[int] = []
    for s in symbols:
        bits.extend(value_to_bits(int(s), bits_per_symbol))
    return bits


def timestamp_to_digits(t: Timestamp64) -> List[int]:
    """The 20 zero-padded decimal digits of a timestamp."""
    return t.to_digits()


def digits_to_timestamp(digits: Sequence[int]) -> Timestamp64:
    """Inverse of `timestamp_to_digits`; raises a CodecException for values beyond 64 bits."""
    if len(digits) != TIMESTAMP_DIGITS:
        raise CodecException(f"a timestamp has {TIMESTAMP_DIGITS} digits (got {len(digits)}).")
    return Timestamp64(digits_to_value(digits))


def timestamp_to_bits(t: Timestamp64) -> List[int]:
    return t.to_bits()


def bits_to_timestamp(bits: Sequence[int]) -> Timestamp64:
    if len(bits) != TIMESTAMP_BITS:
        raise CodecException(f"a timestamp has {TIMESTAMP_BITS} bits (got {len(bits)}).")
    return Timestamp64(bits_to_value(bits))


def delta_encode(prev: Timestamp64, cur: Timestamp64) -> int:
    """Microsecond delta between two timestamps, rounded to nearest.

    Any delta strictly below 2**26 µs encodes; one rounding up to 2**26 is capped at 2**26 - 1.

    Raises:
        CodecException if ``cur`` precedes ``prev``; DeltaOverflowException if the delta reaches 2**26 µs.
    """
    if cur < prev:
        raise CodecException(f"cannot encode a negative delta ({prev.value} -> {cur.value}).")
    delta_ns = cur.to_ns() - prev.to_ns()
    if delta_ns >= DELTA_LIMIT_US * NS_PER_US:
        raise DeltaOverflowException(f"delta of {delta_ns} ns does not fit in {DELTA_BITS} bits of microseconds.")
    # nearest microsecond, capped at the largest representable delta
    return min((delta_ns + NS_PER_US // 2) // NS_PER_US, DELTA_LIMIT_US - 1)


def delta_decode(prev: Timestamp64, delta_us: int) -> Timestamp64:
    """Inverse of `delta_encode` for timestamps a whole number of microseconds apart."""
    if not 0 <= delta_us < DELTA_LIMIT_US:
        raise CodecException(f"{delta_us} is not a valid {DELTA_BITS}-bit delta.")
    return Timestamp64.from_ns(prev.to_ns() + delta_us * NS_PER_US)


def delta_to_digits(delta_us: int) -> List[int]:
    return value_to_digits(delta_us, DELTA_DIGITS)


def delta_to_bits(delta_us: int) -> List[int]:
    return value_to_bits(delta_us, DELTA_BITS)


class SymbolStatus(Enum):
    OK = 'ok'
    ERASURE = 'erasure'


@dataclass(frozen=True)
class DecodeResult:
    """Decoded symbols (digits or bits) with their status; erased symbols are None.

    The value is only present when no symbol was erased.
    """
    symbols: Tuple[Optional[int], ...]
    status: Tuple[SymbolStatus, ...]
    value: Optional[int] = None

    def __post_init__(self):
        if len(self.symbols) != len(self.status):
            raise CodecException("symbols and status must have the same length.")
        if self.value is not None and self.erasures:
            raise CodecException("a decoded value cannot coexist with erased symbols.")

    @property
    def erasures(self) -> int:
        return sum(1 for s in self.status if s is SymbolStatus.ERASURE)

    @property
    def ok(self) -> bool:
        return len(self.status) > 0 and self.erasures == 0

    def padded(self, n: int) -> DecodeResult:
        """The first ``n`` symbols, completed with erasures when fewer were decoded."""
        missing = max(0, n - len(self.symbols))
        symbols = self.symbols[:n] + (None,) * missing
        status = self.status[:n] + (SymbolStatus.ERASURE,) * missing
        value = self.value if missing == 0 and len(self.symbols) == n else None
        return DecodeResult(symbols, status, value)


@dataclass(frozen=True)
class TemporalParams:
    """Temporal modulation settings.

    Attributes:
        granularity_ms: time unit g of the intervals, in milliseconds
        compensation_ns: expected emission latency subtracted from every measured interval
        base: digit base (decimal only)
        min_interval_ns: shortest interval the sender can produce
    """
    granularity_ms: int = 2
    compensation_ns: int = 400_000
    base: int = 10
    min_interval_ns: int = DEFAULT_MIN_PACKET_INTERVAL_NS

    def __post_init__(self):
        if int(self.granularity_ms) != self.granularity_ms or self.granularity_ms < 1:
            raise CodecException(f"granularity must be a positive whole number of ms (got {self.granularity_ms}).")
        if self.base != 10:
            raise CodecException(f"only decimal digits are supported (got base {self.base}).")
        if 10 * self.unit_ns < self.min_interval_ns:
            raise CodecException(f"granularity {self.granularity_ms} ms produces intervals shorter than the minimum "
                                 f"packet interval ({self.min_interval_ns} ns).")

    @property
    def unit_ns(self) -> int:
        return int(self.granularity_ms) * NS_PER_MS

    @property
    def window_ns(self) -> int:
        """Duration of one digit window (30·g ms)."""
        return 30 * self.unit_ns

    @property
    def tolerance_ns(self) -> int:
        """Admissible deviation of a window sum (g/2 ms)."""
        return self.unit_ns // 2

    def intervals_of(self, digit: int) -> Tuple[int, int]:
        if not 0 <= digit <= 9:
            raise CodecException(f"digits must be in 0..9 (got {digit}).")
        return self.unit_ns * (10 + digit), self.unit_ns * (20 - digit)

    def decode_digit(self, first_interval_ns: int) -> int:
        """Digit carried by a measured first interval, after compensation.

        >>> TemporalParams(granularity_ms=1, compensation_ns=0).decode_digit(13_700_000)
        4
        >>> TemporalParams(granularity_ms=1, compensation_ns=400_000).decode_digit(13_700_000)
        3
        """
        a = round((first_interval_ns - self.compensation_ns) / self.unit_ns - 10)
        return min(max(a, 0), 9)


def temporal_encode(digits: Sequence[int],
                    p: TemporalParams,
                    start: TrueTime,
                    duration_ns: int = DEFAULT_PACKET_DURATION_NS,
                    power_dbm: float = -60.0) -> List[PacketEvent]:
    """Packet schedule of a digit sequence: ``2·n + 1`` packets, consecutive windows sharing a boundary packet."""
    rises = [start]
    for d in digits:
        first, second = p.intervals_of(int(d))
        rises.append(rises[-1] + first)
        rises.append(rises[-1] + second)
    return [PacketEvent(r, duration_ns, power_dbm) for r in rises]


def temporal_decode(measured: Sequence[int], p: TemporalParams) -> DecodeResult:
    """Decode measured intervals, two per digit.

    A pair whose compensated sum deviates from the window by more than the tolerance is erased, as is a trailing
    unpaired interval.
    """
    symbols, status = [], []
    for k in range(0, len(measured) - 1, 2):
        first = measured[k] - p.compensation_ns
        second = measured[k + 1] - p.compensation_ns
        if abs(first + second - p.window_ns) > p.tolerance_ns:
            symbols.append(None)
            status.append(SymbolStatus.ERASURE)
        else:
            symbols.append(p.decode_digit(measured[k]))
            status.append(SymbolStatus.OK)
    if len(measured) % 2:
        symbols.append(None)
        status.append(SymbolStatus.ERASURE)
    value = digits_to_value(symbols) if symbols and SymbolStatus.ERASURE not in status else None
    return DecodeResult(tuple(symbols), tuple(status), value)


def temporal_decode_rises(rises: Sequence[Union[PacketDetection, int]], n_digits: int,
                          p: TemporalParams) -> DecodeResult:
    """Decode ``n_digits`` digits from the packet rises following a payload start.

    Rises closer than half the minimum packet interval to the previous one are fragments of the same packet and are
    dropped. Missing digits are erasures.
    """
    kept = debounce(rises, p.min_interval_ns // 2)[:2 * n_digits + 1]
    return temporal_decode(intervals(kept), p).padded(n_digits)


DEFAULT_POWER_DBM = {
    2: (-70.0,),
    4: (-86.0, -78.0, -70.0),
}
"""Default packet power per nonzero symbol, by number of levels."""


@dataclass(frozen=True)
class EnergyParams:
    """Energy modulation settings.

    Attributes:
        slot_ns: slot duration
        levels: number of energy levels L (2 or 4), log2(L) bits per slot
        power_dbm: packet power of symbols 1 .. L-1, strictly increasing (defaults by number of levels)
        floor_dbm: noise floor the receiver expects in empty slots
        guard_samples: samples ignored at each edge of a slot
        margin_db: slots whose mean RSSI lies closer than this to a decision boundary are erased
        min_slot_ns: shortest slot the sender can produce
    """
    slot_ns: int = 10 * NS_PER_MS
    levels: int = 2
    power_dbm: Tuple[float, ...] = ()
    floor_dbm: float = DEFAULT_NOISE_FLOOR_DBM
    guard_samples: int = 1
    margin_db: float = 1.0
    min_slot_ns: int = 0

    def __post_init__(self):
        if self.levels not in DEFAULT_POWER_DBM:
            raise CodecException(f"energy modulation supports 2 or 4 levels (got {self.levels}).")
        power = self.power_dbm
        if isinstance(power, Mapping):
            power = [power[k] for k in sorted(power, key=int)]
        object.__setattr__(self, 'power_dbm', tuple(float(x) for x in power))
        power = self.packet_power_dbm
        if len(power) != self.levels - 1:
            raise CodecException(f"{self.levels} levels need {self.levels - 1} packet powers (got {len(power)}).")
        if any(b <= a for a, b in zip(power[:-1], power[1:])):
            raise CodecException(f"power levels must be strictly increasing (got {power}).")
        if self.slot_ns <= 0 or self.slot_ns < self.min_slot_ns:
            raise CodecException(f"slot of {self.slot_ns} ns is shorter than the minimum ({self.min_slot_ns} ns).")
        if self.margin_db < 0:
            raise CodecException(f"decision margin must be non-negative (got {self.margin_db}).")

    @property
    def bits_per_slot(self) -> int:
        return self.levels.bit_length() - 1

    @property
    def packet_power_dbm(self) -> Tuple[float, ...]:
        """Packet power of symbols 1 .. L-1: the configured one, or the default for the number of levels."""
        return self.power_dbm or DEFAULT_POWER_DBM[self.levels]

    def observed_levels(self) -> _np.ndarray:
        """RSSI expected for each symbol: the floor, then each packet power summed with the floor."""
        return _np.array([self.floor_dbm] + [dbm_sum(self.floor_dbm, p) for p in self.packet_power_dbm])


def energy_encode(bits: Sequence[int], p: EnergyParams, start: TrueTime) -> List[PacketEvent]:
    """Packet schedule of a bit sequence: one packet filling each slot whose symbol is nonzero."""
    events = []
    for slot, symbol in enumerate(bits_to_symbols(bits, p.bits_per_slot)):
        if symbol:
            events.append(PacketEvent(start + slot * p.slot_ns, p.slot_ns, p.packet_power_dbm[symbol - 1]))
    return events


def energy_decode(trace: RssiTrace, start: TrueTime, n_slots: int, p: EnergyParams) -> DecodeResult:
    """Decode ``n_slots`` slots starting at ``start``: the mean RSSI of each slot selects the nearest expected level.

    A slot whose mean lies within ``p.margin_db`` of the midpoint between two adjacent levels is erased, with all its
    bits.

    Raises:
        CodecException if the trace does not cover all the slots.
    """
    stop = start + n_slots * p.slot_ns
    if start < trace.start or stop > trace.end:
        raise CodecException(f"trace [{trace.start}, {trace.end}) does not cover the {n_slots} slots "
                             f"[{start}, {stop}).")
    levels = p.observed_levels()
    boundaries = (levels[:-1] + levels[1:]) / 2
    bits: List[Optional[int]] = []
    status: List[SymbolStatus] = []
    for slot in range(n_slots):
        first = trace.index_of(start + slot * p.slot_ns)
        last = trace.index_of(start + (slot + 1) * p.slot_ns)
        if last - first > 2 * p.guard_samples:
            first, last = first + p.guard_samples, last - p.guard_samples
        mean = trace.samples[first:last].mean()
        if _np.abs(boundaries - mean).min() < p.margin_db:
            bits.extend([None] * p.bits_per_slot)
            status.extend([SymbolStatus.ERASURE] * p.bits_per_slot)
        else:
            bits.extend(value_to_bits(int(_np.argmin(_np.abs(levels - mean))), p.bits_per_slot))
            status.extend([SymbolStatus.OK] * p.bits_per_slot)
    value = bits_to_value(bits) if bits and SymbolStatus.ERASURE not in status else None
    return DecodeResult(tuple(bits), tuple(status), value)


def ber(sent: Sequence[int], received: Union[DecodeResult, Sequence[int]]) -> float:
    """Symbol error rate; erasures count as errors.

    >>> ber([1, 2, 3, 4], [1, 2, 3, 5])
    0.25
    """
    if isinstance(received, DecodeResult):
        symbols, status = received.symbols, received.status
    else:
        symbols, status = tuple(received), (SymbolStatus.OK,) * len(received)
    if len(sent) != len(symbols):
        raise CodecException(f"cannot compare {len(sent)} sent symbols with {len(symbols)} received ones.")
    if not sent:
        raise CodecException("cannot compute an error rate over zero symbols.")
    errors = sum(1 for s, r, st in zip(sent, symbols, status) if st is SymbolStatus.ERASURE or int(s) != r)
    return errors / len(sent)
