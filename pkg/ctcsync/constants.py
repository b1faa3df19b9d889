"""Protocol and simulator constants.

All durations are integer nanoseconds.
"""

NS_PER_US: int = 1_000
NS_PER_MS: int = 1_000_000
NS_PER_S: int = 1_000_000_000

DEFAULT_SAMPLE_PERIOD_NS: int = 166_667
"""RSSI sampling period of the receiver (about 6 kHz)."""

DEFAULT_PACKET_DURATION_NS: int = 2 * NS_PER_MS
"""Airtime of one sender packet used for beacons and temporal payloads."""

DEFAULT_MIN_PACKET_INTERVAL_NS: int = 10 * NS_PER_MS
"""Shortest packet interval the sender hardware can produce."""

DEFAULT_NOISE_FLOOR_DBM: float = -95.0

TIMESTAMP_BITS: int = 64
TIMESTAMP_DIGITS: int = 20
"""Decimal digits needed for any 64-bit value (2**64 - 1 has 20 digits)."""

NTP_FRACTION: int = 2 ** 32

DELTA_BITS: int = 26
DELTA_LIMIT_US: int = 2 ** DELTA_BITS
"""Incremental timestamps must stay strictly below this many microseconds."""

DELTA_DIGITS: int = 8
"""Decimal digits needed for any 26-bit delta."""

DEFAULT_ALIGNMENT_TOLERANCE_NS: int = NS_PER_MS
"""A beacon match counts as correct when its first rise is within this distance of the true emission."""
