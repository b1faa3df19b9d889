"""*Ctcsync: cross-technology clock synchronization over an RSSI side channel, in Python 3.*

Ctcsync is a deterministic simulator and protocol library for synchronizing the clock of a low-power receiver (a
ZigBee-class radio that can only sense received signal strength) with the clock of a sender using an incompatible
technology (a WiFi-class radio). The two devices share no common physical layer: everything the receiver learns comes
from the timing and the energy of the sender's packets, as seen in its RSSI sample stream.

The protocol runs in rounds separated by a *pair interval*:

- **time alignment**: the sender emits a beacon, a short burst of packets whose inter-packet intervals follow a
  Barker code over two atomic intervals. The receiver correlates the intervals it measures against the code and stamps
  the rise of the beacon's first packet. The sender stamps the same event on its own clock;
- **timestamp transmission**: the sender transmits its stamp through the RSSI channel, either with *temporal
  modulation* (each decimal digit is carried by two packet intervals in a fixed window) or with *energy modulation*
  (bits are carried by packet presence or power level in fixed slots). Later rounds may send a 26-bit microsecond
  delta instead of the full 64-bit timestamp;
- **clock calibration**: the receiver collects the resulting synchronization pairs and fits offset and skew by
  ordinary least squares over a sliding window.

Design goals
------------

- **Bit-reproducible simulation**: time is integer nanoseconds everywhere, all randomness flows from explicit,
  seeded generators;
- **Ground truth everywhere**: every round records what was sent, what was detected and how far the receiver's
  estimate is from the sender's clock;
- Written in **Python 3 with type-hints**;
- **Built-in support for multi-core machines**: grid cells of an experiment run in parallel and are collected in a
  deterministic order;
- Units are handled with `pint`: configuration values such as ``"30 ms"`` or ``"7 s"`` are converted automatically.

"""
__version__ = "2026.1"

# Manipulation of physical quantities (with units, etc.)
# https://pint.readthedocs.io/en/latest/
from pint import UnitRegistry
ureg = UnitRegistry()
Q_ = ureg.Quantity

from .symbols import T1, T2, Erasure
from .clocks import ClockParams, JitterModel, VirtualClock, read_local, true_of_local, stamp_event, ClockException
from .channel import PacketEvent, NoiseModel, InterferenceModel, RssiTrace, PacketDetection, DetectorParams, \
    render_trace, detect_packets, intervals, emit, ChannelException
from .beacon import BeaconSpec, BarkerCode, BeaconDetection, pattern_of, autocorrelation, beacon_schedule, \
    symbolize, match_beacon, matching_rate, beacon_trial, BeaconException
from .codec import Timestamp64, TemporalParams, EnergyParams, DecodeResult, SymbolStatus, temporal_encode, \
    temporal_decode, energy_encode, energy_decode, timestamp_to_digits, digits_to_timestamp, delta_encode, \
    delta_decode, ber, CodecException, DeltaOverflowException
from .sync import SyncPair, CalibrationModel, SessionConfig, SessionLog, calibrate, estimate_global, run_session, \
    sender_round, receiver_round
