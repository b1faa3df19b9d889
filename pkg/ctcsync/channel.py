"""RSSI channel: from a true-time packet schedule to the sample stream a receiver observes, and back to packet rises.

Rendering point-samples the channel every ``sample_period_ns``: the power of each sample is the sum, in milliwatts, of
the noise floor, of every scheduled packet active at that instant and of every interference packet, converted back to
dBm and perturbed by a Gaussian term of ``sigma_db``. Packets are summed in a canonical order, so that the rendered
trace does not depend on the order of the schedule.

Detection follows the receiver's view of the channel: it tracks the average RSSI with an exponential moving average
and reports a packet whenever enough consecutive samples stand above that baseline by a margin. The baseline is
frozen while samples are high, so a long packet does not inflate it.

Examples:
    >>> dbm_sum(-40.0, -40.0) - (-40.0)  # doctest: +ELLIPSIS
    3.0102...
"""
from __future__ import annotations
from typing import Iterable, List, Optional, Sequence, Tuple, Union
from dataclasses import dataclass, field, replace
import logging
import numpy as _np
import pandas as _pd
import numba as _nb
from .constants import DEFAULT_SAMPLE_PERIOD_NS, DEFAULT_NOISE_FLOOR_DBM, NS_PER_S
from .clocks import JitterModel, TrueTime
from .outputs import TRACE_COLUMNS, write_frame

__all__ = [
    'ChannelException',
    'PacketEvent',
    'NoiseModel',
    'InterferenceModel',
    'RssiTrace',
    'PacketDetection',
    'DetectorParams',
    'dbm_sum',
    'emit',
    'render_trace',
    'detect_packets',
    'debounce',
    'intervals',
]

_logger = logging.getLogger(__name__)

Range = Union[int, float, Tuple[float, float]]
"""A fixed value or a (low, high) range drawn uniformly."""


class ChannelException(Exception):
    """Exception raised for errors in the channel module."""

    def __init__(self, m):
        self.message = m

    def __str__(self):
        return self.message


def _mw(dbm):
    return 10.0 ** (_np.asarray(dbm, dtype=float) / 10.0)


def _dbm(mw):
    return 10.0 * _np.log10(mw)


def dbm_sum(*powers_dbm: float) -> float:
    """Power, in dBm, of the sum in milliwatts of several signals given in dBm."""
    return float(_dbm(_np.sum(_mw(powers_dbm))))


@dataclass(frozen=True)
class PacketEvent:
    """One packet on the air, in true time."""
    start: TrueTime
    duration_ns: int
    power_dbm: float

    def __post_init__(self):
        if self.duration_ns <= 0:
            raise ChannelException(f"packet duration must be strictly positive (got {self.duration_ns}).")

    @property
    def end(self) -> TrueTime:
        return self.start + self.duration_ns


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian perturbation, in dB, around a constant noise floor."""
    floor_dbm: float = DEFAULT_NOISE_FLOOR_DBM
    sigma_db: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_db < 0:
            raise ChannelException(f"noise sigma must be non-negative (got {self.sigma_db}).")


def _draw(value: Range, rng: _np.random.Generator) -> float:
    if isinstance(value, (tuple, list)):
        low, high = value
        return float(rng.uniform(low, high))
    return float(value)


@dataclass(frozen=True)
class InterferenceModel:
    """Foreign packets arriving as a Poisson process.

    Durations and powers are either fixed or drawn uniformly within a (low, high) range.
    """
    mean_rate_hz: float = 0.0
    duration_ns: Range = (500_000, 2_500_000)
    power_dbm: Range = (-70.0, -45.0)
    seed: int = 0

    def __post_init__(self):
        if self.mean_rate_hz < 0:
            raise ChannelException(f"interference rate must be non-negative (got {self.mean_rate_hz}).")
        for name in ('duration_ns', 'power_dbm'):
            value = getattr(self, name)
            if isinstance(value, list):
                object.__setattr__(self, name, tuple(value))

    def events(self, span: Tuple[TrueTime, TrueTime], rng: Optional[_np.random.Generator] = None) -> List[PacketEvent]:
        """Interference packets starting within a span of true time."""
        if self.mean_rate_hz == 0:
            return []
        rng = rng if rng is not None else _np.random.default_rng(self.seed)
        mean_gap_ns = NS_PER_S / self.mean_rate_hz
        events = []
        t = float(span[0])
        while True:
            t += rng.exponential(mean_gap_ns)
            if t >= span[1]:
                break
            duration = max(1, int(round(_draw(self.duration_ns, rng))))
            events.append(PacketEvent(int(t), duration, _draw(self.power_dbm, rng)))
        return events


@dataclass(eq=False)
class RssiTrace:
    """Sampled RSSI, in dBm. Sample ``i`` is taken at true time ``start + i * sample_period_ns``."""
    start: TrueTime
    sample_period_ns: int
    samples: _np.ndarray = field(default_factory=lambda: _np.empty(0))

    def __post_init__(self):
        if self.sample_period_ns <= 0:
            raise ChannelException(f"sample period must be strictly positive (got {self.sample_period_ns}).")
        self.samples = _np.asarray(self.samples, dtype=float)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def end(self) -> TrueTime:
        """True time just after the last sample period."""
        return self.start + len(self) * self.sample_period_ns

    @property
    def times(self) -> _np.ndarray:
        return self.start + _np.arange(len(self), dtype=_np.int64) * self.sample_period_ns

    def time_of(self, index: int) -> TrueTime:
        return self.start + int(index) * self.sample_period_ns

    def index_of(self, t: TrueTime) -> int:
        """Index of the first sample taken at or after ``t``."""
        return -((self.start - t) // self.sample_period_ns)

    def to_frame(self) -> _pd.DataFrame:
        return _pd.DataFrame({
            TRACE_COLUMNS[0]: _np.arange(len(self)),
            TRACE_COLUMNS[1]: self.samples,
        })

    def to_csv(self, path: str):
        """Export as CSV (columns ``sample_index, dbm``); start and period go in a leading comment line."""
        write_frame(self.to_frame(), path, header=f"start_ns={self.start},sample_period_ns={self.sample_period_ns}")

    @classmethod
    def from_csv(cls, path: str) -> RssiTrace:
        """Import a trace written by `to_csv`."""
        with open(path) as f:
            first = f.readline()
        if not first.startswith('#'):
            raise ChannelException(f"{path}: missing '# start_ns=...,sample_period_ns=...' header line.")
        try:
            meta = dict(item.split('=') for item in first.lstrip('#').strip().split(','))
            start = int(meta['start_ns'])
            period = int(meta['sample_period_ns'])
        except (KeyError, ValueError):
            raise ChannelException(f"{path}: malformed header line '{first.strip()}'.")
        frame = _pd.read_csv(path, comment='#')
        if list(frame.columns) != TRACE_COLUMNS:
            raise ChannelException(f"{path}: expected columns {TRACE_COLUMNS}, got {list(frame.columns)}.")
        return cls(start=start, sample_period_ns=period, samples=frame[TRACE_COLUMNS[1]].values)


@dataclass(frozen=True)
class PacketDetection:
    """A packet rise recovered from a trace."""
    rise_sample_index: int
    rise_true_time: TrueTime
    mean_power_dbm: float
    length_samples: int = 0


@dataclass(frozen=True)
class DetectorParams:
    """Receiver-side sampling and detection settings."""
    sample_period_ns: int = DEFAULT_SAMPLE_PERIOD_NS
    margin_db: float = 10.0
    min_high_samples: int = 3
    ema_alpha: float = 0.01
    interpolate: bool = False

    def __post_init__(self):
        if self.sample_period_ns <= 0:
            raise ChannelException(f"sample period must be strictly positive (got {self.sample_period_ns}).")
        if not self.margin_db > 0:
            raise ChannelException(f"detection margin must be strictly positive (got {self.margin_db}).")
        if self.min_high_samples < 1:
            raise ChannelException(f"min_high_samples must be at least 1 (got {self.min_high_samples}).")
        if not 0 < self.ema_alpha <= 1:
            raise ChannelException(f"EMA coefficient must be in (0, 1] (got {self.ema_alpha}).")


def emit(schedule: Sequence[PacketEvent],
         jitter: JitterModel,
         rng: Optional[_np.random.Generator] = None,
         chained: bool = True) -> List[PacketEvent]:
    """Apply the sender's emission latency to a nominal schedule.

    Interval-coded bursts are paced by relative waits: each packet is sent a fixed gap after the previous one was
    actually sent, so every delay also pushes all later packets (``chained=True``) and measured intervals exceed the
    nominal ones by the latency. Slot-coded bursts are paced by absolute deadlines (``chained=False``).
    """
    if not schedule or jitter.is_identity:
        return list(schedule)
    draws = jitter.sample(rng, size=len(schedule))
    shifts = _np.cumsum(draws) if chained else draws
    return [replace(e, start=e.start + int(s)) for e, s in zip(schedule, shifts)]


def render_trace(schedule: Iterable[PacketEvent],
                 noise: NoiseModel,
                 interference: InterferenceModel,
                 sample_period_ns: int,
                 span: Tuple[TrueTime, TrueTime],
                 rng: Optional[_np.random.Generator] = None,
                 interference_rng: Optional[_np.random.Generator] = None) -> RssiTrace:
    """Render the RSSI samples a receiver observes over a span of true time.

    Args:
        schedule: packets on the air; they may overlap the span partially
        noise: noise floor and Gaussian perturbation
        interference: foreign traffic model
        sample_period_ns: sampling period of the receiver
        span: [start, stop) in true time
        rng: generator for the noise perturbation (defaults to the noise model's seed)
        interference_rng: generator for the interference arrivals (defaults to the interference model's seed)

    Returns:
        the rendered trace, with ``ceil((stop - start) / sample_period_ns)`` samples.
    """
    start, stop = span
    if stop <= start:
        raise ChannelException(f"cannot render an empty span [{start}, {stop}).")
    if sample_period_ns <= 0:
        raise ChannelException(f"sample period must be strictly positive (got {sample_period_ns}).")
    n = -((start - stop) // sample_period_ns)
    times = start + _np.arange(n, dtype=_np.int64) * sample_period_ns
    power_mw = _np.full(n, float(_mw(noise.floor_dbm)))

    events = list(schedule) + interference.events(span, interference_rng)
    for e in sorted(events, key=lambda e: (e.start, e.duration_ns, e.power_dbm)):
        if e.end <= start or e.start >= stop:
            continue
        i0, i1 = _np.searchsorted(times, [e.start, e.end], side='left')
        power_mw[i0:i1] += float(_mw(e.power_dbm))

    samples = _dbm(power_mw)
    if noise.sigma_db > 0:
        rng = rng if rng is not None else _np.random.default_rng(noise.seed)
        samples = samples + rng.normal(0.0, noise.sigma_db, n)
    return RssiTrace(start=start, sample_period_ns=sample_period_ns, samples=samples)


@_nb.njit(nogil=True)
def _detect_runs(samples, baseline, margin_db, min_high_samples, ema_alpha):
    n = samples.shape[0]
    starts = _np.empty(n, dtype=_np.int64)
    stops = _np.empty(n, dtype=_np.int64)
    count = 0
    i = 0
    while i < n:
        threshold = baseline + margin_db
        if samples[i] > threshold:
            j = i
            while j < n and samples[j] > threshold:
                j += 1
            if j - i >= min_high_samples:
                starts[count] = i
                stops[count] = j
                count += 1
            i = j
        else:
            baseline = (1.0 - ema_alpha) * baseline + ema_alpha * samples[i]
            i += 1
    return starts[:count], stops[:count]


def detect_packets(trace: RssiTrace,
                   margin_db: float = 10.0,
                   min_high_samples: int = 3,
                   ema_alpha: float = 0.01,
                   interpolate: bool = False,
                   baseline_dbm: Optional[float] = None) -> List[PacketDetection]:
    """Recover packet rises from an RSSI trace.

    A detection begins at the first sample exceeding the running baseline by ``margin_db`` and followed by at least
    ``min_high_samples - 1`` further high samples.

    Args:
        trace: the RSSI trace
        margin_db: margin above the baseline
        min_high_samples: minimum run length, rejects isolated noise spikes
        ema_alpha: coefficient of the baseline moving average, updated on non-high samples only
        interpolate: report the rise half a sample period earlier (midpoint between the last low and the first high
            sample), which removes the mean quantization bias
        baseline_dbm: initial baseline; defaults to the 10th percentile of the trace

    Returns:
        the detections, in increasing sample order.
    """
    if margin_db <= 0:
        raise ChannelException(f"detection margin must be strictly positive (got {margin_db}).")
    if min_high_samples < 1:
        raise ChannelException(f"min_high_samples must be at least 1 (got {min_high_samples}).")
    if not 0 < ema_alpha <= 1:
        raise ChannelException(f"EMA coefficient must be in (0, 1] (got {ema_alpha}).")
    if len(trace) == 0:
        return []
    samples = trace.samples
    if baseline_dbm is None:
        baseline_dbm = float(_np.percentile(samples, 10))
    starts, stops = _detect_runs(samples, float(baseline_dbm), float(margin_db), int(min_high_samples),
                                 float(ema_alpha))
    half_period = trace.sample_period_ns // 2
    detections = []
    for i, j in zip(starts, stops):
        rise = trace.time_of(i)
        if interpolate and i > 0:
            rise -= half_period
        detections.append(PacketDetection(rise_sample_index=int(i),
                                          rise_true_time=rise,
                                          mean_power_dbm=float(samples[i:j].mean()),
                                          length_samples=int(j - i)))
    _logger.debug(f"Detected {len(detections)} packets in {len(trace)} samples (baseline {baseline_dbm:.2f} dBm).")
    return detections


def _rise(d: Union[PacketDetection, int]) -> TrueTime:
    return d.rise_true_time if isinstance(d, PacketDetection) else int(d)


def debounce(detections: Sequence[Union[PacketDetection, int]], min_gap_ns: int) -> list:
    """Drop rises closer than ``min_gap_ns`` to the previously kept one (fragments of one packet)."""
    kept = []
    for d in detections:
        if kept and _rise(d) - _rise(kept[-1]) < min_gap_ns:
            continue
        kept.append(d)
    return kept


def intervals(detections: Sequence[Union[PacketDetection, int]]) -> List[int]:
    """Consecutive rise-to-rise differences, in nanoseconds.

    >>> intervals([0, 30_000_000, 100_000_000])
    [30000000, 70000000]
    >>> intervals([5])
    []
    """
    rises = [_rise(d) for d in detections]
    return [b - a for a, b in zip(rises[:-1], rises[1:])]
