"""Virtual per-node clocks.

The simulator keeps a single ground-truth time axis (*true time*, integer nanoseconds since the simulation epoch).
Every node reads its own *local time* through a linear clock model::

    local(t) = offset_ns + round(skew * (t - anchor))

where ``skew`` is the rate ratio (local ticks per true tick). Rounding is half to even, so that readings are
bit-reproducible for a given set of parameters.

Timestamping is not instantaneous: a node records an event some time after it happened. This latency is modelled by a
`JitterModel`, a normal (or uniform) distribution truncated at zero by resampling negative draws.

Examples:
    >>> clock = ClockParams(offset_ns=123_000_000)
    >>> read_local(clock, 0)
    123000000
    >>> true_of_local(ClockParams(skew=2.0), 10)
    5
"""
from __future__ import annotations
from typing import Optional, Union
from dataclasses import dataclass, field
import logging
import numpy as _np
from scipy.stats import truncnorm as _truncnorm

__all__ = [
    'TrueTime',
    'LocalTime',
    'ClockException',
    'ClockParams',
    'JitterModel',
    'VirtualClock',
    'read_local',
    'true_of_local',
    'stamp_event',
]

_logger = logging.getLogger(__name__)

TrueTime = int
"""Integer nanoseconds on the simulator's ground-truth axis."""

LocalTime = int
"""Integer nanoseconds as read on a node's own clock."""

JITTER_FAMILIES = ('normal', 'uniform')


class ClockException(Exception):
    """Exception raised for errors in the clocks module."""

    def __init__(self, m):
        self.message = m

    def __str__(self):
        return self.message


@dataclass(frozen=True)
class ClockParams:
    """Linear clock model of one node.

    Attributes:
        offset_ns: local reading at the anchor time
        skew: rate ratio, local ticks per true tick (strictly positive)
        anchor: true time at which the local reading equals the offset
    """
    offset_ns: int = 0
    skew: float = 1.0
    anchor: TrueTime = 0

    def __post_init__(self):
        if not self.skew > 0:
            raise ClockException(f"clock skew must be strictly positive (got {self.skew}).")


@dataclass(frozen=True)
class JitterModel:
    """Timestamping or emission latency, truncated at zero.

    Negative draws are resampled, so a stamp never precedes the event it records. With ``mean_ns == stddev_ns == 0``
    the model is the identity.

    Attributes:
        mean_ns: mean of the underlying (untruncated) distribution
        stddev_ns: standard deviation of the underlying distribution
        seed: seed of the generator returned by `generator`
        family: 'normal' (default) or 'uniform' (flat over mean ± sqrt(3)·stddev)
    """
    mean_ns: int = 0
    stddev_ns: int = 0
    seed: int = 0
    family: str = 'normal'
    _rng: _np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.mean_ns < 0 or self.stddev_ns < 0:
            raise ClockException(f"jitter mean and standard deviation must be non-negative "
                                 f"(got {self.mean_ns}, {self.stddev_ns}).")
        if self.family not in JITTER_FAMILIES:
            raise ClockException(f"unknown jitter family '{self.family}' (expected one of {JITTER_FAMILIES}).")
        object.__setattr__(self, '_rng', self.generator())

    @property
    def is_identity(self) -> bool:
        return self.mean_ns == 0 and self.stddev_ns == 0

    def generator(self) -> _np.random.Generator:
        """A fresh generator seeded with the model's seed."""
        return _np.random.default_rng(self.seed)

    def sample(self, rng: Optional[_np.random.Generator] = None, size: Optional[int] = None) -> Union[int, _np.ndarray]:
        """Draw jitter values.

        Args:
            rng: the generator to draw from (defaults to the model's own stream, seeded once with ``seed``)
            size: number of draws; a single integer is returned when None

        Returns:
            integer nanoseconds, all non-negative.
        """
        n = 1 if size is None else size
        if self.stddev_ns == 0:
            draws = _np.full(n, self.mean_ns, dtype=_np.int64)
        else:
            rng = rng if rng is not None else self._rng
            values = self._draw(rng, n)
            negative = values < 0
            while negative.any():
                values[negative] = self._draw(rng, int(negative.sum()))
                negative = values < 0
            draws = _np.rint(values).astype(_np.int64)
        if size is None:
            return int(draws[0])
        return draws

    def _draw(self, rng: _np.random.Generator, n: int) -> _np.ndarray:
        if self.family == 'uniform':
            half_width = _np.sqrt(3.0) * self.stddev_ns
            return rng.uniform(self.mean_ns - half_width, self.mean_ns + half_width, n)
        return rng.normal(self.mean_ns, self.stddev_ns, n)

    def expected_ns(self) -> float:
        """Mean of the truncated distribution.

        >>> JitterModel(400_000, 0).expected_ns()
        400000.0
        >>> round(JitterModel(0, 1_000).expected_ns())  # half-normal: sigma * sqrt(2 / pi)
        798
        """
        if self.stddev_ns == 0:
            return float(self.mean_ns)
        if self.family == 'uniform':
            half_width = _np.sqrt(3.0) * self.stddev_ns
            low = max(self.mean_ns - half_width, 0.0)
            return float((low + self.mean_ns + half_width) / 2)
        a = (0.0 - self.mean_ns) / self.stddev_ns
        return float(_truncnorm.mean(a, _np.inf, loc=self.mean_ns, scale=self.stddev_ns))


def read_local(clock: ClockParams, t: TrueTime) -> LocalTime:
    """Local reading of a clock at a given true time.

    The clock extrapolates both ways from its anchor.

    >>> read_local(ClockParams(skew=1.0001), 10 ** 12)
    1000100000000
    """
    return clock.offset_ns + round(clock.skew * (t - clock.anchor))


def true_of_local(clock: ClockParams, l: LocalTime) -> TrueTime:
    """True time at which a clock reads a given local value.

    Inverse of `read_local` up to rounding: ``read_local(clock, true_of_local(clock, l))`` is within one nanosecond of
    ``l`` for skews up to 2 (larger skews skip local ticks and the bound becomes ``skew / 2``).
    """
    return clock.anchor + round((l - clock.offset_ns) / clock.skew)


def stamp_event(clock: ClockParams,
                jitter: JitterModel,
                t: TrueTime,
                rng: Optional[_np.random.Generator] = None) -> LocalTime:
    """Local timestamp a node records for an event happening at true time ``t``.

    Args:
        clock: the node's clock
        jitter: timestamping latency model
        t: true time of the event
        rng: generator for the latency draw (defaults to the jitter model's own seeded generator)

    Returns:
        ``read_local(clock, t + j)`` for a fresh latency sample ``j``.
    """
    return read_local(clock, t + jitter.sample(rng))


@dataclass
class VirtualClock:
    """A node clock bundled with its timestamping latency and random stream."""
    params: ClockParams = field(default_factory=ClockParams)
    jitter: JitterModel = field(default_factory=JitterModel)
    rng: Optional[_np.random.Generator] = None

    def __post_init__(self):
        if self.rng is None:
            self.rng = self.jitter.generator()

    def read(self, t: TrueTime) -> LocalTime:
        return read_local(self.params, t)

    def true_of(self, l: LocalTime) -> TrueTime:
        return true_of_local(self.params, l)

    def stamp(self, t: TrueTime) -> LocalTime:
        return stamp_event(self.params, self.jitter, t, self.rng)
