"""Clock calibration from synchronization pairs.

The receiver estimates the sender's clock as a linear function of its own::

    t_w ≈ alpha · t_z + beta

by ordinary least squares over a sliding window of the last K pairs. With a single pair (or in offset-only mode) the
estimate falls back to a pure offset taken from the latest pair.

Local times are large integers (an NTP-era sender clock is around 4e18 ns), far beyond float precision. The model is
therefore expressed around a reference pair (the latest one): ``estimate(l) = ref_w + intercept + alpha·(l - ref_z)``
where only the small residual terms are floats.

Examples:
    >>> model = CalibrationModel.from_coefficients(2.0, 0)
    >>> estimate_global(model, 10).to_ns()
    20
"""
from __future__ import annotations
from typing import Optional, Tuple
from dataclasses import dataclass, replace
import logging
import math
import numpy as _np
from ..clocks import LocalTime
from ..codec import Timestamp64

__all__ = [
    'CalibrationException',
    'CALIBRATION_MODES',
    'SyncPair',
    'CalibrationModel',
    'calibrate',
    'estimate_global',
    'estimate_ns',
]

_logger = logging.getLogger(__name__)

CALIBRATION_MODES = ('regression', 'offset')


class CalibrationException(Exception):
    """Exception raised for errors in the calibration module."""

    def __init__(self, m):
        self.message = m

    def __str__(self):
        return self.message


@dataclass(frozen=True)
class SyncPair:
    """Receiver stamp ``t_z`` and sender stamp ``t_w`` of the same beacon's first packet."""
    t_z: LocalTime
    t_w: Timestamp64

    @property
    def t_w_ns(self) -> int:
        return self.t_w.to_ns()


@dataclass(frozen=True)
class CalibrationModel:
    """Linear map from receiver local time to sender time.

    Attributes:
        window: the last pairs, oldest first
        size: window length K
        mode: 'regression' (OLS over the window) or 'offset' (latest pair only, unit slope)
        alpha: estimated d t_w / d t_z
        ref_z: receiver reference time (latest pair used by the fit)
        ref_w: sender reference time, integer nanoseconds
        intercept_ns: fitted residual offset at the reference
        fitted: True once a regression over at least two distinct pairs succeeded
    """
    window: Tuple[SyncPair, ...] = ()
    size: int = 5
    mode: str = 'regression'
    alpha: float = 1.0
    ref_z: int = 0
    ref_w: int = 0
    intercept_ns: float = 0.0
    fitted: bool = False

    def __post_init__(self):
        if self.size < 1:
            raise CalibrationException(f"the calibration window needs at least one pair (got {self.size}).")
        if self.mode not in CALIBRATION_MODES:
            raise CalibrationException(f"unknown calibration mode '{self.mode}' (expected one of "
                                       f"{CALIBRATION_MODES}).")

    @classmethod
    def from_coefficients(cls, alpha: float, beta: float) -> CalibrationModel:
        """A fitted model ``t_w = alpha · t_z + beta``."""
        ref_w = int(math.floor(beta))
        return cls(alpha=float(alpha), ref_z=0, ref_w=ref_w, intercept_ns=float(beta - ref_w), fitted=True)

    @property
    def usable(self) -> bool:
        return self.fitted or len(self.window) > 0

    @property
    def beta(self) -> float:
        """Intercept of the map at ``t_z = 0`` (float, for reporting only)."""
        return self.ref_w + self.intercept_ns - self.alpha * self.ref_z


def _offset_model(model: CalibrationModel, window: Tuple[SyncPair, ...]) -> CalibrationModel:
    latest = window[-1]
    return replace(model, window=window, alpha=1.0, ref_z=latest.t_z, ref_w=latest.t_w_ns, intercept_ns=0.0,
                   fitted=False)


def calibrate(model: CalibrationModel, pair: SyncPair) -> CalibrationModel:
    """Push a pair into the window and refit.

    The window keeps the last ``model.size`` pairs. With two or more distinct receiver stamps, regression mode fits
    t_w on t_z by ordinary least squares; when all stamps are identical (or the slope comes out non-positive) the fit
    is refused and the previous estimate is kept.
    """
    window = (model.window + (pair,))[-model.size:]
    if model.mode == 'offset' or len(window) == 1:
        return _offset_model(model, window)

    ref_z, ref_w = window[-1].t_z, window[-1].t_w_ns
    z = _np.array([p.t_z - ref_z for p in window], dtype=float)
    w = _np.array([p.t_w_ns - ref_w for p in window], dtype=float)
    z_mean, w_mean = z.mean(), w.mean()
    sxx = float(((z - z_mean) ** 2).sum())
    if sxx == 0.0:
        _logger.warning(f"Refusing to fit {len(window)} pairs with identical receiver stamps; keeping the previous "
                        f"estimate.")
        return replace(model, window=window)
    alpha = float(((z - z_mean) * (w - w_mean)).sum() / sxx)
    if not alpha > 0:
        _logger.warning(f"Refusing a non-positive slope ({alpha}); keeping the previous estimate.")
        return replace(model, window=window)
    return replace(model,
                   window=window,
                   alpha=alpha,
                   ref_z=ref_z,
                   ref_w=ref_w,
                   intercept_ns=float(w_mean - alpha * z_mean),
                   fitted=True)


def estimate_ns(model: CalibrationModel, local: LocalTime) -> int:
    """Estimated sender time, in integer nanoseconds, at a receiver local time."""
    if not model.usable:
        raise CalibrationException("the calibration model has no pair yet.")
    return model.ref_w + round(model.intercept_ns + model.alpha * (local - model.ref_z))


def estimate_global(model: CalibrationModel, local: LocalTime) -> Timestamp64:
    """Estimated sender timestamp at a receiver local time.

    Raises:
        CalibrationException when the model is unusable (neither fitted nor holding a pair).
    """
    return Timestamp64.from_ns(estimate_ns(model, local))
