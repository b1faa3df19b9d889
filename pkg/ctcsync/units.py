"""Conversion of configuration quantities into the integer and float magnitudes used by the simulator.

Every converter accepts a `pint` quantity, a string parsed as a quantity, or a plain number which is taken to be
already expressed in the target unit.

Examples:
    >>> _ns('30 ms')
    30000000
    >>> _ns(1500)
    1500
    >>> _ms(_ureg.Quantity(7, 's'))
    7000.0
"""
from typing import Union, Callable
from functools import wraps
from numbers import Number
from . import ureg as _ureg
from . import Q_ as _Q

QuantityLike = Union[str, _Q, int, float]
"""Type alias for anything the converters accept."""


class UnitsException(Exception):
    """Exception raised for errors in the units module."""

    def __init__(self, m):
        self.message = m

    def __str__(self):
        return self.message


def parse_quantity(f: Callable):
    """Decorator to convert argument 'q' from a string to a quantity."""
    @wraps(f)
    def parse_arg(q: QuantityLike):
        """Converts string to a Pint quantity."""
        if isinstance(q, str):
            try:
                q = _Q(q)
            except Exception as e:
                raise UnitsException(f"cannot parse quantity '{q}' ({e})")
        return f(q)
    return parse_arg


def _magnitude(q: Union[_Q, Number], unit: str) -> float:
    if isinstance(q, _Q):
        try:
            return float(q.to(unit).magnitude)
        except Exception as e:
            raise UnitsException(f"cannot convert '{q}' to {unit} ({e})")
    if isinstance(q, bool) or not isinstance(q, Number):
        raise UnitsException(f"expected a quantity or a number, got {q!r}")
    return float(q)


@parse_quantity
def _ns(q: QuantityLike) -> int:
    """
    Convert a quantity of dimension [TIME] to integer nanoseconds.

    >>> _ns('2.5 us')
    2500

    :param q: the quantity of dimension [TIME]
    :return: the magnitude in nanoseconds, rounded half to even.
    """
    if isinstance(q, int) and not isinstance(q, bool):
        return q
    return int(round(_magnitude(q, 'ns')))


@parse_quantity
def _ms(q: QuantityLike) -> float:
    """
    Convert a quantity of dimension [TIME] to milliseconds.

    >>> _ms('1 s')
    1000.0
    """
    return _magnitude(q, 'ms')


@parse_quantity
def _s(q: QuantityLike) -> float:
    """
    Convert a quantity of dimension [TIME] to seconds.

    >>> _s('2 minute')
    120.0
    """
    return _magnitude(q, 's')


@parse_quantity
def _hz(q: QuantityLike) -> float:
    """
    Convert a quantity of dimension [1/TIME] to hertz.

    >>> _hz('6 kHz')
    6000.0
    """
    return _magnitude(q, 'Hz')
