"""Type system for interval symbols.

A beacon is a sequence of packet intervals, each one being either the first atomic interval (``T1``, worth +1 in
correlations) or the second one (``T2``, worth -1). An interval matching neither is an ``Erasure`` and is worth 0.

Examples:
    The conversion to numeric types can be used directly in numerical expressions:

    >>> int(T1) * 3
    3
    >>> [T1, T2, Erasure] == [1, -1, 0]
    True
    >>> str(T2)
    't2'

    One major use case consists in type-hinting functions:

    >>> def foo(symbol: SymbolType = T1): pass

"""
__all__ = ['SymbolType', 'Symbol', 'T1', 'T2', 'Erasure', 'symbol_of']


class SymbolType(type):
    """Metaclass to construct interval symbol types. Supports conversion to float and int."""
    def __float__(cls):
        return float(cls.S)

    def __int__(cls):
        return cls.S

    def __str__(cls):
        return cls.LABEL

    def __repr__(cls):
        return cls.__name__

    def __eq__(cls, other):
        if isinstance(other, SymbolType):
            return cls.S == other.S
        return cls.S == other

    def __hash__(cls):
        return hash(cls.S)


class Symbol(metaclass=SymbolType):
    """Base class to build interval symbols."""
    S = 0
    LABEL = '?'


class T1(Symbol):
    """First atomic interval."""
    S = 1
    LABEL = 't1'


class T2(Symbol):
    """Second atomic interval."""
    S = -1
    LABEL = 't2'


class Erasure(Symbol):
    """Interval matching neither atomic interval."""
    S = 0
    LABEL = '?'


def symbol_of(value: int) -> SymbolType:
    """Symbol type of a numeric code value (+1, -1 or 0).

    >>> symbol_of(-1)
    T2
    """
    return {1: T1, -1: T2}.get(int(value), Erasure)
