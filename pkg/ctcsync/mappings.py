"""Parametric grids of experiment cells.

A grid maps dotted configuration keys to lists of values. Independent axes are crossed; axes listed together in the
same mapping are *coupled* and advance in lockstep.
"""
from __future__ import annotations
from typing import Any, Mapping, List, Union, Sequence, Tuple
from dataclasses import dataclass, field
import itertools

__all__ = [
    'MappingException',
    'ParametricMapping',
]

ParametersMappingType = Mapping[str, Sequence[Any]]
"""Type alias for a parametric mapping of string keys and values."""

ParametersMappingListType = List[ParametersMappingType]
"""Type alias for a list of parametric mappings."""

MappedParametersType = Mapping[str, Any]
"""Type alias for a dictionnary of parametric keys and values (one grid cell)."""

MappedParametersListType = List[MappedParametersType]
"""Type alias for a list of mapped parameters."""

flatten = itertools.chain.from_iterable
"""Helper function to flatten an iterable."""


class MappingException(Exception):
    """Exception raised for errors in the mappings module."""

    def __init__(self, m):
        self.message = m

    def __str__(self):
        return self.message


@dataclass
class ParametricMapping:
    """Abstraction for multi-dimensional parametric mappings.

    Main feature is to compute the complete "cross product" of the different parameters. A plain dictionary gives one
    independent axis per key; a list of dictionaries crosses the dictionaries and couples the keys inside each one.

    Examples:
        >>> ParametricMapping({'beacon.length': [3, 4], 'noise': ['low']}).combinations
        [{'beacon.length': 3, 'noise': 'low'}, {'beacon.length': 4, 'noise': 'low'}]
        >>> pm = ParametricMapping([{'beacon.t1_ns': [30, 20], 'beacon.t2_ns': [70, 60]}, {'rounds': [1, 5]}])
        >>> len(pm)
        4
        >>> pm.combinations[1]
        {'beacon.t1_ns': 30, 'beacon.t2_ns': 70, 'rounds': 5}
    """
    mappings: Union[ParametersMappingType, ParametersMappingListType] = field(default_factory=lambda: [{}])

    def __post_init__(self):
        if isinstance(self.mappings, Mapping):
            self.mappings = [{k: v} for k, v in self.mappings.items()]
        self.mappings = [{k: list(v) if isinstance(v, (list, tuple)) else [v] for k, v in m.items()}
                         for m in self.mappings]
        for m in self.mappings:
            lengths = {len(v) for v in m.values()}
            if len(lengths) > 1:
                raise MappingException(f"coupled axes {list(m.keys())} have different lengths {sorted(lengths)}.")
            if 0 in lengths:
                raise MappingException(f"empty axis in {list(m.keys())}.")
        labels = self.labels
        if len(set(labels)) != len(labels):
            raise MappingException(f"duplicated keys in the grid: {labels}.")

    @property
    def labels(self) -> Tuple[str, ...]:
        """List of labels of the parametric mapping."""
        return tuple(flatten(self.mappings))

    @property
    def pools(self) -> List[List[Tuple[Any, ...]]]:
        """Lockstep value tuples of each group of coupled axes."""
        return [list(map(tuple, zip(*arg.values()))) for arg in self.mappings]

    @property
    def combinations(self) -> MappedParametersListType:
        """Cartesian product adapted to work with dictionaries, roughly similar to `itertools.product`.

        Returns:
            a list of the cartesian product of the mappings, the last axis varying fastest.
        """
        pool_values = [flatten(term) for term in itertools.product(*self.pools)]
        return [dict(zip(self.labels, v)) for v in pool_values] or [{}]

    def __len__(self) -> int:
        return len(self.combinations)
