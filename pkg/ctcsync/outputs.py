"""CSV readers and writers.

All files are written with a fixed float format and a fixed column order, so that identical runs produce
byte-identical files. The column schema is documented in ``docs/results.rst``.
"""
from typing import List, Optional
import logging
import os
import pandas as _pd

__all__ = [
    'FLOAT_FORMAT',
    'TRACE_COLUMNS',
    'ERROR_SERIES_COLUMNS',
    'ROUND_COLUMNS',
    'RESULT_COLUMNS',
    'write_frame',
    'read_frame',
    'sibling_path',
]

_logger = logging.getLogger(__name__)

FLOAT_FORMAT: str = '%.9g'
"""Float format of every CSV file written by the library."""

TRACE_COLUMNS: List[str] = ['sample_index', 'dbm']
"""Columns of an exported RSSI trace."""

ERROR_SERIES_COLUMNS: List[str] = ['session_id',
                                   't_ns',
                                   'since_first_pair_ns',
                                   'since_last_pair_ns',
                                   'phase',
                                   'error_ns',
                                   ]
"""Columns of a session's error series (one row per sample)."""

ROUND_COLUMNS: List[str] = ['session_id',
                            'round_index',
                            'payload_kind',
                            'pair_source',
                            'sender_fallback',
                            'emission_true_ns',
                            'beacon_detected',
                            'beacon_correct',
                            'alignment_error_ns',
                            'status',
                            'pair_accepted',
                            't_z',
                            't_w',
                            'available_ns',
                            ]
"""Columns of a session's round log (one row per round)."""

RESULT_COLUMNS: List[str] = ['kind', 'cell', 'metric', 'value', 'ci_halfwidth', 'trials']
"""Fixed columns of a result table; the grid parameters are inserted after 'cell'."""


def write_frame(frame: _pd.DataFrame, path: str, header: Optional[str] = None):
    """Write a data frame as CSV with the library's fixed float format.

    Args:
        frame: the data to write
        path: destination file; parent directories are created
        header: optional comment line written first (prefixed with '# ')
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', newline='') as f:
        if header is not None:
            f.write(f"# {header}\n")
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT)
    _logger.info(f"Wrote {len(frame)} rows to {path}.")


def read_frame(path: str) -> _pd.DataFrame:
    """Read a CSV file written by `write_frame` (comment lines are skipped)."""
    return _pd.read_csv(path, comment='#')


def sibling_path(path: str, suffix: str) -> str:
    """Path of a companion file: ``out/table.csv`` with suffix 'series' gives ``out/table_series.csv``.

    >>> sibling_path('out/table.csv', 'series')
    'out/table_series.csv'
    """
    stem, ext = os.path.splitext(path)
    return f"{stem}_{suffix}{ext or '.csv'}"
