"""Seeded experiment runners.

Every command expands a parameter grid into cells, runs a number of seeded trials per cell and reduces them to one row
per (cell, metric) with a 95 % confidence half-width. Trial ``i`` of every cell uses the random streams of session
``i`` (common random numbers), so that differences between cells are not blurred by sampling noise; set
``common_random_numbers: false`` to give every cell its own streams.

Cells run in parallel on a `Runner` and are collected in grid order: the output only depends on the configuration
and the seed.
"""
from __future__ import annotations
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence
from dataclasses import dataclass, field, replace
import logging
import math
import numpy as _np
import pandas as _pd
from scipy import stats as _stats
from lmfit.models import LinearModel as _LinearModel
from ..constants import NS_PER_MS, NS_PER_S
from ..units import _ns
from ..channel import emit, render_trace, detect_packets
from ..beacon import beacon_trial
from ..codec import temporal_encode, temporal_decode_rises, energy_encode, energy_decode, ber
from ..mappings import ParametricMapping, MappingException
from ..outputs import RESULT_COLUMNS, write_frame, sibling_path
from ..runner import Runner
from ..sync import SessionConfig, RngStreams, run_session
from .config import HarnessException, ConfigException, apply_overrides, load_presets, merge, read_config_file, \
    session_config

__all__ = [
    'KINDS',
    'ExperimentSpec',
    'ResultTable',
    'ci_halfwidth',
    'drift_rate',
    'COMMANDS',
    'experiment_spec',
    'load_experiment',
    'run_experiment',
    'cmd_beacon_match',
    'cmd_ber_temporal',
    'cmd_ber_energy',
    'cmd_sync_error',
    'cmd_sweep',
]

_logger = logging.getLogger(__name__)

KINDS = ('beacon-match', 'ber-temporal', 'ber-energy', 'sync-error', 'sweep')

PAYLOAD_LEAD_NS = 50 * NS_PER_MS
"""Silence rendered before and after a payload in the modulation experiments."""


@dataclass
class ExperimentSpec:
    """One experiment: a kind, a grid of cells and a number of seeded trials per cell.

    Attributes:
        kind: one of `KINDS`
        grid: parameter grid; keys are dotted `SessionConfig` paths, plus ``noise`` for a named noise level
        trials: trials per cell
        seed: root seed
        out: output CSV path (None: no file)
        base: configuration every cell starts from
        noise_levels: noise presets, name to sigma in dB
        n_procs: number of cells run in parallel (None: one per core)
        common_random_numbers: reuse the same random streams for trial ``i`` of every cell
        options: command-specific settings
    """
    kind: str
    grid: ParametricMapping = field(default_factory=ParametricMapping)
    trials: int = 1
    seed: int = 0
    out: Optional[str] = None
    base: SessionConfig = field(default_factory=SessionConfig)
    noise_levels: Dict[str, float] = field(default_factory=dict)
    n_procs: Optional[int] = None
    common_random_numbers: bool = True
    options: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigException(f"kind: unknown experiment '{self.kind}' (expected one of {KINDS}).")
        if not isinstance(self.grid, ParametricMapping):
            try:
                self.grid = ParametricMapping(self.grid)
            except MappingException as e:
                raise ConfigException(f"grid: {e.message}")
        if len(self.grid) < 1:
            raise ConfigException("grid: the grid has no cell.")
        if self.trials < 1:
            raise ConfigException(f"trials: at least one trial per cell is needed (got {self.trials}).")
        if self.seed < 0:
            raise ConfigException(f"seed: must be non-negative (got {self.seed}).")
        if self.n_procs is not None and self.n_procs < 1:
            raise ConfigException(f"n_procs: must be at least 1 (got {self.n_procs}).")
        if not self.noise_levels:
            self.noise_levels = dict(load_presets().get('noise_levels', {}))

    @property
    def cells(self) -> List[Dict[str, Any]]:
        return self.grid.combinations

    def session_id(self, cell_index: int, trial: int) -> int:
        return trial if self.common_random_numbers else cell_index * self.trials + trial

    def cell_config(self, cell: Mapping[str, Any]) -> SessionConfig:
        return apply_overrides(self.base, cell, self.noise_levels)


def ci_halfwidth(samples: Sequence[float]) -> float:
    """Half-width of the 95 % confidence interval of the mean, ``t(0.975, n-1)·s/√n`` (0 for a single sample).

    >>> ci_halfwidth([1.0])
    0.0
    >>> round(ci_halfwidth([1.0, 3.0]), 6)
    12.706205
    """
    x = _np.asarray(samples, dtype=float)
    x = x[~_np.isnan(x)]
    if x.size < 2:
        return 0.0
    return float(_stats.t.ppf(0.975, x.size - 1) * x.std(ddof=1) / math.sqrt(x.size))


def _display(key: str, value: Any) -> Any:
    if key.split('.')[-1].endswith('_ns') and value is not None:
        return _ns(value)
    return value


@dataclass
class ResultTable:
    """Rows of ``(kind, cell, parameters…, metric, value, ci_halfwidth, trials)``.

    Attributes:
        frame: the result rows
        extras: additional tables (written next to the main file as ``<stem>_<name>.csv``)
    """
    frame: _pd.DataFrame
    extras: Dict[str, _pd.DataFrame] = field(default_factory=dict)

    @classmethod
    def from_rows(cls, rows: List[Dict[str, Any]], labels: Sequence[str],
                  extras: Optional[Dict[str, _pd.DataFrame]] = None) -> ResultTable:
        columns = RESULT_COLUMNS[:2] + list(labels) + RESULT_COLUMNS[2:]
        return cls(_pd.DataFrame(rows, columns=columns), extras or {})

    @property
    def rows(self) -> List[Dict[str, Any]]:
        return self.frame.to_dict('records')

    @property
    def metrics(self) -> List[str]:
        return list(dict.fromkeys(self.frame['metric']))

    def metric(self, name: str) -> _pd.DataFrame:
        """The rows of one metric, one per cell, in grid order."""
        if name not in self.metrics:
            raise HarnessException(f"no metric '{name}' in the table (available: {self.metrics}).")
        return self.frame[self.frame['metric'] == name].reset_index(drop=True)

    def values(self, name: str) -> List[float]:
        return self.metric(name)['value'].tolist()

    def to_csv(self, path: str):
        write_frame(self.frame, path)
        for name, extra in self.extras.items():
            write_frame(extra, sibling_path(path, name))
        _logger.info(f"Wrote {len(self.frame)} rows to {path}.")

    def summary(self) -> str:
        """Human-readable block: one line per cell and metric."""
        if self.frame.empty:
            return '(no result)'
        lines = []
        labels = [c for c in self.frame.columns if c not in RESULT_COLUMNS]
        for _, row in self.frame.iterrows():
            params = ', '.join(f"{k}={row[k]}" for k in labels)
            lines.append(f"[{row['kind']}] cell {row['cell']} ({params}) {row['metric']} = {row['value']:.6g} "
                         f"± {row['ci_halfwidth']:.3g} (n={row['trials']})")
        return '\n'.join(lines)


def _metric_rows(spec: ExperimentSpec, cell_index: int, cell: Mapping[str, Any],
                 metrics: Mapping[str, Any]) -> List[Dict[str, Any]]:
    """One row per metric; a sequence is reduced to its mean with a confidence half-width, a scalar is kept as is."""
    rows = []
    params = {k: _display(k, v) for k, v in cell.items()}
    for name, samples in metrics.items():
        if isinstance(samples, (list, tuple, _np.ndarray)):
            x = _np.asarray(samples, dtype=float)
            finite = x[~_np.isnan(x)]
            value = float(finite.mean()) if finite.size else float('nan')
            ci, n = ci_halfwidth(x), int(finite.size)
        else:
            value, ci, n = float(samples), 0.0, spec.trials
        rows.append({'kind': spec.kind, 'cell': cell_index, **params, 'metric': name, 'value': value,
                     'ci_halfwidth': ci, 'trials': n})
    return rows


def _run_cells(spec: ExperimentSpec, f: Callable[[ExperimentSpec, int, Dict[str, Any]], Any]) -> List[Any]:
    runner = Runner(spec.n_procs)
    for i, cell in enumerate(spec.cells):
        runner(f, spec, i, cell)
    return runner.collect()


def _beacon_cell(spec: ExperimentSpec, index: int, cell: Dict[str, Any]):
    cfg = spec.cell_config(cell)
    tolerance = cfg.symbol_tolerance_ns
    fraction = spec.options.get('tolerance_fraction')
    if fraction is not None:
        tolerance = int(float(fraction) * abs(cfg.beacon.t2_ns - cfg.beacon.t1_ns))
    _logger.info(f"beacon-match cell {index}: {cell} ({spec.trials} trials).")
    correct, detected, errors = [], [], []
    for trial in range(spec.trials):
        streams = RngStreams.derive(spec.seed, spec.session_id(index, trial))
        result = beacon_trial(cfg.beacon, cfg.detector, cfg.noise, cfg.interference, cfg.emission_jitter,
                              streams.emission, streams.noise, streams.interference,
                              packet_duration_ns=cfg.packet_duration_ns,
                              power_dbm=cfg.packet_power_dbm,
                              tolerance_ns=tolerance,
                              threshold=cfg.match_threshold,
                              allow_insertions=cfg.allow_insertions,
                              max_insertions=cfg.max_insertions,
                              alignment_tolerance_ns=cfg.alignment_tolerance_ns)
        correct.append(float(result.correct))
        detected.append(float(result.detection is not None))
        if result.alignment_error_ns is not None:
            errors.append(abs(result.alignment_error_ns) / NS_PER_MS)
    return _metric_rows(spec, index, cell, {
        'matching_rate': correct,
        'detection_rate': detected,
        'alignment_error_ms': errors if errors else [float('nan')],
        'sampling_ms': cfg.beacon.span_ns / NS_PER_MS,
    })


def cmd_beacon_match(spec: ExperimentSpec) -> ResultTable:
    """Beacon matching rate per cell: a trial is correct when the match lands on the true first packet."""
    rows = [r for cell_rows in _run_cells(spec, _beacon_cell) for r in cell_rows]
    return ResultTable.from_rows(rows, spec.grid.labels)


def _temporal_cell(spec: ExperimentSpec, index: int, cell: Dict[str, Any]):
    cfg = spec.cell_config(cell)
    p = cfg.temporal_params
    n = int(spec.options.get('digits', 20))
    _logger.info(f"ber-temporal cell {index}: {cell}, compensation {p.compensation_ns} ns.")
    errors, erasures = [], []
    for trial in range(spec.trials):
        streams = RngStreams.derive(spec.seed, spec.session_id(index, trial))
        digits = streams.payload.integers(0, 10, n).tolist()
        nominal = temporal_encode(digits, p, PAYLOAD_LEAD_NS, cfg.packet_duration_ns, cfg.packet_power_dbm)
        sent = emit(nominal, cfg.emission_jitter, streams.emission, chained=True)
        trace = render_trace(sent, cfg.noise, cfg.interference, cfg.detector.sample_period_ns,
                             (0, sent[-1].end + PAYLOAD_LEAD_NS), streams.noise, streams.interference)
        d = cfg.detector
        rises = detect_packets(trace, d.margin_db, d.min_high_samples, d.ema_alpha, d.interpolate)
        decoded = temporal_decode_rises(rises, n, p)
        errors.append(ber(digits, decoded))
        erasures.append(decoded.erasures / n)
    return _metric_rows(spec, index, cell, {'ber': errors, 'erasure_rate': erasures})


def cmd_ber_temporal(spec: ExperimentSpec) -> ResultTable:
    """Digit error rate of temporal modulation per cell (erasures count as errors)."""
    rows = [r for cell_rows in _run_cells(spec, _temporal_cell) for r in cell_rows]
    return ResultTable.from_rows(rows, spec.grid.labels)


def _energy_cell(spec: ExperimentSpec, index: int, cell: Dict[str, Any]):
    cfg = spec.cell_config(cell)
    energy = cfg.energy
    powers = spec.options.get('power_dbm') or {}
    levels_power = {int(k): v for k, v in powers.items()}.get(energy.levels)
    if levels_power is not None and not spec.base.energy.power_dbm:
        energy = replace(energy, power_dbm=tuple(float(x) for x in levels_power))
    n = int(spec.options.get('bits', 26))
    n_slots = n // energy.bits_per_slot
    _logger.info(f"ber-energy cell {index}: {cell}, levels {energy.packet_power_dbm} dBm.")
    errors, erasures = [], []
    for trial in range(spec.trials):
        streams = RngStreams.derive(spec.seed, spec.session_id(index, trial))
        bits = streams.payload.integers(0, 2, n).tolist()
        sent = emit(energy_encode(bits, energy, PAYLOAD_LEAD_NS), cfg.emission_jitter, streams.emission,
                    chained=False)
        stop = PAYLOAD_LEAD_NS + n_slots * energy.slot_ns + PAYLOAD_LEAD_NS
        trace = render_trace(sent, cfg.noise, cfg.interference, cfg.detector.sample_period_ns, (0, stop),
                             streams.noise, streams.interference)
        decoded = energy_decode(trace, PAYLOAD_LEAD_NS, n_slots, energy)
        errors.append(ber(bits, decoded))
        erasures.append(decoded.erasures / n)
    return _metric_rows(spec, index, cell, {'ber': errors, 'erasure_rate': erasures})


def cmd_ber_energy(spec: ExperimentSpec) -> ResultTable:
    """Bit error rate of energy modulation per cell."""
    rows = [r for cell_rows in _run_cells(spec, _energy_cell) for r in cell_rows]
    return ResultTable.from_rows(rows, spec.grid.labels)


def _sessions(spec: ExperimentSpec, index: int, cell: Dict[str, Any]):
    cfg = spec.cell_config(cell)
    _logger.info(f"{spec.kind} cell {index}: {cell} ({spec.trials} sessions, {cfg.resolved_pair_source} pairs).")
    return [run_session(replace(cfg, seed=spec.seed, session_id=spec.session_id(index, trial)))
            for trial in range(spec.trials)]


def _ms_or_nan(ns: Optional[int]) -> float:
    return float('nan') if ns is None else ns / NS_PER_MS


def drift_rate(errors: _pd.DataFrame) -> float:
    """Growth of the absolute error during holdover, in ms per second, by a linear fit over all samples."""
    holdover = errors[errors['phase'] == 'holdover']
    if len(holdover) < 3:
        return float('nan')
    x = holdover['since_last_pair_ns'].to_numpy(dtype=float) / NS_PER_S
    y = holdover['error_ns'].abs().to_numpy(dtype=float) / NS_PER_MS
    if _np.ptp(x) == 0:
        return float('nan')
    model = _LinearModel()
    fit = model.fit(y, model.guess(y, x=x), x=x)
    return float(fit.params['slope'].value)


def _series(index: int, cell: Mapping[str, Any], errors: _pd.DataFrame, bin_ns: int) -> _pd.DataFrame:
    frame = errors.assign(t_bin_ns=(errors['since_first_pair_ns'] // bin_ns) * bin_ns,
                          abs_error_ns=errors['error_ns'].abs())
    grouped = frame.groupby('t_bin_ns')['abs_error_ns']
    series = _pd.DataFrame({'mean_abs_error_ns': grouped.mean(),
                            'max_abs_error_ns': grouped.max(),
                            'samples': grouped.size()}).reset_index()
    for k, v in reversed(list(cell.items())):
        series.insert(0, k, _display(k, v))
    series.insert(0, 'cell', index)
    return series


def _skew_histogram(index: int, cell: Mapping[str, Any], skews: List[float], bins: int) -> _pd.DataFrame:
    skews = [s for s in skews if not math.isnan(s)]
    if not skews:
        counts, edges = _np.zeros(0, dtype=int), _np.zeros(1)
    else:
        counts, edges = _np.histogram(skews, bins=bins)
    hist = _pd.DataFrame({'bin_low': edges[:-1], 'bin_high': edges[1:], 'count': counts})
    for k, v in reversed(list(cell.items())):
        hist.insert(0, k, _display(k, v))
    hist.insert(0, 'cell', index)
    return hist


def _sync_error_cell(spec: ExperimentSpec, index: int, cell: Dict[str, Any]):
    logs = _sessions(spec, index, cell)
    holdover = [_ms_or_nan(log.holdover_max_abs_error_ns) for log in logs]
    skews = [float('nan') if log.skew_estimate is None else log.skew_estimate for log in logs]
    errors = _pd.concat([log.errors for log in logs], ignore_index=True)
    finite_skews = [s for s in skews if not math.isnan(s)]
    metrics = {
        'holdover_max_abs_error_ms': holdover,
        'fraction_below_1ms': [float(h < 1.0) for h in holdover if not math.isnan(h)],
        'fraction_above_10ms': [float(h > 10.0) for h in holdover if not math.isnan(h)],
        'skew_estimate': skews,
        'skew_std': float(_np.std(finite_skews, ddof=1)) if len(finite_skews) > 1 else float('nan'),
        'drift_rate': drift_rate(errors),
        'accepted_pairs': [log.accepted_pairs for log in logs],
    }
    bin_ns = _ns(spec.options.get('series_bin_ns', NS_PER_S))
    extras = (_series(index, cell, errors, bin_ns) if not errors.empty else None,
              _skew_histogram(index, cell, skews, int(spec.options.get('skew_bins', 50))))
    return _metric_rows(spec, index, cell, metrics), extras


def cmd_sync_error(spec: ExperimentSpec) -> ResultTable:
    """Whole-protocol synchronization error per cell.

    Extras: ``series`` (mean and max absolute error per time bin since the first pair) and ``skew_hist`` (histogram of
    the final skew estimates).
    """
    results = _run_cells(spec, _sync_error_cell)
    rows = [r for cell_rows, _ in results for r in cell_rows]
    series = [s for _, (s, _) in results if s is not None]
    hists = [h for _, (_, h) in results]
    extras = {'series': _pd.concat(series, ignore_index=True) if series else _pd.DataFrame(),
              'skew_hist': _pd.concat(hists, ignore_index=True)}
    return ResultTable.from_rows(rows, spec.grid.labels, extras)


def _sweep_cell(spec: ExperimentSpec, index: int, cell: Dict[str, Any]):
    logs = _sessions(spec, index, cell)
    return _metric_rows(spec, index, cell, {
        'max_abs_error_ms': [_ms_or_nan(log.max_abs_error_ns) for log in logs],
        'holdover_max_abs_error_ms': [_ms_or_nan(log.holdover_max_abs_error_ns) for log in logs],
        'accepted_pairs': [log.accepted_pairs for log in logs],
        'matching_rate': [log.matching_rate for log in logs],
        'duty_cycle': [log.duty_cycle for log in logs],
        'skew_estimate': [float('nan') if log.skew_estimate is None else log.skew_estimate for log in logs],
    })


def cmd_sweep(spec: ExperimentSpec) -> ResultTable:
    """Full sessions over an arbitrary configuration grid."""
    rows = [r for cell_rows in _run_cells(spec, _sweep_cell) for r in cell_rows]
    return ResultTable.from_rows(rows, spec.grid.labels)


COMMANDS: Dict[str, Callable[[ExperimentSpec], ResultTable]] = {
    'beacon-match': cmd_beacon_match,
    'ber-temporal': cmd_ber_temporal,
    'ber-energy': cmd_ber_energy,
    'sync-error': cmd_sync_error,
    'sweep': cmd_sweep,
}
"""Runner of each experiment kind."""


_SPEC_FIELDS = ('kind', 'grid', 'trials', 'seed', 'out', 'base', 'noise_levels', 'n_procs', 'common_random_numbers',
                'options')


def experiment_spec(kind: str,
                    data: Optional[Mapping[str, Any]] = None,
                    presets: Optional[Mapping[str, Any]] = None) -> ExperimentSpec:
    """Build an experiment from a configuration mapping merged over the presets of its kind.

    The grid of the configuration, when present, replaces the preset grid as a whole.
    """
    data = dict(data or {})
    kind = data.pop('kind', kind)
    if kind not in KINDS:
        raise ConfigException(f"kind: unknown experiment '{kind}' (expected one of {KINDS}).")
    for k in data:
        if k not in _SPEC_FIELDS:
            raise ConfigException(f"{k}: unknown experiment field.")
    presets = presets if presets is not None else load_presets()
    defaults = dict(presets.get('experiments', {}).get(kind, {}))
    grid = data.pop('grid', None)
    merged = merge(defaults, data)
    if grid is not None:
        merged['grid'] = grid
    noise_levels = merge(presets.get('noise_levels', {}), merged.get('noise_levels') or {})
    try:
        return ExperimentSpec(kind=kind,
                              grid=merged.get('grid') or {},
                              trials=int(merged.get('trials', 1)),
                              seed=int(merged.get('seed', 0)),
                              out=merged.get('out'),
                              base=session_config(merged.get('base') or {}),
                              noise_levels={k: float(v) for k, v in noise_levels.items()},
                              n_procs=merged.get('n_procs'),
                              common_random_numbers=bool(merged.get('common_random_numbers', True)),
                              options=dict(merged.get('options') or {}))
    except (TypeError, ValueError) as e:
        raise ConfigException(f"{kind}: {e}")


def load_experiment(kind: str, path: Optional[str] = None, **overrides) -> ExperimentSpec:
    """Read an experiment configuration file (or only the presets when ``path`` is None).

    Keyword overrides (``seed``, ``trials``, ``out``, ``n_procs``) take precedence over the file when not None.
    """
    data = read_config_file(path) if path is not None else {}
    if 'kind' in data and data['kind'] != kind:
        raise ConfigException(f"{path}: configuration is for '{data['kind']}', not '{kind}'.")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return experiment_spec(kind, data)


def run_experiment(spec: ExperimentSpec) -> ResultTable:
    """Run an experiment and write its table when an output path is set."""
    _logger.info(f"Running {spec.kind}: {len(spec.grid)} cells x {spec.trials} trials, seed {spec.seed}.")
    table = COMMANDS[spec.kind](spec)
    if spec.out:
        table.to_csv(spec.out)
    return table
