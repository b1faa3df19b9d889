"""Experiment harness: configuration files, seeded experiment runners and the command-line front-end."""
from .config import HarnessException, ConfigException, load_presets, read_config_file, apply_overrides, \
    session_config
from .experiments import KINDS, ExperimentSpec, ResultTable, ci_halfwidth, load_experiment, experiment_spec, \
    run_experiment, cmd_beacon_match, cmd_ber_temporal, cmd_ber_energy, cmd_sync_error, cmd_sweep
