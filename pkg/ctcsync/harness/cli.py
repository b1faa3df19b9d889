"""Command-line front-end: ``ctcsync <command> [--config FILE] [--seed N] [--trials N] [--out PATH]``.

Exit status is 0 on success, 2 for configuration errors and 1 for runtime errors; errors are reported on stderr as
``ctcsync: error: <message>``.
"""
from typing import List, Optional
import argparse
import logging
import sys
from .. import __version__
from ..clocks import ClockException
from ..channel import ChannelException
from ..beacon import BeaconException
from ..codec import CodecException
from ..sync import CalibrationException, SessionConfigException
from ..units import UnitsException
from .config import ConfigException, HarnessException
from .experiments import KINDS, load_experiment, run_experiment

__all__ = ['main', 'parser']

_logger = logging.getLogger(__name__)

EXIT_RUNTIME_ERROR = 1
EXIT_CONFIG_ERROR = 2

_CONFIG_ERRORS = (ConfigException, SessionConfigException, UnitsException)
_RUNTIME_ERRORS = (HarnessException, ClockException, ChannelException, BeaconException, CodecException,
                   CalibrationException)

_DESCRIPTIONS = {
    'beacon-match': 'beacon matching rate over beacon lengths, interval gaps and noise levels',
    'ber-temporal': 'digit error rate of temporal modulation over granularities and noise levels',
    'ber-energy': 'bit error rate of energy modulation over energy levels, slot lengths and noise levels',
    'sync-error': 'synchronization error of whole sessions over pair intervals and calibration modes',
    'sweep': 'whole sessions over an arbitrary configuration grid',
}


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog='ctcsync',
                                description='Cross-technology clock synchronization experiments.')
    p.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    p.add_argument('-v', '--verbose', action='count', default=0,
                   help='increase verbosity (-v: info, -vv: debug)')
    commands = p.add_subparsers(dest='command', metavar='COMMAND')
    commands.required = True
    for kind in KINDS:
        c = commands.add_parser(kind, help=_DESCRIPTIONS[kind], description=_DESCRIPTIONS[kind])
        c.add_argument('-c', '--config', metavar='FILE', help='JSON or YAML experiment configuration')
        c.add_argument('-s', '--seed', type=int, help='root seed (overrides the configuration)')
        c.add_argument('-n', '--trials', type=int, help='trials per cell (overrides the configuration)')
        c.add_argument('-o', '--out', metavar='PATH', help='output CSV file (overrides the configuration)')
        c.add_argument('-j', '--n-procs', type=int, help='cells run in parallel (default: one per core)')
        c.add_argument('-q', '--quiet', action='store_true', help='do not print the summary')
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = parser().parse_args(argv)
    logging.basicConfig(level={0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        spec = load_experiment(args.command, args.config, seed=args.seed, trials=args.trials, out=args.out,
                               n_procs=args.n_procs)
        table = run_experiment(spec)
    except _CONFIG_ERRORS as e:
        print(f"ctcsync: error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except _RUNTIME_ERRORS as e:
        print(f"ctcsync: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR
    except OSError as e:
        print(f"ctcsync: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR
    if not args.quiet:
        print(table.summary())
    return 0


if __name__ == '__main__':
    sys.exit(main())
