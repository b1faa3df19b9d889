import doctest
import ctcsync
import ctcsync.units
import ctcsync.symbols
import ctcsync.clocks
import ctcsync.channel
import ctcsync.beacon
import ctcsync.codec
import ctcsync.outputs
import ctcsync.mappings
import ctcsync.sync.calibration
import ctcsync.sync.session
import ctcsync.harness.config
import ctcsync.harness.experiments

VERBOSITY = False

doctest.testmod(ctcsync.units, verbose=VERBOSITY)
doctest.testmod(ctcsync.symbols, verbose=VERBOSITY)
doctest.testmod(ctcsync.clocks, verbose=VERBOSITY)
doctest.testmod(ctcsync.channel, verbose=VERBOSITY)
doctest.testmod(ctcsync.beacon, verbose=VERBOSITY)
doctest.testmod(ctcsync.codec, verbose=VERBOSITY)
doctest.testmod(ctcsync.outputs, verbose=VERBOSITY)
doctest.testmod(ctcsync.mappings, verbose=VERBOSITY)
doctest.testmod(ctcsync.sync.calibration, verbose=VERBOSITY)
doctest.testmod(ctcsync.sync.session, verbose=VERBOSITY)
doctest.testmod(ctcsync.harness.config, verbose=VERBOSITY)
doctest.testmod(ctcsync.harness.experiments, verbose=VERBOSITY)
