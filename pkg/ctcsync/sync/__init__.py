"""Synchronization rounds, clock calibration and full sessions."""
from .calibration import SyncPair, CalibrationModel, CALIBRATION_MODES, calibrate, estimate_global, estimate_ns, \
    CalibrationException
from .protocol import RngStreams, SenderRound, Reception, Sender, Receiver, sender_round, receive, receiver_round, \
    direct_pair
from .session import SessionConfig, SessionConfigException, RoundRecord, SessionLog, run_session
