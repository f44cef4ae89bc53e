"""Byzantine quorum systems under symmetric and asymmetric trust.

Fail-prone and quorum systems, the Q3/B3 conditions, guilds and tolerated
systems, purification, composition of two systems, and a simulator for the
handshake that merges two running clusters.
"""

from .core import (
    AsymmetricFailProneSystem,
    AsymmetricQuorumSystem,
    AsymmetricSystem,
    FailProneSystem,
    Ground,
    InputError,
    ProcessSet,
    QuorumSystem,
    SetFamily,
    SymmetricSystem,
    threshold_fail_prone,
)
from .conditions import CheckReport, PreconditionError, check_abqs, check_b3, check_bqs, check_q3

__version__ = "0.1.0"

__all__ = [
    "AsymmetricFailProneSystem",
    "AsymmetricQuorumSystem",
    "AsymmetricSystem",
    "CheckReport",
    "FailProneSystem",
    "Ground",
    "InputError",
    "PreconditionError",
    "ProcessSet",
    "QuorumSystem",
    "SetFamily",
    "SymmetricSystem",
    "check_abqs",
    "check_b3",
    "check_bqs",
    "check_q3",
    "threshold_fail_prone",
]
