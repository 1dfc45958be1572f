"""Executable model of B.A.T.M.A.N. route discovery.

Two readings of the protocol rules are available through
:class:`~batmodel.protocol.Interpretation`. :mod:`batmodel.explorer` checks
the untimed model exhaustively. :mod:`batmodel.sim` runs the timed model as a
seeded discrete-event simulation.
"""
from .protocol import OGM, ConfigError, Interpretation, NodeState, ProtocolParams

__all__ = ["OGM", "ConfigError", "Interpretation", "NodeState", "ProtocolParams"]
__version__ = "0.1.0"
