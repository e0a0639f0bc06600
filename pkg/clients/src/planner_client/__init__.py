"""Reference SDK for external planners speaking the benchmark wire protocol."""

from .session import Feedback, ProtocolError, Session, SessionClosed

__version__ = "0.1.0"

__all__ = ["Feedback", "ProtocolError", "Session", "SessionClosed", "__version__"]
