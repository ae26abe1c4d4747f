"""
Exceptions shared by every toolkit module.

The CLI maps ``ValidationError`` to exit code 2 and
``NonConvergenceError`` to exit code 3.
"""

from typing import Any, Dict, Optional


class QuantizationError(Exception):
    """Base class for toolkit errors"""


class ValidationError(QuantizationError, ValueError):
    """Rejected input: wrong dimension, bad parameter, malformed name"""


class UnsupportedSourceError(ValidationError):
    """Operation not available for this kind of source"""


class NonConvergenceError(QuantizationError, RuntimeError):
    """A numerical procedure hit its cap before meeting its tolerance"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details = details or {}
