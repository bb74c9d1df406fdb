"""Stdio adapter exposing tabular foundation models to the fair-context
evaluation harness over newline-delimited JSON."""

__version__ = "0.1.0"

from .backends import BACKENDS, BackendUnavailable, make_backend
from .protocol import PROTOCOL_VERSION, AdapterSession, handle_line, serve

__all__ = ["__version__", "BACKENDS", "BackendUnavailable", "make_backend",
           "PROTOCOL_VERSION", "AdapterSession", "handle_line", "serve"]
