"""Select the compiled integration core or the pure-Python fallback.

Set ``FTFLOW_BACKEND=python`` to force the fallback even when the extension
is built.
"""
import os

try:
    from . import _core as core
except ImportError:  # extension not built
    core = None

_requested = os.environ.get("FTFLOW_BACKEND", "").strip().lower()
if _requested not in ("", "compiled", "python"):
    raise ImportError(f"FTFLOW_BACKEND must be 'compiled' or 'python', got {_requested!r}")

BACKEND = "python" if (core is None or _requested == "python") else "compiled"


def available():
    """Names of the usable backends, preferred first."""
    return ("compiled", "python") if core is not None else ("python",)
