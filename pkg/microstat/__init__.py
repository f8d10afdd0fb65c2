"""
Microstat - statistical analysis of microbial count tables.
"""

import sys
from typing import Any, Optional

__version__ = "0.1.0"

# Global configuration state
_config: dict[str, Any] = {
    "verbose": False,
    "threads": None,
}


def _exception_handler(
    exc_type: type, exc_value: BaseException, exc_traceback: Any
) -> None:
    """
    Custom exception handler that prints only the error message when verbose=False.

    Args:
        exc_type: The exception class.
        exc_value: The exception instance.
        exc_traceback: The traceback object.
    """
    if _config["verbose"]:
        sys.__excepthook__(exc_type, exc_value, exc_traceback)
    else:
        print(f"{exc_type.__name__}: {exc_value}", file=sys.stderr)


def configure(verbose: bool = False, threads: Optional[int] = None) -> None:
    """
    Configure the Microstat library.

    Parameters are never read from the environment; everything that affects
    results is passed explicitly.

    Args:
        verbose (bool): If True, show full exception tracebacks. If False (default),
            show only the error message for cleaner output.
        threads (int, optional): Global cap on worker threads used by batch
            operations. None lets each operation run sequentially.

    Raises:
        ValueError: If threads is not a positive integer.
    """
    if threads is not None and (not isinstance(threads, int) or threads < 1):
        raise ValueError(f"threads must be a positive integer, got {threads!r}")

    _config["verbose"] = verbose
    _config["threads"] = threads
    sys.excepthook = _exception_handler


def get_threads() -> Optional[int]:
    """Return the configured worker cap (None means sequential)."""
    return _config["threads"]
