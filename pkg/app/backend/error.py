import logging

from pydantic import ValidationError

from config import EXIT_FAILURE, EXIT_INCONCLUSIVE
from tentlablib.errors import (
    ContractViolation,
    InconclusiveResult,
    LatticeCoverageError,
    NumericalError,
)

__all__ = [
    "ContractViolation",
    "InconclusiveResult",
    "LatticeCoverageError",
    "NumericalError",
    "error_dict",
    "exit_code_for",
    "error_exit",
]

logger = logging.getLogger("tentlab")

ERROR_MESSAGE = """The run stopped on an unexpected error.
Rerun with -v to see the full traceback.
Error type: {error_type}
"""


def _location(loc) -> str:
    return ".".join(str(part) for part in loc) or "<root>"


def error_dict(error: Exception) -> dict:
    if isinstance(error, ValidationError):
        first = error.errors()[0]
        path = _location(first["loc"])
        return {"error": f"Invalid config at {path}: {first['msg']}", "path": path}
    if isinstance(error, LatticeCoverageError):
        return {"error": str(error), "witness": error.witness, "distance": error.distance}
    if isinstance(error, (ContractViolation, InconclusiveResult, NumericalError)):
        return {"error": str(error), "error_type": type(error).__name__}
    if isinstance(error, OSError):
        return {"error": f"Cannot access {error.filename}: {error.strerror}"}
    return {"error": ERROR_MESSAGE.format(error_type=type(error))}


def exit_code_for(error: Exception) -> int:
    if isinstance(error, InconclusiveResult):
        return EXIT_INCONCLUSIVE
    return EXIT_FAILURE


def error_exit(error: Exception, subcommand: str) -> int:
    logger.exception("Exception in %s: %s", subcommand, error)
    return exit_code_for(error)
