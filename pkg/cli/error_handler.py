import functools
import json
import traceback
from typing import Any, Callable, Dict, Tuple

import click
import structlog
from pydantic import ValidationError

from core.errors import NoCrossing, TumorDDEError

logger = structlog.get_logger(__name__)

Payload = Tuple[Dict[str, Any], int]


def tumordde_error_handler(exc: TumorDDEError) -> Payload:
    """Handle errors raised by the library itself."""
    payload = exc.to_dict()
    if isinstance(exc, NoCrossing):
        payload["status"] = "no crossing"
    return payload, exc.exit_code


def validation_error_handler(exc: ValidationError) -> Payload:
    """Handle pydantic validation errors (non-positive rates, malformed values)."""
    fields = [".".join(str(part) for part in err["loc"]) + ": " + err["msg"] for err in exc.errors()]
    return {"error": "ValidationError", "message": "; ".join(fields), "context": {"errors": fields}}, 2


def os_error_handler(exc: OSError) -> Payload:
    """Handle file system errors."""
    return {"error": type(exc).__name__, "message": str(exc), "context": {"path": getattr(exc, "filename", None)}}, 4


EXCEPTION_HANDLERS = (
    (TumorDDEError, tumordde_error_handler),
    (ValidationError, validation_error_handler),
    (OSError, os_error_handler),
)


def translate(exc: Exception) -> Payload:
    for exc_type, handler in EXCEPTION_HANDLERS:
        if isinstance(exc, exc_type):
            return handler(exc)
    logger.error("unhandled_exception", error=str(exc), traceback=traceback.format_exc())
    return {"error": type(exc).__name__, "message": str(exc), "context": {}}, 1


def handle_errors(func: Callable) -> Callable:
    """
    Translate exceptions into a message and exit status.

    No-crossing results are a structured record on stdout; other failures go
    to stderr, or to stdout as JSON when the command runs with ``--json``.
    """

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except click.exceptions.Exit:
            raise
        except click.ClickException:
            raise
        except Exception as exc:
            payload, code = translate(exc)
            logger.warning("command_failed", error=payload["error"], exit_code=code)
            if kwargs.get("as_json"):
                click.echo(json.dumps(payload, sort_keys=True, default=str))
            elif payload.get("status") == "no crossing":
                click.echo(f"no crossing: {payload['message']}")
            else:
                click.echo(f"error: {payload['message']}", err=True)
            click.get_current_context().exit(code)

    return wrapper
