"""Shared command plumbing: settings lookup, error-to-exit-code mapping and output."""
from __future__ import annotations

import functools
import json
from typing import Any, Callable

import click

from app.config.run_config import RunConfig
from app.config.settings import Settings
from app.exceptions.custom_exceptions import ControlPlaneError
from app.services.export_service import ExportService
from app.utils.constants import ERROR_GENERIC, EXIT_CHECK_FAILED, EXIT_USAGE
from app.utils.logger import get_logger

log = get_logger(__name__)


class CheckFailed(Exception):
    """Raised by a command whose checks ran but did not all pass."""


def current_settings() -> Settings:
    ctx = click.get_current_context()
    settings = ctx.find_object(Settings)
    return settings if settings is not None else Settings.from_env()


def guarded(func: Callable[..., Any]) -> Callable[..., Any]:
    """Map library errors to exit 2, failed checks and unexpected errors to exit 1."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return func(*args, **kwargs)
        except CheckFailed as e:
            click.echo(str(e), err=True)
            ctx.exit(EXIT_CHECK_FAILED)
        except ControlPlaneError as e:
            log.exception("Command %s failed.", ctx.info_name)
            click.echo(f"Error: {e}", err=True)
            ctx.exit(EXIT_USAGE)
        except click.exceptions.Exit:
            raise
        except Exception:
            log.exception("Unexpected error in %s.", ctx.info_name)
            click.echo(ERROR_GENERIC, err=True)
            ctx.exit(EXIT_CHECK_FAILED)

    return wrapper


def emit(config: RunConfig, filename: str, payload: Any) -> None:
    """Write JSON under --out when given, otherwise print it."""
    if config.out is None:
        click.echo(json.dumps(payload, indent=2, ensure_ascii=False))
        return
    path = ExportService(config.out).write_json(filename, payload)
    click.echo(str(path))
