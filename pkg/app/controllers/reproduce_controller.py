"""`reproduce`: run every reproduction check and print the table."""
from __future__ import annotations

from dataclasses import replace

import click

from app.controllers.base_controller import CheckFailed, current_settings, guarded
from app.exceptions.custom_exceptions import ConfigurationError
from app.services.reproduce_service import ReproduceService, render_table


@click.command("reproduce")
@click.option("--trials", type=int, default=None, help="Fidelity trials (settings default).")
@click.option("--color/--no-color", default=None)
@guarded
def reproduce(trials, color):
    """Deterministic pass/fail table."""
    settings = current_settings()
    if trials is not None:
        if trials < 1:
            raise ConfigurationError(f"--trials must be >= 1, got {trials}")
        settings = replace(settings, fidelity_trials=trials)
    report = ReproduceService(settings).run()
    click.echo(render_table(report, settings.use_color if color is None else color))
    if not report.passed:
        raise CheckFailed(f"{len(report.failures())} check(s) failed: {', '.join(report.failures())}")
