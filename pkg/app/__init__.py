"""Command-line application factory."""
from __future__ import annotations

import click

from app.config.settings import Settings
from app.utils.logger import configure_logging, get_logger
from app.controllers.dac_controller import dac
from app.controllers.embed_controller import embed
from app.controllers.margin_controller import margin
from app.controllers.program_controller import program
from app.controllers.reproduce_controller import reproduce
from app.controllers.solve_controller import solve
from app.controllers.topology_controller import topology

log = get_logger(__name__)

def create_cli() -> click.Group:
    """Create the CLI group and register every command."""

    @click.group(context_settings={"help_option_names": ["-h", "--help"]})
    @click.pass_context
    def cli(ctx: click.Context) -> None:
        """Chimera control-plane simulator."""
        settings = Settings.from_env()
        configure_logging(settings)
        ctx.obj = settings
        log.debug("Settings: %s", settings)

    cli.add_command(topology)
    cli.add_command(embed)
    cli.add_command(dac)
    cli.add_command(margin)
    cli.add_command(program)
    cli.add_command(solve)
    cli.add_command(reproduce)
    return cli
