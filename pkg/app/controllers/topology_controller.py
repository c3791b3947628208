"""`topology`: build a Chimera graph and export it as JSON or DOT."""
from __future__ import annotations

import click

from app.config.run_config import RunConfig
from app.controllers.base_controller import current_settings, emit, guarded
from app.services.chimera_service import ChimeraSpec, build_chimera
from app.services.export_service import ExportService, graph_to_dict, graph_to_dot
from app.utils.logger import get_logger

log = get_logger(__name__)


@click.command("topology")
@click.option("--n", type=int, default=None, help="Tiles per side (default 8).")
@click.option("--m", type=int, default=None, help="Shore size (default 4).")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory; stdout if omitted.")
@click.option("--format", "fmt", type=click.Choice(["json", "dot", "csv"]), default="json")
@guarded
def topology(n, m, out, fmt):
    """Build C_N and write its qubits and couplers."""
    config = RunConfig.from_options(current_settings(), "topology", n=n, m=m, out=out, fmt=fmt)
    graph = build_chimera(ChimeraSpec.square(config.n, config.m))
    log.info("Topology C_%s: %s qubits, %s couplers", config.n, len(graph.qubits), len(graph.couplers))

    name = f"chimera_{config.n}x{config.n}_m{config.m}"
    if config.fmt == "dot":
        if config.out is None:
            click.echo(graph_to_dot(graph), nl=False)
        else:
            click.echo(str(ExportService(config.out).write_dot(f"{name}.dot", graph)))
        return
    emit(config, f"{name}.json", graph_to_dict(graph))
