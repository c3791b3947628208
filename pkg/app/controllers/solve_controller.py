"""`solve`: ground state of a quantized Ising problem file."""
from __future__ import annotations

import click

from app.clients.artifact_client import ArtifactClient
from app.config.run_config import RunConfig
from app.controllers.base_controller import current_settings, emit, guarded
from app.services.export_service import solve_result_to_dict
from app.services.ising_service import SolveMethod, anneal, brute_force


@click.command("solve")
@click.argument("problem_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice([m.value for m in SolveMethod]), default=SolveMethod.BRUTE_FORCE.value)
@click.option("--seed", type=int, default=None)
@click.option("--sweeps", type=int, default=None)
@click.option("--restarts", type=int, default=None)
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "dot", "csv"]), default="json")
@guarded
def solve(problem_file, method, seed, sweeps, restarts, out, fmt):
    """Solve exactly (brute) or heuristically (anneal)."""
    config = RunConfig.from_options(
        current_settings(), "solve", seed=seed, sweeps=sweeps, restarts=restarts, out=out, fmt=fmt
    )
    problem, spec = ArtifactClient().load_problem_with_topology(problem_file)
    if SolveMethod(method) is SolveMethod.ANNEAL:
        result = anneal(problem, config.sweeps, config.restarts, config.seed)
    else:
        result = brute_force(problem)
    emit(config, "solution.json", solve_result_to_dict(result, spec))
