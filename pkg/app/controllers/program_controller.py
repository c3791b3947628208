"""`program`: compile DAC targets into an XYZ pulse program and simulate it."""
from __future__ import annotations

import click

from app.clients.artifact_client import ArtifactClient
from app.config.run_config import RunConfig
from app.controllers.base_controller import CheckFailed, current_settings, emit, guarded
from app.exceptions.custom_exceptions import ConfigurationError
from app.services.export_service import ExportService, energy_to_dict, problem_to_dict, sequence_to_dict
from app.services.fabric_service import build_fabric, compile_program, energy_of, simulate
from app.services.programming_service import ProgrammingService, problem_dac_design
from app.services.pulse_source_service import PulseSourceParams, nominal_levels
from app.utils.logger import get_logger

log = get_logger(__name__)


def _fabric_side(n_rows: int, n_cols: int) -> int:
    if n_rows != n_cols:
        raise ConfigurationError(f"Programming needs a square Chimera grid, got {n_rows}x{n_cols}")
    return max(2, n_rows + n_rows % 2)


@click.command("program")
@click.option("--targets", "targets_file", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--problem", "problem_file", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "dot", "csv"]), default="json")
@guarded
def program(targets_file, problem_file, out, fmt):
    """Program explicit slot targets (--targets) or a hardware Ising problem (--problem)."""
    settings = current_settings()
    config = RunConfig.from_options(settings, "program", out=out, fmt=fmt)
    if (targets_file is None) == (problem_file is None):
        raise ConfigurationError("Give exactly one of --targets or --problem")
    artifacts = ArtifactClient()

    if problem_file is not None:
        problem, spec = artifacts.load_problem_with_topology(problem_file)
        if spec is None:
            raise ConfigurationError("--problem needs a Chimera-topology problem file; embed logical problems first")
        service = ProgrammingService.from_settings(settings, fabric=build_fabric(_fabric_side(spec.n_rows, spec.n_cols), spec.m))
        result = service.program_problem(problem, strict=False)
        targets, sequence, simulation, energy = result.targets, result.sequence, result.simulation, result.energy
        readback = problem_to_dict(result.readback, spec)
    else:
        loaded = artifacts.load_targets(targets_file)
        design = loaded.design or problem_dac_design()
        targets = loaded.targets
        sequence = compile_program(loaded.fabric, targets, design)
        simulation = simulate(loaded.fabric, sequence, PulseSourceParams(), nominal_levels(), design)
        energy = energy_of(sequence, reset_sfq=simulation.reset_pulses)
        readback = None

    exact = all(simulation.states[slot] == state for slot, state in targets.items())
    log.info("Programmed %s targets in %s events: exact=%s", len(targets), len(sequence), exact)
    if config.fmt == "csv":
        exporter = ExportService(config.out or settings.output_dir)
        click.echo(str(exporter.write_targets_csv("programmed_states.csv", {s: simulation.states[s] for s in targets})))
    else:
        payload = {
            "sequence": sequence_to_dict(sequence),
            "energy": energy_to_dict(energy),
            "exact": exact,
            "disturbed": [{"event": i, "slot": slot.label} for i, slot in simulation.disturbed],
        }
        if readback is not None:
            payload["readback"] = readback
        emit(config, "program.json", payload)
    if not exact or simulation.disturbed:
        raise CheckFailed(
            f"Programming mismatch: exact={exact}, {len(simulation.disturbed)} disturbed slot event(s)"
        )
