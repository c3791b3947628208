"""`dac`: design audit, target compilation and stage-chain generalization."""
from __future__ import annotations

import click

from app.clients.artifact_client import ArtifactClient
from app.config.run_config import RunConfig
from app.controllers.base_controller import CheckFailed, current_settings, emit, guarded
from app.services.dac_service import compile_target, output_flux
from app.services.export_service import chain_to_dict, design_to_dict


@click.group("dac")
def dac():
    """Two-stage flux DAC tools."""


@dac.command("design")
@click.argument("design_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), default=None)
@guarded
def design(design_file, out):
    """Derived parameters of a design file; fails if the LSD cannot span an MSD step."""
    config = RunConfig.from_options(current_settings(), "dac", out=out)
    loaded = ArtifactClient().load_design(design_file)
    emit(config, "dac_design.json", design_to_dict(loaded))
    if not loaded.covers_msd_step:
        raise CheckFailed(
            f"Division ratio {loaded.division_ratio:.4g} exceeds MAXSFQ_LSD {loaded.max_sfq_lsd}: "
            "some output levels are unreachable"
        )


@dac.command("compile")
@click.argument("design_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--target", type=float, required=True, help="Target output flux (mPhi0).")
@click.option("--out", type=click.Path(file_okay=False), default=None)
@guarded
def compile_(design_file, target, out):
    """State closest to --target and its error."""
    config = RunConfig.from_options(current_settings(), "dac", out=out)
    loaded = ArtifactClient().load_design(design_file)
    state = compile_target(loaded, target)
    achieved = output_flux(loaded, state)
    emit(
        config,
        "dac_compile.json",
        {
            "target_mphi0": target,
            "m_lsd": state.m_lsd,
            "m_msd": state.m_msd,
            "achieved_mphi0": achieved,
            "error_mphi0": achieved - target,
        },
    )


@dac.command("chain")
@click.argument("chain_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), default=None)
@guarded
def chain(chain_file, out):
    """Weights, capacities and bits of a 1-3 stage cascade."""
    config = RunConfig.from_options(current_settings(), "dac", out=out)
    loaded = ArtifactClient().load_chain(chain_file)
    emit(config, "dac_chain.json", chain_to_dict(loaded))
