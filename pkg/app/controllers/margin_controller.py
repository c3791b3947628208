"""`margin`: critical-line curve and zone report for the pulse source."""
from __future__ import annotations

import click

from app.config.run_config import RunConfig
from app.controllers.base_controller import CheckFailed, current_settings, emit, guarded
from app.services.export_service import ExportService, margin_report_to_dict, margin_rows
from app.services.pulse_source_service import PulseSourceParams, find_operating_point, margin_curve
from app.utils.constants import MICRO, PHI0


@click.command("margin")
@click.option("--i-pwr", "i_pwr", type=float, default=None, help="PWR current (uA); settings default.")
@click.option("--i-in", "i_in", type=float, default=None, help="Storage-loop current range (uA); settings default.")
@click.option("--samples", type=int, default=201, help="Curve samples over [-Phi0, Phi0].")
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "dot", "csv"]), default="json")
@guarded
def margin(i_pwr, i_in, samples, out, fmt):
    """Find an ADDR/TRIG operating point and report every zone."""
    settings = current_settings()
    config = RunConfig.from_options(settings, "margin", out=out, fmt=fmt)
    params = PulseSourceParams()
    i_pwr = (settings.pwr_current_ua if i_pwr is None else i_pwr) * MICRO
    i_in = (settings.loop_current_range_ua if i_in is None else i_in) * MICRO

    levels, report = find_operating_point(params, i_pwr, i_in)
    curve = margin_curve(params, samples)
    if config.fmt == "csv":
        exporter = ExportService(config.out or settings.output_dir)
        click.echo(str(exporter.write_margin_csv("margins.csv", curve, report)))
    else:
        payload = margin_report_to_dict(report)
        payload["levels"] = {
            "i_pwr_ua": levels.i_pwr / MICRO,
            "phi_addr_phi0": levels.phi_addr / PHI0,
            "phi_trig_phi0": levels.phi_trig / PHI0,
        }
        payload["curve"] = margin_rows(curve)
        emit(config, "margins.json", payload)
    if not report.passed:
        raise CheckFailed(f"Margins fail in zone(s): {', '.join(report.failures())}")
