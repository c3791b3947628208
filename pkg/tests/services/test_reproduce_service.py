from unittest.mock import MagicMock, patch

import pytest
from colorama import Fore

from app.config.settings import Settings
from app.services.pulse_source_service import BiasLevels
from app.services.reproduce_service import (
    CheckResult,
    ReproduceReport,
    ReproduceService,
    check_addressing,
    check_area,
    check_compile_precision,
    check_counts,
    check_embedding,
    check_energy,
    check_fidelity,
    check_minors,
    check_pulse_source,
    check_reference_design,
    check_reset,
    render_table,
)
from app.utils.constants import MICRO, PHI0, REPRODUCE_TITLE, STATUS_FAIL, STATUS_PASS


@pytest.fixture
def settings():
    with patch("app.config.settings.load_dotenv"), patch.dict("os.environ", {}, clear=True):
        return Settings.from_env()


def _report():
    return ReproduceReport(
        [
            CheckResult("alpha", "1", "1", True),
            CheckResult("beta check", "2", "3", False),
        ]
    )


# -----------------------
# Individual checks
# -----------------------

@pytest.mark.parametrize(
    "check",
    [
        check_counts,
        check_embedding,
        check_minors,
        check_area,
        check_reset,
        check_addressing,
        check_energy,
    ],
)
def test_reference_checks_pass(check):
    result = check()

    assert result.passed, result.actual


def test_reference_design_check_passes_on_small_sample():
    assert check_reference_design(samples=50, seed=3).passed


def test_compile_precision_check_passes():
    result = check_compile_precision(targets=65)

    assert result.passed, result.actual
    assert "0 worse than oracle" in result.actual


def test_pulse_source_check_passes():
    result = check_pulse_source(points=10)

    assert result.passed, result.actual
    assert result.actual.startswith("I_c(0) = 110 uA")


def test_pulse_sweep_runs_at_found_operating_point():
    levels = BiasLevels(i_pwr=45 * MICRO, phi_addr=0.4 * PHI0, phi_trig=0.4 * PHI0)
    report = MagicMock(passed=True)

    with patch("app.services.reproduce_service.find_operating_point", return_value=(levels, report)), patch(
        "app.services.reproduce_service._pulse_sweep_ok", return_value=(0, 1)
    ) as sweep:
        check_pulse_source(points=2)

    assert sweep.call_args.args[1] is levels


def test_fidelity_check_on_few_trials(settings):
    result = check_fidelity(settings, trials=2)

    assert result.passed
    assert result.actual == "2/2"


# -----------------------
# Service
# -----------------------

def test_report_passed_and_failures():
    report = _report()

    assert not report.passed
    assert report.failures() == ["beta check"]
    assert not ReproduceReport().passed


def test_run_times_every_check(settings):
    service = ReproduceService(settings)
    fake = [lambda: CheckResult("one", "x", "x", True), lambda: CheckResult("two", "y", "z", False)]

    with patch.object(ReproduceService, "checks", return_value=fake):
        report = service.run()

    assert [c.name for c in report.checks] == ["one", "two"]
    assert all(c.seconds >= 0 for c in report.checks)
    assert report.failures() == ["two"]


def test_service_lists_eleven_checks(settings):
    assert len(ReproduceService(settings).checks()) == 11


# -----------------------
# Rendering
# -----------------------

def test_render_table_plain():
    text = render_table(_report(), color=False)
    lines = text.splitlines()

    assert lines[0] == REPRODUCE_TITLE
    assert lines[1].split(" | ")[0].strip() == "check"
    assert set(lines[2]) <= {"-", "+"}
    assert lines[3].rstrip().endswith(STATUS_PASS)
    assert lines[4].rstrip().endswith(STATUS_FAIL)
    assert Fore.GREEN not in text


def test_render_table_colours_status():
    text = render_table(_report(), color=True)

    assert Fore.GREEN + STATUS_PASS in text
    assert Fore.RED + STATUS_FAIL in text
