from dataclasses import replace
from unittest.mock import patch

import numpy as np
import pytest

from app.exceptions.custom_exceptions import (
    ConfigurationError,
    MarginError,
    ParameterError,
    ResetConditionError,
    ResetUnreliableError,
)
from app.services.dac_service import DacState, Stage, reference_design
from app.services.programming_service import problem_dac_design
from app.services.pulse_source_service import (
    ALL_LINES,
    BiasLevels,
    Line,
    PulseSourceParams,
    apply_pulse,
    check_margins,
    check_reset,
    critical_current,
    find_operating_point,
    margin_curve,
    nominal_levels,
    pulse_response,
    require_margins,
    reset,
    reset_counts,
    reset_levels,
    zero_state_critical_current,
)
from app.utils.constants import MICRO, PHI0

I_IN = 27.5 * MICRO


@pytest.fixture
def params():
    return PulseSourceParams()


@pytest.fixture
def design():
    return problem_dac_design()


# -----------------------
# Critical line
# -----------------------

def test_critical_current_at_zero_flux_is_sum_of_junctions(params):
    assert critical_current(params, 0.0) == pytest.approx(110 * MICRO, rel=1e-9)
    assert zero_state_critical_current(params, 0.0) == pytest.approx(110 * MICRO, rel=1e-9)


@pytest.mark.parametrize("fraction", [0.1, 0.25, 0.4, 0.5, 0.73])
def test_critical_line_is_periodic_and_even(params, fraction):
    phi = fraction * PHI0

    assert critical_current(params, phi + PHI0) == pytest.approx(critical_current(params, phi), rel=1e-6)
    assert critical_current(params, -phi) == pytest.approx(critical_current(params, phi), rel=1e-6)


def test_critical_line_is_suppressed_but_positive_at_half_flux(params):
    half = critical_current(params, PHI0 / 2)

    assert 0 < half < critical_current(params, 0.0)


def test_zero_state_line_falls_with_flux(params):
    values = [zero_state_critical_current(params, f * PHI0) for f in (0.0, 0.25, 0.5, 0.6, 0.75, 0.9, 1.0)]

    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-1] > 0


def test_zero_state_line_ends_at_branch_end(params):
    near_end = zero_state_critical_current(params, 0.9 * PHI0)

    assert near_end < critical_current(params, 0.9 * PHI0) / 2
    assert zero_state_critical_current(params, params.branch_end + 0.05 * PHI0) == 0.0
    assert zero_state_critical_current(params, -(params.branch_end + 0.05 * PHI0)) == 0.0


def test_margin_curve_samples(params):
    curve = margin_curve(params, samples=11)

    assert len(curve) == 11
    assert curve[0][0] == pytest.approx(-PHI0)
    assert curve[5][2] == pytest.approx(110 * MICRO, rel=1e-6)
    assert all(envelope >= zero - 1e-15 for _, zero, envelope in curve)


def test_params_must_be_positive():
    with pytest.raises(ConfigurationError):
        PulseSourceParams(l_squid=0.0)


# -----------------------
# Margins
# -----------------------

def test_nominal_levels_pass_every_zone(params):
    report = check_margins(params, nominal_levels(), I_IN)

    assert report.passed
    assert report.failures() == []
    assert report.min_current_margin > 0
    assert {z.name for z in report.zones} == {"green", "a_pwr_addr", "b_pwr_trig", "twisted", "pwr_only", "c_addr_trig"}


def test_zone_heights_follow_loop_current_range(params):
    report = check_margins(params, nominal_levels(), I_IN)

    assert report.zone("c_addr_trig").height == pytest.approx(I_IN)
    assert report.zone("green").height == pytest.approx(I_IN / 2)
    assert report.zone("pwr_only").height == pytest.approx(I_IN / 2)


def test_no_address_flux_fails_green_zone(params):
    report = check_margins(params, BiasLevels(i_pwr=45 * MICRO, phi_addr=0.0, phi_trig=0.0), I_IN)

    assert not report.passed
    assert "green" in report.failures()


def test_pwr_above_critical_current_fails_pwr_only(params):
    report = check_margins(params, replace(nominal_levels(), i_pwr=121 * MICRO), I_IN)

    assert "pwr_only" in report.failures()


def test_margins_without_flux_skip_flux_margins(params):
    report = check_margins(params, nominal_levels(), I_IN, with_flux=False)

    assert all(z.flux_margin is None for z in report.zones)


def test_margins_reject_non_positive_range(params):
    with pytest.raises(ParameterError):
        check_margins(params, nominal_levels(), 0.0)


def test_require_margins_raises_on_failure(params):
    with pytest.raises(MarginError, match="green"):
        require_margins(params, BiasLevels(i_pwr=45 * MICRO, phi_addr=0.0, phi_trig=0.0), I_IN)


def test_find_operating_point_uses_equal_amplitudes(params):
    levels, report = find_operating_point(params, 45 * MICRO, I_IN, samples=61)

    assert levels.phi_addr == levels.phi_trig
    assert report.passed


# -----------------------
# Pulses
# -----------------------

def test_full_address_pulse_adds_one_quantum(params, design):
    assert apply_pulse(design, DacState(), Stage.MSD, 1, params, nominal_levels()) == DacState(m_msd=1)
    assert apply_pulse(design, DacState(), Stage.LSD, -1, params, nominal_levels()) == DacState(m_lsd=-1)


def test_pulse_sequence_accumulates(params, design):
    state = DacState()
    for stage in (Stage.LSD, Stage.MSD, Stage.LSD):
        state = apply_pulse(design, state, stage, 1, params, nominal_levels())

    assert state == DacState(m_lsd=2, m_msd=1)


def test_pulse_at_capacity_leaves_state_unchanged(params, design):
    full = DacState(m_msd=design.max_sfq_msd)

    assert apply_pulse(design, full, Stage.MSD, 1, params, nominal_levels()) == full


@pytest.mark.parametrize(
    "lines",
    [
        set(),
        {Line.PWR},
        {Line.ADDR},
        {Line.TRIG},
        {Line.PWR, Line.ADDR},
        {Line.PWR, Line.TRIG},
        {Line.ADDR, Line.TRIG},
    ],
)
def test_partial_line_subsets_do_not_switch(params, design, lines):
    state = DacState(m_lsd=2, m_msd=-3)

    for polarity in Stage:
        for sign in (1, -1):
            assert pulse_response(design, state, lines, polarity, sign, params, nominal_levels()) == state


def test_pulse_response_rejects_bad_sign(params, design):
    with pytest.raises(ParameterError):
        pulse_response(design, DacState(), ALL_LINES, Stage.LSD, 0, params, nominal_levels())


def test_wide_loop_range_fails_margins(params):
    # 16 SFQ in a 1 nH loop spans about 66 uA.
    with pytest.raises(MarginError):
        apply_pulse(reference_design(), DacState(), Stage.MSD, 1, params, nominal_levels())


# -----------------------
# Reset
# -----------------------

def test_reset_counts_one_pulse_per_quantum(params):
    state, pulses = reset(reference_design(), DacState(m_lsd=-16, m_msd=7), params, reset_levels(params))

    assert state == DacState()
    assert (pulses.lsd, pulses.msd, pulses.total) == (16, 7, 23)


def test_reset_ramps_each_loaded_stage_in_turn(params):
    with patch("app.services.pulse_source_service.pulse_response", wraps=pulse_response) as ramp:
        reset(reference_design(), DacState(m_lsd=-16, m_msd=7), params, reset_levels(params))

    assert ramp.call_count == 23
    assert {c.args[2] for c in ramp.call_args_list} == {(Line.ADDR, Line.TRIG)}


def test_lopsided_reset_flux_empties_both_loops_per_ramp(params):
    # ADDR - TRIG is also past the branch end, so the unselected loop resets too.
    levels = BiasLevels(i_pwr=0.0, phi_addr=0.01 * PHI0, phi_trig=1.37 * PHI0)

    with patch("app.services.pulse_source_service.pulse_response", wraps=pulse_response) as ramp:
        state, pulses = reset(reference_design(), DacState(m_lsd=-16, m_msd=7), params, levels)

    assert state.is_zero
    assert (pulses.lsd, pulses.msd) == (16, 7)
    assert ramp.call_count == 16


def test_reset_that_admits_nothing_is_unreliable(params):
    stuck = DacState(m_lsd=3)

    with patch("app.services.pulse_source_service.pulse_response", return_value=stuck):
        with pytest.raises(ResetUnreliableError, match="stalled"):
            reset(reference_design(), stuck, params, reset_levels(params))


def test_reset_is_idempotent(params):
    state, _ = reset(reference_design(), DacState(m_lsd=5, m_msd=-9), params, reset_levels(params))
    again, pulses = reset(reference_design(), state, params, reset_levels(params))

    assert again == state == DacState()
    assert pulses.total == 0


def test_reset_counts_empties_many_dacs_at_once(params):
    design = reference_design()
    counts = {Stage.LSD: np.array([-16, 0, 5]), Stage.MSD: np.array([7, 3, 0])}
    inductances = {s: np.full(3, design.inductance(s)) for s in Stage}
    capacities = {s: np.full(3, design.capacity(s)) for s in Stage}

    emptied, admitted = reset_counts(counts, inductances, capacities, params, reset_levels(params))

    assert all(not emptied[s].any() for s in Stage)
    assert admitted == 31


def test_reset_of_empty_dac_needs_no_pulses(params):
    state, pulses = reset(reference_design(), DacState(), params, reset_levels(params))

    assert state.is_zero
    assert pulses.total == 0


def test_reset_levels_are_valid(params):
    levels = reset_levels(params)

    assert levels.i_pwr == 0
    assert levels.phi_addr + levels.phi_trig > params.branch_end
    check_reset(params, levels)


def test_reset_requires_power_off(params):
    with pytest.raises(ResetConditionError):
        check_reset(params, replace(reset_levels(params), i_pwr=1 * MICRO))


def test_reset_requires_flux_past_branch_end(params):
    with pytest.raises(ResetConditionError):
        check_reset(params, BiasLevels(i_pwr=0.0, phi_addr=0.45 * PHI0, phi_trig=0.45 * PHI0))


def test_asymmetric_junctions_make_reset_unreliable():
    skewed = PulseSourceParams(i_c0=56 * MICRO)

    with pytest.raises(ResetUnreliableError):
        reset(reference_design(), DacState(m_msd=1), skewed, reset_levels(skewed))
