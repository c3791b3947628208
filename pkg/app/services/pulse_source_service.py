"""Quasi-static dc-SQUID SFQ pulse source: critical lines, margins, pulses and reset.

The source is modelled in (flux, bias current) space only. A storage loop
admits one SFQ when the bias on its SQUID leaves the zero-flux critical line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from app.exceptions.custom_exceptions import (
    ConfigurationError,
    MarginError,
    ParameterError,
    ResetConditionError,
    ResetUnreliableError,
)
from app.services.dac_service import DacDesign, DacState, Stage
from app.utils.constants import MICRO, PHI0, PICO
from app.utils.logger import get_logger

log = get_logger(__name__)

_HALF_GRID = 1000
_CHI_LIMIT = math.pi / 2
_RESET_ASYMMETRY = 0.1
_RESET_OVERDRIVE = 1.2


class Line(str, Enum):
    PWR = "PWR"
    ADDR = "ADDR"
    TRIG = "TRIG"


ALL_LINES = frozenset(Line)


@dataclass(frozen=True)
class PulseSourceParams:
    """dc-SQUID source parameters in SI units. r_shunt and beta_c are informational."""

    i_c0: float = 55 * MICRO
    i_c1: float = 55 * MICRO
    l_squid: float = 24 * PICO
    r_shunt: float = 0.58
    beta_c: float = 0.05
    l_main: float = 1000 * PICO

    def __post_init__(self) -> None:
        for name in ("i_c0", "i_c1", "l_squid", "l_main"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"PulseSourceParams.{name} must be positive, got {getattr(self, name)!r}")

    @property
    def beta_sum(self) -> float:
        """L (I_c0 + I_c1) / (2 Phi0)."""
        return self.l_squid * (self.i_c0 + self.i_c1) / (2 * PHI0)

    @property
    def branch_end(self) -> float:
        """Largest flux at which the zero-flux state still exists (Wb)."""
        return PHI0 * (0.5 + self.beta_sum)


@dataclass(frozen=True)
class BiasLevels:
    """PWR current magnitude (A) and ADDR/TRIG flux amplitudes at the SQUID (Wb)."""

    i_pwr: float
    phi_addr: float
    phi_trig: float


@dataclass(frozen=True)
class ZoneMargin:
    name: str
    passed: bool
    current_margin: float
    flux_margin: float | None
    i_low: float
    i_high: float

    @property
    def height(self) -> float:
        return self.i_high - self.i_low


@dataclass
class MarginReport:
    zones: list[ZoneMargin] = field(default_factory=list)
    i_in: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.zones) and all(z.passed for z in self.zones)

    @property
    def min_current_margin(self) -> float:
        return min(z.current_margin for z in self.zones)

    def zone(self, name: str) -> ZoneMargin:
        for z in self.zones:
            if z.name == name:
                return z
        raise KeyError(name)

    def failures(self) -> list[str]:
        return [z.name for z in self.zones if not z.passed]


def _branch_currents(params: PulseSourceParams, phi_b: float, chi: np.ndarray) -> np.ndarray:
    """Largest bias current over the two phase solutions at each half phase difference chi."""
    i_sum = params.i_c0 + params.i_c1
    a = np.cos(chi) * (params.i_c0 - params.i_c1) / 2
    b = -np.sin(chi) * i_sum / 2
    r = np.hypot(a, b)
    c = (PHI0 * chi / np.pi - phi_b) / params.l_squid
    p = i_sum * np.cos(chi)
    q = (params.i_c1 - params.i_c0) * np.sin(chi)

    tiny = 1e-12 * i_sum
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(r > tiny, c / r, np.inf)
    feasible = np.abs(ratio) <= 1
    base = np.arcsin(np.clip(ratio, -1, 1))
    psi = np.arctan2(b, a)
    first = base - psi
    second = np.pi - base - psi
    current = np.maximum(p * np.sin(first) + q * np.cos(first), p * np.sin(second) + q * np.cos(second))
    current = np.where(feasible, current, -np.inf)
    # Circulating current unconstrained: any gamma works.
    degenerate = (r <= tiny) & (np.abs(c) <= tiny)
    return np.where(degenerate, np.hypot(p, q), current)


def _zero_branch_currents(params: PulseSourceParams, phi_b: float, chi: np.ndarray) -> np.ndarray:
    """Branch currents restricted to |chi| <= pi/2; larger chi belongs to the next fluxoid state."""
    return np.where(np.abs(chi) <= _CHI_LIMIT, _branch_currents(params, phi_b, chi), -np.inf)


@lru_cache(maxsize=65536)
def zero_state_critical_current(params: PulseSourceParams, phi_b: float) -> float:
    """Critical current of the zero-fluxoid branch at applied flux phi_b (A).

    Not periodic: falls to zero at the branch end.
    """
    centre = math.pi * phi_b / PHI0
    half_width = math.pi * params.beta_sum
    step = half_width / _HALF_GRID
    chi = centre + np.arange(-_HALF_GRID, _HALF_GRID + 1) * step
    values = _zero_branch_currents(params, phi_b, chi)
    best = int(np.argmax(values))
    grid_max = float(values[best])
    if not math.isfinite(grid_max):
        return 0.0

    def objective(x: float) -> float:
        value = float(_zero_branch_currents(params, phi_b, np.array([x]))[0])
        return -value if math.isfinite(value) else 0.0

    refined = minimize_scalar(
        objective,
        bounds=(max(chi[best] - step, -_CHI_LIMIT), min(chi[best] + step, _CHI_LIMIT)),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return max(grid_max, -float(refined.fun), 0.0)


@lru_cache(maxsize=65536)
def critical_current(params: PulseSourceParams, phi_b: float) -> float:
    """Phi0-periodic critical line: envelope over fluxoid branches (A)."""
    reduced = math.remainder(phi_b, PHI0)
    reach = math.ceil(1 + params.beta_sum)
    return max(zero_state_critical_current(params, reduced + k * PHI0) for k in range(-reach, reach + 1))


def _threshold(params: PulseSourceParams, flux: float, sign: float) -> float:
    """Critical current seen by a bias of the given sign."""
    return zero_state_critical_current(params, flux if sign >= 0 else -flux)


def _flux_root(params: PulseSourceParams, target: float, lo: float, hi: float) -> float | None:
    """Flux in [lo, hi] where the zero-state line equals target, if bracketed."""
    if hi <= lo:
        return None
    f = lambda x: zero_state_critical_current(params, x) - target  # noqa: E731
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0:
        return lo
    if f_lo * f_hi > 0:
        return None
    return brentq(f, lo, hi, xtol=1e-22)


def check_margins(
    params: PulseSourceParams,
    levels: BiasLevels,
    i_in: float,
    with_flux: bool = True,
) -> MarginReport:
    """Verify the programming zones for a full storage-loop current range i_in.

    Loop currents lie in [-i_in/2, +i_in/2], so a powered SQUID sees bias
    magnitudes in [i_pwr - i_in/2, i_pwr + i_in/2]. Both bias signs are checked.
    """
    if not i_in > 0:
        raise ParameterError(f"i_in must be positive, got {i_in!r}")

    half = i_in / 2
    i_pwr = abs(levels.i_pwr)
    low, high = i_pwr - half, i_pwr + half
    phi_a, phi_t = levels.phi_addr, levels.phi_trig
    end = params.branch_end
    both = phi_a + phi_t

    def weakest(flux: float) -> float:
        return min(_threshold(params, flux, 1), _threshold(params, flux, -1))

    def strongest(flux: float) -> float:
        return max(_threshold(params, flux, 1), _threshold(params, flux, -1))

    crit_green = strongest(both)
    crit_both = weakest(both)
    crit_addr = weakest(phi_a)
    crit_trig = weakest(phi_t)
    crit_twist = weakest(phi_a - phi_t)
    crit_zero = weakest(0.0)

    def flux_margin(target: float, start: float, towards: float) -> float | None:
        if not with_flux:
            return None
        if towards >= start:
            root = _flux_root(params, target, start, towards)
            return None if root is None else root - start
        root = _flux_root(params, target, towards, start)
        return None if root is None else start - root

    zones = [
        ZoneMargin("green", crit_green < low, low - crit_green, flux_margin(low, both, 0.0), low, i_pwr),
        ZoneMargin("a_pwr_addr", crit_addr > high, crit_addr - high, flux_margin(high, phi_a, end), i_pwr, high),
        ZoneMargin("b_pwr_trig", crit_trig > high, crit_trig - high, flux_margin(high, phi_t, end), i_pwr, high),
        ZoneMargin("twisted", crit_twist > high, crit_twist - high, None, i_pwr, high),
        ZoneMargin("pwr_only", crit_zero > high, crit_zero - high, None, i_pwr, high),
        ZoneMargin("c_addr_trig", crit_both > half, crit_both - half, flux_margin(half, both, end), -half, half),
    ]
    report = MarginReport(zones=zones, i_in=i_in)
    log.debug("Margins at i_pwr=%.4g i_in=%.4g: %s", i_pwr, i_in, "pass" if report.passed else report.failures())
    return report


def nominal_levels() -> BiasLevels:
    """A passing point for the nominal source: 45 uA PWR, 0.45 Phi0 ADDR and TRIG."""
    return BiasLevels(i_pwr=45 * MICRO, phi_addr=0.45 * PHI0, phi_trig=0.45 * PHI0)


def find_operating_point(
    params: PulseSourceParams,
    i_pwr: float,
    i_in: float,
    samples: int = 121,
) -> tuple[BiasLevels, MarginReport]:
    """Equal ADDR/TRIG amplitude maximising the smallest current margin."""
    best: tuple[float, BiasLevels, MarginReport] | None = None
    for amplitude in np.linspace(0.0, params.branch_end / 2, samples)[1:]:
        levels = BiasLevels(i_pwr=i_pwr, phi_addr=float(amplitude), phi_trig=float(amplitude))
        report = check_margins(params, levels, i_in, with_flux=False)
        if best is None or report.min_current_margin > best[0]:
            best = (report.min_current_margin, levels, report)
    assert best is not None
    best = (best[0], best[1], check_margins(params, best[1], i_in))
    log.info(
        "Operating point: ADDR=TRIG=%.4f Phi0, min current margin %.3g uA (%s)",
        best[1].phi_addr / PHI0, best[0] / MICRO, "pass" if best[2].passed else "fail",
    )
    return best[1], best[2]


def margin_curve(params: PulseSourceParams, samples: int = 201) -> list[tuple[float, float, float]]:
    """(phi_b, zero-state critical current, envelope critical current) over [-Phi0, Phi0]."""
    return [
        (float(phi), zero_state_critical_current(params, float(phi)), critical_current(params, float(phi)))
        for phi in np.linspace(-PHI0, PHI0, samples)
    ]


def _squid_flux(levels: BiasLevels, addr_on: np.ndarray, trig_on: np.ndarray, stage: Stage, polarity: Stage) -> np.ndarray:
    """Flux at one stage's SQUID; TRIG adds to ADDR on the selected stage and subtracts on the other."""
    twist = 1.0 if stage is polarity else -1.0
    return addr_on * levels.phi_addr + twist * trig_on * levels.phi_trig


def _critical_lookup(params: PulseSourceParams, flux: np.ndarray) -> np.ndarray:
    values, inverse = np.unique(flux, return_inverse=True)
    table = np.array([zero_state_critical_current(params, float(v)) for v in values])
    return table[inverse]


def step_counts(
    counts: dict[Stage, np.ndarray],
    inductances: dict[Stage, np.ndarray],
    capacities: dict[Stage, np.ndarray],
    pwr_on: np.ndarray,
    addr_on: np.ndarray,
    trig_on: np.ndarray,
    polarity: Stage,
    sfq_sign: int,
    params: PulseSourceParams,
    levels: BiasLevels,
) -> dict[Stage, np.ndarray]:
    """One pulse applied to many storage-loop pairs at once.

    Each array holds one entry per DAC; line masks say which lines reach it.
    """
    updated = {}
    for stage in Stage:
        n = counts[stage]
        flux = _squid_flux(levels, addr_on.astype(float), trig_on.astype(float), stage, polarity)
        bias = pwr_on * sfq_sign * abs(levels.i_pwr) - n * PHI0 / inductances[stage]
        threshold = np.where(bias >= 0, _critical_lookup(params, flux), _critical_lookup(params, -flux))
        crossed = (bias != 0) & (np.abs(bias) > threshold)
        moved = n + np.sign(bias).astype(n.dtype) * crossed
        updated[stage] = np.where(np.abs(moved) > capacities[stage], n, moved)
    return updated


def pulse_response(
    design: DacDesign,
    state: DacState,
    lines: Iterable[Line],
    polarity: Stage,
    sfq_sign: int,
    params: PulseSourceParams,
    levels: BiasLevels,
) -> DacState:
    """State after one ramp of the given subset of lines."""
    if sfq_sign not in (-1, 1):
        raise ParameterError(f"sfq_sign must be +1 or -1, got {sfq_sign}")
    design.check_state(state)
    active = frozenset(lines)
    counts = {s: np.array([state.count(s)], dtype=np.int64) for s in Stage}
    result = step_counts(
        counts,
        {s: np.array([design.inductance(s)]) for s in Stage},
        {s: np.array([design.capacity(s)]) for s in Stage},
        np.array([Line.PWR in active]),
        np.array([Line.ADDR in active]),
        np.array([Line.TRIG in active]),
        polarity,
        sfq_sign,
        params,
        levels,
    )
    return DacState(m_lsd=int(result[Stage.LSD][0]), m_msd=int(result[Stage.MSD][0]))


def require_margins(params: PulseSourceParams, levels: BiasLevels, i_in: float) -> MarginReport:
    report = check_margins(params, levels, i_in)
    if not report.passed:
        raise MarginError(f"Bias levels fail margining in zone(s): {', '.join(report.failures())}")
    return report


def apply_pulse(
    design: DacDesign,
    state: DacState,
    stage: Stage,
    sfq_sign: int,
    params: PulseSourceParams,
    levels: BiasLevels,
) -> DacState:
    """Fully addressed pulse towards `stage`; unchanged at capacity."""
    require_margins(params, levels, design.loop_current_span)
    return pulse_response(design, state, ALL_LINES, stage, sfq_sign, params, levels)


def reset_levels(params: PulseSourceParams) -> BiasLevels:
    """PWR off, ADDR+TRIG driven past the end of the zero-state branch."""
    amplitude = _RESET_OVERDRIVE * params.branch_end / 2
    return BiasLevels(i_pwr=0.0, phi_addr=amplitude, phi_trig=amplitude)


def check_reset(params: PulseSourceParams, levels: BiasLevels) -> None:
    if levels.i_pwr != 0:
        raise ResetConditionError(f"Reset needs I_PWR = 0, got {levels.i_pwr!r} A")
    if not levels.phi_addr + levels.phi_trig > params.branch_end:
        raise ResetConditionError(
            f"Reset needs ADDR+TRIG above {params.branch_end / PHI0:.4f} Phi0, got "
            f"{(levels.phi_addr + levels.phi_trig) / PHI0:.4f} Phi0"
        )
    limit = _RESET_ASYMMETRY * PHI0 / params.l_main
    if abs(params.i_c0 - params.i_c1) > limit:
        raise ResetUnreliableError(
            f"Junction asymmetry {abs(params.i_c0 - params.i_c1) / MICRO:.4g} uA exceeds {limit / MICRO:.4g} uA; "
            "reset may leave residual flux"
        )


@dataclass(frozen=True)
class ResetPulses:
    lsd: int
    msd: int

    @property
    def total(self) -> int:
        return self.lsd + self.msd


def reset(
    design: DacDesign,
    state: DacState,
    params: PulseSourceParams,
    levels: BiasLevels,
) -> tuple[DacState, ResetPulses]:
    """Ramp ADDR and TRIG with PWR off, alternating the selected stage, until both loops are empty.

    Each ramp lets an SFQ out of every loop whose SQUID is past its critical
    line; pulses are counted per stage as they are admitted.
    """
    check_reset(params, levels)
    design.check_state(state)
    pulses = {stage: 0 for stage in Stage}
    reset_lines = (Line.ADDR, Line.TRIG)
    while not state.is_zero:
        before = state
        for polarity in Stage:
            if state.count(polarity) == 0:
                continue
            after = pulse_response(design, state, reset_lines, polarity, 1, params, levels)
            for stage in Stage:
                if abs(after.count(stage)) < abs(state.count(stage)):
                    pulses[stage] += 1
                elif after.count(stage) != state.count(stage):
                    raise ResetUnreliableError(f"Reset ramp moved {stage.name} away from zero: {state} -> {after}")
            state = after
        if state == before:
            raise ResetUnreliableError(f"Reset stalled at {state}")
    log.debug("Reset admitted %s LSD and %s MSD pulses", pulses[Stage.LSD], pulses[Stage.MSD])
    return state, ResetPulses(lsd=pulses[Stage.LSD], msd=pulses[Stage.MSD])


def reset_counts(
    counts: dict[Stage, np.ndarray],
    inductances: dict[Stage, np.ndarray],
    capacities: dict[Stage, np.ndarray],
    params: PulseSourceParams,
    levels: BiasLevels,
) -> tuple[dict[Stage, np.ndarray], int]:
    """Chip-wide reset of many DACs at once; returns the emptied counts and the pulses admitted."""
    check_reset(params, levels)
    size = len(counts[Stage.LSD])
    off, on = np.zeros(size, dtype=bool), np.ones(size, dtype=bool)
    admitted = 0
    while any(counts[s].any() for s in Stage):
        remaining = sum(int(np.abs(counts[s]).sum()) for s in Stage)
        for polarity in Stage:
            counts = step_counts(counts, inductances, capacities, off, on, on, polarity, 1, params, levels)
        left = sum(int(np.abs(counts[s]).sum()) for s in Stage)
        if left >= remaining:
            raise ResetUnreliableError(f"Chip reset stalled with {left} SFQ stored")
        admitted += remaining - left
    return counts, admitted
