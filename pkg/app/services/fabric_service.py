"""XYZ-addressed DAC fabric: slot layout, line assignment, programs and simulation.

Each tile holds an (m+1) x (m+1) grid of three-DAC plaquettes with the corner
plaquette (m, m) left empty:

    (r, c), r, c < m : [V c knob r, internal (H r, V c), H r knob c]
    (r, m)           : [H r knob m, external H r -> right, H r knob m+1]
    (m, c)           : [V c knob m, external V c -> down, V c knob m+1]

Within a tile TRIG follows the plaquette row and ADDR = 3 * plaquette column +
position. Tiles of a 2x2 power domain use the TRIG bank of their row parity
and the ADDR bank of their column parity.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from app.exceptions.custom_exceptions import CompileError, ConfigurationError, ParameterError, SlotLookupError
from app.services.chimera_service import Coupler, CouplerKind, Orientation, QubitId
from app.services.dac_service import DacDesign, DacState, Stage
from app.services.pulse_source_service import (
    ALL_LINES,
    BiasLevels,
    Line,
    PulseSourceParams,
    require_margins,
    reset_counts,
    reset_levels,
    step_counts,
)
from app.utils.constants import MICRO, PHI0
from app.utils.logger import get_logger

log = get_logger(__name__)

KNOB_NAMES = ("flux_bias", "ccjj_major", "ccjj_minor_0", "ccjj_minor_1", "l_tuner", "pcc")
_KNOB_STAGES = {"flux_bias": 3, "ccjj_major": 1}
SLOTS_PER_PLAQUETTE = 3


class SlotRole(str, Enum):
    QUBIT_CONTROL = "qubit-control"
    INTERNAL_COUPLER = "internal-coupler"
    EXTERNAL_COUPLER = "external-coupler"


class EventKind(str, Enum):
    RESET = "reset"
    PULSE = "pulse"


def knob_name(index: int) -> str:
    return KNOB_NAMES[index] if index < len(KNOB_NAMES) else f"knob_{index}"


@dataclass(frozen=True, order=True)
class DacSlot:
    """One DAC position; unbound boundary slots have target None."""

    tile_row: int
    tile_col: int
    plaq_row: int
    plaq_col: int
    position: int
    role: SlotRole = field(compare=False)
    target: QubitId | Coupler | None = field(default=None, compare=False)
    knob: int | None = field(default=None, compare=False)

    @property
    def populated(self) -> bool:
        return self.target is not None

    @property
    def label(self) -> str:
        base = f"t{self.tile_row},{self.tile_col}/p{self.plaq_row},{self.plaq_col}/{self.position}"
        if self.knob is not None:
            return f"{base}:{self.target}:{knob_name(self.knob)}"
        return f"{base}:{self.target if self.target is not None else 'unbound'}"

    @property
    def stage_count(self) -> int:
        """Stages of the instantiated DAC (0 when unbound)."""
        if not self.populated:
            return 0
        if self.knob is not None:
            return _KNOB_STAGES.get(knob_name(self.knob), 2)
        return 2


@dataclass(frozen=True, order=True)
class DacAddress:
    pwr_domain: int
    addr_line: int
    trig_line: int


@dataclass(frozen=True)
class ProgramEvent:
    kind: EventKind
    pwr_domain: int = 0
    pwr_sign: int = 1
    addr_line: int = 0
    trig_line: int = 0
    polarity: Stage = Stage.LSD
    pulse_count: int = 0
    active_lines: frozenset[Line] = ALL_LINES

    @property
    def address(self) -> DacAddress:
        return DacAddress(self.pwr_domain, self.addr_line, self.trig_line)


RESET_EVENT = ProgramEvent(kind=EventKind.RESET)


@dataclass(frozen=True)
class ProgramSequence:
    events: tuple[ProgramEvent, ...] = ()

    def __add__(self, other: "ProgramSequence") -> "ProgramSequence":
        return ProgramSequence(self.events + other.events)

    def __len__(self) -> int:
        return len(self.events)

    @property
    def pulse_events(self) -> list[ProgramEvent]:
        return [e for e in self.events if e.kind is EventKind.PULSE]


@dataclass
class SimulationResult:
    states: dict[DacSlot, DacState]
    disturbed: list[tuple[int, DacSlot]] = field(default_factory=list)
    reset_pulses: int = 0


@dataclass
class EnergyReport:
    total_sfq: int
    energy_per_sfq: float
    total_energy: float
    per_domain: dict[int, int]
    reset_sfq: int = 0


@dataclass(frozen=True)
class LineBudget:
    lower_bound: int
    actual: int | None = None


@dataclass(frozen=True)
class DacCensus:
    slots: int
    slot_stages: int
    bound_slots: int
    unbound_slots: int
    single_stage: int
    two_stage: int
    three_stage: int

    @property
    def dacs(self) -> int:
        return self.single_stage + self.two_stage + self.three_stage

    @property
    def dac_stages(self) -> int:
        return self.single_stage + 2 * self.two_stage + 3 * self.three_stage


def _tile_slots(n: int, m: int, row: int, col: int) -> list[DacSlot]:
    h, v = Orientation.HORIZONTAL, Orientation.VERTICAL
    slots = []
    for r in range(m + 1):
        for c in range(m + 1):
            if r < m and c < m:
                qubit_v, qubit_h = QubitId(row, col, v, c), QubitId(row, col, h, r)
                contents = [
                    (SlotRole.QUBIT_CONTROL, qubit_v, r),
                    (SlotRole.INTERNAL_COUPLER, Coupler(qubit_h, qubit_v, CouplerKind.INTERNAL), None),
                    (SlotRole.QUBIT_CONTROL, qubit_h, c),
                ]
            elif r < m and c == m:
                qubit = QubitId(row, col, h, r)
                right = Coupler(qubit, QubitId(row, col + 1, h, r), CouplerKind.EXTERNAL) if col + 1 < n else None
                contents = [
                    (SlotRole.QUBIT_CONTROL, qubit, m),
                    (SlotRole.EXTERNAL_COUPLER, right, None),
                    (SlotRole.QUBIT_CONTROL, qubit, m + 1),
                ]
            elif r == m and c < m:
                qubit = QubitId(row, col, v, c)
                down = Coupler(qubit, QubitId(row + 1, col, v, c), CouplerKind.EXTERNAL) if row + 1 < n else None
                contents = [
                    (SlotRole.QUBIT_CONTROL, qubit, m),
                    (SlotRole.EXTERNAL_COUPLER, down, None),
                    (SlotRole.QUBIT_CONTROL, qubit, m + 1),
                ]
            else:
                continue
            for position, (role, target, knob) in enumerate(contents):
                slots.append(DacSlot(row, col, r, c, position, role, target, knob))
    return slots


@dataclass(frozen=True)
class Fabric:
    """Immutable slot layout and line assignment of an n x n tile grid."""

    n: int
    m: int
    slots: tuple[DacSlot, ...]
    _by_address: Mapping[DacAddress, DacSlot] = field(repr=False, compare=False)
    _address_of: Mapping[DacSlot, DacAddress] = field(repr=False, compare=False)
    _by_target: Mapping[tuple, DacSlot] = field(repr=False, compare=False)

    @property
    def num_pwr(self) -> int:
        return (self.n // 2) ** 2

    @property
    def num_addr(self) -> int:
        return 2 * SLOTS_PER_PLAQUETTE * (self.m + 1)

    @property
    def num_trig(self) -> int:
        return 2 * (self.m + 1)

    @property
    def total_lines(self) -> int:
        return self.num_addr + self.num_trig + self.num_pwr

    @property
    def slots_per_tile(self) -> int:
        return SLOTS_PER_PLAQUETTE * ((self.m + 1) ** 2 - 1)

    def slot_at(self, tile_row: int, tile_col: int, plaq_row: int, plaq_col: int, position: int) -> DacSlot:
        probe = DacSlot(tile_row, tile_col, plaq_row, plaq_col, position, SlotRole.QUBIT_CONTROL)
        try:
            return self._by_address[self._address_of[probe]]
        except KeyError:
            raise SlotLookupError(
                f"No slot at tile ({tile_row},{tile_col}) plaquette ({plaq_row},{plaq_col}) position {position}"
            ) from None

    def slot_for_qubit(self, qubit: QubitId, knob: int = 0) -> DacSlot:
        try:
            return self._by_target[(qubit, knob)]
        except KeyError:
            raise SlotLookupError(f"No {knob_name(knob)} DAC for qubit {qubit}") from None

    def slot_for_coupler(self, coupler: Coupler) -> DacSlot:
        try:
            return self._by_target[(coupler,)]
        except KeyError:
            raise SlotLookupError(f"No DAC for coupler {coupler}") from None

    def census(self) -> DacCensus:
        stages = Counter(slot.stage_count for slot in self.slots)
        bound = sum(1 for slot in self.slots if slot.populated)
        return DacCensus(
            slots=len(self.slots),
            slot_stages=2 * len(self.slots),
            bound_slots=bound,
            unbound_slots=len(self.slots) - bound,
            single_stage=stages[1],
            two_stage=stages[2],
            three_stage=stages[3],
        )


def _address(n: int, m: int, slot: DacSlot) -> DacAddress:
    trig = slot.plaq_row + (slot.tile_row % 2) * (m + 1)
    addr = SLOTS_PER_PLAQUETTE * slot.plaq_col + slot.position + (slot.tile_col % 2) * SLOTS_PER_PLAQUETTE * (m + 1)
    pwr = (slot.tile_row // 2) * (n // 2) + slot.tile_col // 2
    return DacAddress(pwr, addr, trig)


def build_fabric(n_tiles_per_side: int, m: int = 4) -> Fabric:
    """Slots and addressing for an n x n Chimera grid in 2x2 power domains."""
    n = n_tiles_per_side
    if not isinstance(n, int) or n < 2 or n % 2:
        raise ConfigurationError(f"Fabric needs an even number of tiles per side (2x2 power domains), got {n!r}")
    if not isinstance(m, int) or m < 1:
        raise ConfigurationError(f"Shore size must be a positive integer, got {m!r}")

    slots = tuple(slot for row in range(n) for col in range(n) for slot in _tile_slots(n, m, row, col))
    by_address, address_of, by_target = {}, {}, {}
    for slot in slots:
        address = _address(n, m, slot)
        if address in by_address:
            raise ConfigurationError(f"Address {address} assigned twice")
        by_address[address] = slot
        address_of[slot] = address
        if slot.knob is not None:
            by_target[(slot.target, slot.knob)] = slot
        elif slot.target is not None:
            by_target[(slot.target,)] = slot

    fabric = Fabric(n, m, slots, by_address, address_of, by_target)
    log.info(
        "Built fabric %sx%s (m=%s): %s slots, %s PWR domains, %s lines",
        n, n, m, len(slots), fabric.num_pwr, fabric.total_lines,
    )
    return fabric


def address_of(fabric: Fabric, slot: DacSlot) -> DacAddress:
    try:
        return fabric._address_of[slot]
    except KeyError:
        raise SlotLookupError(f"Slot {slot.label} is not part of this fabric") from None


def activate(fabric: Fabric, address: DacAddress) -> frozenset[DacSlot]:
    """Slots whose PWR, ADDR and TRIG lines are all in `address` (zero or one)."""
    slot = fabric._by_address.get(address)
    return frozenset() if slot is None else frozenset({slot})


def line_budget(n_dacs: int, fabric: Fabric | None = None) -> LineBudget:
    """Fewest lines L with (L/3)^3 >= n_dacs, i.e. ceil(3 * cbrt(n_dacs))."""
    if n_dacs < 1:
        raise ParameterError(f"n_dacs must be >= 1, got {n_dacs}")
    # Smallest L with L^3 >= 27 n, checked in integers.
    lines = max(1, math.floor(3 * n_dacs ** (1 / 3)) - 2)
    while lines**3 < 27 * n_dacs:
        lines += 1
    return LineBudget(lower_bound=lines, actual=fabric.total_lines if fabric is not None else None)


DesignMap = DacDesign | Mapping[DacSlot, DacDesign]


def _design_for(designs: DesignMap, slot: DacSlot) -> DacDesign:
    if isinstance(designs, DacDesign):
        return designs
    try:
        return designs[slot]
    except KeyError:
        raise CompileError(f"No DAC design given for slot {slot.label}") from None


def compile_program(fabric: Fabric, targets: Mapping[DacSlot, DacState], designs: DesignMap) -> ProgramSequence:
    """Global reset, then one event per nonzero stage count in slot order."""
    events = [RESET_EVENT]
    for slot in sorted(targets):
        state = targets[slot]
        address = address_of(fabric, slot)
        design = _design_for(designs, slot)
        for stage in Stage:
            count = state.count(stage)
            if abs(count) > design.capacity(stage):
                raise CompileError(
                    f"Slot {slot.label} {stage.value} target {count} exceeds capacity {design.capacity(stage)}"
                )
            if count == 0:
                continue
            events.append(
                ProgramEvent(
                    kind=EventKind.PULSE,
                    pwr_domain=address.pwr_domain,
                    pwr_sign=1 if count > 0 else -1,
                    addr_line=address.addr_line,
                    trig_line=address.trig_line,
                    polarity=stage,
                    pulse_count=abs(count),
                )
            )
    sequence = ProgramSequence(tuple(events))
    log.info("Compiled program for %s slot targets: %s events", len(targets), len(sequence))
    return sequence


def simulate(
    fabric: Fabric,
    sequence: ProgramSequence,
    params: PulseSourceParams,
    levels: BiasLevels,
    designs: DesignMap,
    initial: Mapping[DacSlot, DacState] | None = None,
) -> SimulationResult:
    """Replay a program over every slot at once.

    Every pulse acts on all slots reached by at least one active line; only a
    slot whose three lines are all active should move.
    """
    slot_designs = [_design_for(designs, slot) for slot in fabric.slots]
    span = max(d.loop_current_span for d in slot_designs)
    require_margins(params, levels, span)

    addresses = [fabric._address_of[slot] for slot in fabric.slots]
    pwr = np.array([a.pwr_domain for a in addresses])
    addr = np.array([a.addr_line for a in addresses])
    trig = np.array([a.trig_line for a in addresses])
    inductances = {s: np.array([d.inductance(s) for d in slot_designs]) for s in Stage}
    capacities = {s: np.array([d.capacity(s) for d in slot_designs]) for s in Stage}
    counts = {s: np.zeros(len(fabric.slots), dtype=np.int64) for s in Stage}
    for i, slot in enumerate(fabric.slots):
        state = (initial or {}).get(slot)
        if state is not None:
            slot_designs[i].check_state(state)
            for s in Stage:
                counts[s][i] = state.count(s)

    disturbed: list[tuple[int, DacSlot]] = []
    reset_pulses = 0
    for index, event in enumerate(sequence.events):
        if event.kind is EventKind.RESET:
            counts, admitted = reset_counts(counts, inductances, capacities, params, reset_levels(params))
            reset_pulses += admitted
            continue
        if event.pulse_count < 1:
            raise ParameterError(f"Event {index} has pulse_count {event.pulse_count}")

        pwr_on = (pwr == event.pwr_domain) & (Line.PWR in event.active_lines)
        addr_on = (addr == event.addr_line) & (Line.ADDR in event.active_lines)
        trig_on = (trig == event.trig_line) & (Line.TRIG in event.active_lines)
        reached = pwr_on | addr_on | trig_on
        full = pwr_on & addr_on & trig_on
        before = {s: counts[s].copy() for s in Stage}
        idx = np.flatnonzero(reached)
        for _ in range(event.pulse_count):
            stepped = step_counts(
                {s: counts[s][idx] for s in Stage},
                {s: inductances[s][idx] for s in Stage},
                {s: capacities[s][idx] for s in Stage},
                pwr_on[idx],
                addr_on[idx],
                trig_on[idx],
                event.polarity,
                event.pwr_sign,
                params,
                levels,
            )
            for s in Stage:
                counts[s][idx] = stepped[s]
        changed = np.zeros(len(fabric.slots), dtype=bool)
        for s in Stage:
            changed |= counts[s] != before[s]
        for i in np.flatnonzero(changed & ~full):
            disturbed.append((index, fabric.slots[i]))

    states = {
        slot: DacState(m_lsd=int(counts[Stage.LSD][i]), m_msd=int(counts[Stage.MSD][i]))
        for i, slot in enumerate(fabric.slots)
    }
    if disturbed:
        log.warning("Simulation disturbed %s non-addressed slot(s)", len(disturbed))
    log.info("Simulated %s events over %s slots", len(sequence), len(fabric.slots))
    return SimulationResult(states=states, disturbed=disturbed, reset_pulses=reset_pulses)


def energy_per_sfq(i_c: float) -> float:
    """Two junction flips per admitted SFQ: 2 * I_c * Phi0 (J)."""
    if not i_c > 0:
        raise ParameterError(f"i_c must be positive, got {i_c!r}")
    return 2 * i_c * PHI0


def energy_of(sequence: ProgramSequence, i_c: float = 55 * MICRO, reset_sfq: int = 0) -> EnergyReport:
    per_sfq = energy_per_sfq(i_c)
    per_domain: dict[int, int] = defaultdict(int)
    for event in sequence.pulse_events:
        per_domain[event.pwr_domain] += event.pulse_count
    total = sum(per_domain.values()) + reset_sfq
    return EnergyReport(
        total_sfq=total,
        energy_per_sfq=per_sfq,
        total_energy=total * per_sfq,
        per_domain=dict(sorted(per_domain.items())),
        reset_sfq=reset_sfq,
    )


def reprogram_energy(stages: int, sfq_per_stage: int, i_c: float = 55 * MICRO) -> float:
    """Energy (J) to move sfq_per_stage quanta through every stage."""
    return stages * sfq_per_stage * energy_per_sfq(i_c)


def slots_of_tile(fabric: Fabric, row: int, col: int) -> list[DacSlot]:
    return [s for s in fabric.slots if (s.tile_row, s.tile_col) == (row, col)]


def triples(fabric: Fabric) -> Iterable[DacAddress]:
    """Every (PWR, ADDR, TRIG) combination of the fabric's lines."""
    for pwr in range(fabric.num_pwr):
        for addr in range(fabric.num_addr):
            for trig in range(fabric.num_trig):
                yield DacAddress(pwr, addr, trig)
