"""Coordinates weights -> DAC targets -> program -> simulation -> readback."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx
import numpy as np

from app.config.settings import Settings
from app.exceptions.custom_exceptions import CompileError
from app.services.chimera_service import ChimeraSpec, Coupler, CouplerKind, HardwareGraph, QubitId, build_chimera
from app.services.dac_service import (
    DacDesign,
    DacState,
    InductanceMatrix,
    compile_target,
    derive_params,
    output_flux,
)
from app.services.embedding_service import Embedding, embed_complete
from app.services.fabric_service import (
    EnergyReport,
    Fabric,
    ProgramSequence,
    SimulationResult,
    build_fabric,
    compile_program,
    energy_of,
    simulate,
)
from app.services.ising_service import (
    IsingProblem,
    brute_force,
    complete_problem,
    decode,
    embed_problem,
    energy,
    random_problem,
)
from app.services.pulse_source_service import BiasLevels, PulseSourceParams, nominal_levels
from app.utils.constants import MICRO, WEIGHT_DENOMINATOR
from app.utils.logger import get_logger
from app.utils.utils import round_half_away

log = get_logger(__name__)

FIDELITY_MAX_NUMERATOR = 2


def problem_dac_design() -> DacDesign:
    """Two-stage design for problem weights: 6 SFQ per 1 nH loop, W_MSD=20, W_LSD=5 mPhi0."""
    return derive_params(InductanceMatrix.from_ph(1000, 1000, 100, 50, 6, 20), 13.75 * MICRO)


def full_chip_design() -> DacDesign:
    """8-bit design (16 SFQ per loop, ratio 16) whose loop currents stay inside the nominal margins."""
    return derive_params(InductanceMatrix.from_ph(2500, 2500, 100, 125, 5.625, 50), 13.75 * MICRO)


def _flux_step(design: DacDesign) -> float:
    return design.range / WEIGHT_DENOMINATOR


def _weight_slot(fabric: Fabric, node: QubitId | tuple[QubitId, QubitId]):
    if isinstance(node, QubitId):
        return fabric.slot_for_qubit(node, knob=0)
    a, b = node
    kind = CouplerKind.INTERNAL if a.orientation != b.orientation else CouplerKind.EXTERNAL
    return fabric.slot_for_coupler(Coupler(a, b, kind))


def weights_to_targets(fabric: Fabric, problem: IsingProblem, design: DacDesign) -> dict:
    """DAC states for every h (flux_bias knob) and J (coupler DAC) of a hardware problem."""
    step = _flux_step(design)
    targets = {}
    for node in problem.nodes:
        targets[_weight_slot(fabric, node)] = compile_target(design, problem.h_of(node).numerator * step)
    for u, v in problem.edges:
        targets[_weight_slot(fabric, (u, v))] = compile_target(design, problem.J_of(u, v).numerator * step)
    return targets


def targets_to_problem(fabric: Fabric, states, design: DacDesign, graph: nx.Graph) -> IsingProblem:
    """Read programmed output fluxes back into quantized weights on `graph`."""
    step = _flux_step(design)

    def read(slot) -> int:
        return round_half_away(output_flux(design, states.get(slot, DacState())) / step)

    h = {node: read(_weight_slot(fabric, node)) for node in graph.nodes}
    J = {(u, v): read(_weight_slot(fabric, (u, v))) for u, v in graph.edges}
    return IsingProblem(graph=graph, h=h, J=J)


@dataclass
class ProgrammingResult:
    targets: dict
    sequence: ProgramSequence
    simulation: SimulationResult
    readback: IsingProblem
    energy: EnergyReport

    @property
    def exact(self) -> bool:
        return all(self.simulation.states.get(slot) == state for slot, state in self.targets.items())


@dataclass
class FidelityOutcome:
    seed: int
    logical_energy: Fraction
    decoded_energy: Fraction
    broken: tuple[int, ...]
    readback_exact: bool
    disturbed: int

    @property
    def passed(self) -> bool:
        return self.readback_exact and not self.broken and not self.disturbed and self.logical_energy == self.decoded_energy


@dataclass
class ProgrammingService:
    """Programs hardware problems through the simulated DAC fabric."""

    fabric: Fabric
    design: DacDesign
    params: PulseSourceParams = field(default_factory=PulseSourceParams)
    levels: BiasLevels = field(default_factory=nominal_levels)
    chain_weight: int = -WEIGHT_DENOMINATOR
    i_c: float = 55 * MICRO

    @classmethod
    def from_settings(cls, settings: Settings, fabric: Fabric | None = None) -> "ProgrammingService":
        nominal = nominal_levels()
        return cls(
            fabric=fabric or build_fabric(2, 4),
            design=problem_dac_design(),
            levels=BiasLevels(i_pwr=settings.pwr_current_ua * MICRO, phi_addr=nominal.phi_addr, phi_trig=nominal.phi_trig),
            chain_weight=settings.chain_weight,
        )

    def program_problem(self, problem: IsingProblem, strict: bool = True) -> ProgrammingResult:
        """Compile, simulate and read back a problem on hardware qubits.

        With strict=False a readback mismatch is left for the caller to report.
        """
        targets = weights_to_targets(self.fabric, problem, self.design)
        sequence = compile_program(self.fabric, targets, self.design)
        simulation = simulate(self.fabric, sequence, self.params, self.levels, self.design)
        readback = targets_to_problem(self.fabric, simulation.states, self.design, problem.graph)
        report = energy_of(sequence, self.i_c, simulation.reset_pulses)
        result = ProgrammingResult(targets, sequence, simulation, readback, report)
        if strict and not result.exact:
            raise CompileError("Simulated DAC states differ from compiled targets")
        log.info(
            "Programmed %s weights in %s events, %s SFQ moved",
            len(targets), len(sequence), report.total_sfq,
        )
        return result

    def fidelity_trial(self, seed: int, embedding: Embedding | None = None, graph: HardwareGraph | None = None) -> FidelityOutcome:
        """Random K_4 instance: logical ground state vs. decoded programmed ground state."""
        spec = ChimeraSpec.square(1)
        graph = graph or build_chimera(spec)
        embedding = embedding or embed_complete(4, spec, graph)

        rng = np.random.default_rng(seed)
        logical = random_problem(complete_problem(4).graph, rng, FIDELITY_MAX_NUMERATOR)
        physical = embed_problem(logical, embedding, self.chain_weight)
        programmed = self.program_problem(physical, strict=False)

        logical_best = brute_force(logical)
        physical_best = brute_force(programmed.readback)
        decoded = decode(physical_best.best_config, embedding)
        outcome = FidelityOutcome(
            seed=seed,
            logical_energy=logical_best.best_energy,
            decoded_energy=energy(logical, decoded.config),
            broken=decoded.broken,
            readback_exact=programmed.readback.h == physical.h and programmed.readback.J == physical.J,
            disturbed=len(programmed.simulation.disturbed),
        )
        log.debug("Fidelity trial seed=%s passed=%s", seed, outcome.passed)
        return outcome

    def run_fidelity(self, trials: int, seed: int = 0) -> list[FidelityOutcome]:
        spec = ChimeraSpec.square(1)
        graph = build_chimera(spec)
        embedding = embed_complete(4, spec, graph)
        outcomes = [self.fidelity_trial(seed + i, embedding, graph) for i in range(trials)]
        log.info("Fidelity: %s/%s trials passed", sum(o.passed for o in outcomes), trials)
        return outcomes

